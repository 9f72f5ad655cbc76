//! Maximization of scalar surfaces over box domains.
//!
//! Three strategies share the [`OptResult`] contract: deterministic global
//! search by dividing rectangles ([`direct`]), a single bound-constrained
//! quasi-Newton ascent, and its multi-started wrapper ([`local`]).

pub mod direct;
pub mod local;

pub use direct::{direct_maximize, DirectConfig, Rect};
pub use local::{local_maximize, multi_start_maximize, multi_start_results, LocalSearchConfig};

/// A scalar surface to maximize over a box.
pub trait Objective: Sync {
    fn value(&self, x: &[f64]) -> f64;
}

/// A surface with an analytic gradient.
pub trait Differentiable: Objective {
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Value and gradient together; override when they share work.
    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.gradient(x))
    }
}

/// Which maximization strategy produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Deterministic dividing-rectangles global search.
    Global,
    /// Single quasi-Newton ascent.
    Local,
    /// Best of N quasi-Newton ascents from random starts.
    MultiLocal(usize),
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::Global => write!(f, "direct"),
            Strategy::Local => write!(f, "local"),
            Strategy::MultiLocal(n) => write!(f, "local({n})"),
        }
    }
}

/// Outcome of one acquisition maximization.
#[derive(Debug, Clone)]
pub struct OptResult {
    /// Maximizer candidate, inside the domain bounds.
    pub x_star: Vec<f64>,
    /// Surface value at `x_star`.
    pub value: f64,
    pub strategy: Strategy,
    /// Objective evaluations consumed (a fused value+gradient call counts once).
    pub n_evals: usize,
    /// Wall-clock seconds spent in the maximization.
    pub wall_time: f64,
    pub converged: bool,
    /// Start points used, recorded for reproducibility (empty for Global).
    pub start_points: Vec<Vec<f64>>,
}
