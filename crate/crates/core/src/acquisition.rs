//! PI, EI, and GP-UCB over a fitted posterior, in maximization orientation,
//! with analytic gradients.
//!
//! PI and EI improve on the incumbent `f(x_dd)`, the minimum observed
//! target. Both are defined through `z(x) = (f(x_dd) - mu(x)) / sigma(x)`
//! when `sigma(x) > sigma_n` and are zero (with zero gradient) otherwise.
//! GP-UCB keeps the minimization-oriented sign: `-mu(x) + alpha sigma(x)`.

use crate::error::{Error, Result};
use crate::gp::{GpModel, PosteriorEval};
use crate::normal::{norm_cdf, norm_pdf};
use crate::opt::{Differentiable, Objective};

/// EI underflow guard: beyond this z the improvement is numerically zero.
const Z_UNDERFLOW: f64 = -30.0;

/// Acquisition families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquisitionKind {
    Pi,
    Ei,
    Ucb,
}

impl AcquisitionKind {
    pub fn name(&self) -> &'static str {
        match self {
            AcquisitionKind::Pi => "pi",
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::Ucb => "ucb",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pi" => Ok(AcquisitionKind::Pi),
            "ei" => Ok(AcquisitionKind::Ei),
            "ucb" => Ok(AcquisitionKind::Ucb),
            other => Err(Error::Config(format!("unknown acquisition '{other}'"))),
        }
    }
}

/// A fully specified acquisition: the family plus whichever reference value
/// it needs (incumbent for PI/EI, exploration coefficient for UCB).
#[derive(Debug, Clone)]
pub struct AcquisitionSpec {
    kind: AcquisitionKind,
    /// Minimum observed target, required by PI and EI.
    incumbent: Option<f64>,
    /// Exploration-exploitation coefficient, UCB only.
    alpha: f64,
}

impl AcquisitionSpec {
    pub fn pi(incumbent: f64) -> Self {
        AcquisitionSpec {
            kind: AcquisitionKind::Pi,
            incumbent: Some(incumbent),
            alpha: 0.0,
        }
    }

    pub fn ei(incumbent: f64) -> Self {
        AcquisitionSpec {
            kind: AcquisitionKind::Ei,
            incumbent: Some(incumbent),
            alpha: 0.0,
        }
    }

    pub fn ucb(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Config(format!("ucb alpha must be positive, got {alpha}")));
        }
        Ok(AcquisitionSpec {
            kind: AcquisitionKind::Ucb,
            incumbent: None,
            alpha,
        })
    }

    /// Build the spec a BO round needs: incumbent = min observed target.
    pub fn for_kind(kind: AcquisitionKind, y: &[f64], ucb_alpha: f64) -> Result<Self> {
        match kind {
            AcquisitionKind::Ucb => AcquisitionSpec::ucb(ucb_alpha),
            _ => {
                let incumbent = y
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                if !incumbent.is_finite() {
                    return Err(Error::Config("PI/EI need at least one observation".into()));
                }
                Ok(match kind {
                    AcquisitionKind::Pi => AcquisitionSpec::pi(incumbent),
                    _ => AcquisitionSpec::ei(incumbent),
                })
            }
        }
    }

    pub fn kind(&self) -> AcquisitionKind {
        self.kind
    }

    pub fn incumbent(&self) -> Option<f64> {
        self.incumbent
    }

    fn incumbent_checked(&self) -> Result<f64> {
        self.incumbent.ok_or_else(|| {
            Error::Config(format!("{} needs an incumbent value", self.kind.name()))
        })
    }
}

/// The z-score of the improvement, inactive wherever the posterior spread
/// does not exceed the observation noise.
#[derive(Debug, Clone, Copy)]
pub struct ZScore {
    pub z: f64,
    pub active: bool,
}

impl ZScore {
    fn at(incumbent: f64, mu: f64, sigma: f64, sigma_n: f64) -> ZScore {
        if sigma > sigma_n {
            ZScore {
                z: (incumbent - mu) / sigma,
                active: true,
            }
        } else {
            ZScore { z: 0.0, active: false }
        }
    }
}

/// Acquisition value at `x`.
pub fn acq_value(spec: &AcquisitionSpec, model: &GpModel, x: &[f64]) -> Result<f64> {
    let (mu, var) = model.posterior(x);
    let sigma = var.sqrt();
    value_from_posterior(spec, model.noise(), mu, sigma)
}

fn value_from_posterior(spec: &AcquisitionSpec, sigma_n: f64, mu: f64, sigma: f64) -> Result<f64> {
    match spec.kind {
        AcquisitionKind::Ucb => Ok(-mu + spec.alpha * sigma),
        AcquisitionKind::Pi => {
            let inc = spec.incumbent_checked()?;
            let zs = ZScore::at(inc, mu, sigma, sigma_n);
            Ok(if zs.active { norm_cdf(zs.z) } else { 0.0 })
        }
        AcquisitionKind::Ei => {
            let inc = spec.incumbent_checked()?;
            let zs = ZScore::at(inc, mu, sigma, sigma_n);
            if !zs.active || zs.z < Z_UNDERFLOW {
                return Ok(0.0);
            }
            Ok((inc - mu) * norm_cdf(zs.z) + sigma * norm_pdf(zs.z))
        }
    }
}

/// Acquisition gradient at `x`. Where PI/EI are clamped to zero the gradient
/// is the zero vector, keeping local search stationary there.
pub fn acq_grad(spec: &AcquisitionSpec, model: &GpModel, x: &[f64]) -> Result<Vec<f64>> {
    let post = model.posterior_full(x);
    grad_from_posterior(spec, model.noise(), &post)
}

fn grad_from_posterior(
    spec: &AcquisitionSpec,
    sigma_n: f64,
    post: &PosteriorEval,
) -> Result<Vec<f64>> {
    let d = post.dmu.len();
    let sigma = post.var.sqrt();
    // dsigma/dx = dvar/dx / (2 sigma); guarded so a vanishing spread cannot
    // produce non-finite components.
    let dsigma: Vec<f64> = post
        .dvar
        .iter()
        .map(|&dv| dv / (2.0 * sigma.max(1e-12)))
        .collect();
    match spec.kind {
        AcquisitionKind::Ucb => Ok((0..d)
            .map(|i| -post.dmu[i] + spec.alpha * dsigma[i])
            .collect()),
        AcquisitionKind::Pi => {
            let inc = spec.incumbent_checked()?;
            let zs = ZScore::at(inc, post.mu, sigma, sigma_n);
            if !zs.active {
                return Ok(vec![0.0; d]);
            }
            // dz/dx = (mu - inc)/sigma^2 dsigma/dx - dmu/dx / sigma
            let pdf = norm_pdf(zs.z);
            Ok((0..d)
                .map(|i| {
                    pdf * ((post.mu - inc) / (sigma * sigma) * dsigma[i] - post.dmu[i] / sigma)
                })
                .collect())
        }
        AcquisitionKind::Ei => {
            let inc = spec.incumbent_checked()?;
            let zs = ZScore::at(inc, post.mu, sigma, sigma_n);
            if !zs.active || zs.z < Z_UNDERFLOW {
                return Ok(vec![0.0; d]);
            }
            // The four-term derivative collapses to
            // -Phi(z) dmu/dx + phi(z) dsigma/dx.
            let cdf = norm_cdf(zs.z);
            let pdf = norm_pdf(zs.z);
            Ok((0..d).map(|i| -cdf * post.dmu[i] + pdf * dsigma[i]).collect())
        }
    }
}

/// An acquisition bound to a model: the surface the inner optimizers maximize.
pub struct AcqSurface<'a> {
    spec: AcquisitionSpec,
    model: &'a GpModel,
}

impl<'a> AcqSurface<'a> {
    pub fn new(spec: AcquisitionSpec, model: &'a GpModel) -> Self {
        AcqSurface { spec, model }
    }

    pub fn spec(&self) -> &AcquisitionSpec {
        &self.spec
    }

    pub fn model(&self) -> &GpModel {
        self.model
    }
}

impl Objective for AcqSurface<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        acq_value(&self.spec, self.model, x).expect("spec validated at construction")
    }
}

impl Differentiable for AcqSurface<'_> {
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        acq_grad(&self.spec, self.model, x).expect("spec validated at construction")
    }

    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let post = self.model.posterior_full(x);
        let sigma = post.var.sqrt();
        let v = value_from_posterior(&self.spec, self.model.noise(), post.mu, sigma)
            .expect("spec validated at construction");
        let g = grad_from_posterior(&self.spec, self.model.noise(), &post)
            .expect("spec validated at construction");
        (v, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::GpModel;
    use crate::kernel::{Kernel, KernelFamily};
    use crate::rng::stream;
    use rand::Rng;

    fn random_model(seed: u64, n: usize, d: usize, family: KernelFamily) -> GpModel {
        let mut rng = stream(seed, &[77]);
        let x: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let kernel = Kernel::new(
            family,
            rng.random_range(0.5..2.0),
            (0..d).map(|_| rng.random_range(0.2..1.0)).collect(),
        )
        .unwrap();
        GpModel::from_hyperparams(&x, &y, kernel, 0.05).unwrap()
    }

    #[test]
    fn trivial_values() {
        // mu = incumbent, sigma > sigma_n: PI = Phi(0) = 1/2.
        let spec = AcquisitionSpec::pi(0.0);
        let v = value_from_posterior(&spec, 0.01, 0.0, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        // EI at mu = incumbent, sigma = 1: phi(0) = 1/sqrt(2 pi).
        let spec = AcquisitionSpec::ei(0.0);
        let v = value_from_posterior(&spec, 0.01, 0.0, 1.0).unwrap();
        assert!((v - 0.3989422804014327).abs() < 1e-15);
        // UCB with mu = 1, sigma = 2, alpha = 2.
        let spec = AcquisitionSpec::ucb(2.0).unwrap();
        let v = value_from_posterior(&spec, 0.0, 1.0, 2.0).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
    }

    #[test]
    fn clamped_region_is_zero_with_zero_gradient() {
        let spec_ei = AcquisitionSpec::ei(0.5);
        let spec_pi = AcquisitionSpec::pi(0.5);
        // sigma <= sigma_n deactivates the z-score.
        assert_eq!(value_from_posterior(&spec_ei, 0.2, 0.0, 0.1).unwrap(), 0.0);
        assert_eq!(value_from_posterior(&spec_pi, 0.2, 0.0, 0.1).unwrap(), 0.0);
        let post = PosteriorEval {
            mu: 0.0,
            var: 0.01,
            dmu: vec![1.0, -2.0],
            dvar: vec![0.5, 0.5],
        };
        assert_eq!(grad_from_posterior(&spec_ei, 0.2, &post).unwrap(), vec![0.0, 0.0]);
        assert_eq!(grad_from_posterior(&spec_pi, 0.2, &post).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn missing_incumbent_is_a_configuration_error() {
        let spec = AcquisitionSpec {
            kind: AcquisitionKind::Ei,
            incumbent: None,
            alpha: 0.0,
        };
        let m = random_model(1, 4, 2, KernelFamily::SquaredExponential);
        assert!(acq_value(&spec, &m, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn ucb_is_monotone_in_alpha() {
        let m = random_model(2, 5, 2, KernelFamily::Matern52);
        let x = [0.15, 0.85];
        let mut prev = f64::NEG_INFINITY;
        for a in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let v = acq_value(&AcquisitionSpec::ucb(a).unwrap(), &m, &x).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn ranges() {
        let mut rng = stream(4, &[5]);
        for seed in 0..10u64 {
            let m = random_model(seed, 6, 2, KernelFamily::Matern52);
            let inc = m.train_targets().iter().copied().fold(f64::INFINITY, f64::min);
            let pi = AcquisitionSpec::pi(inc);
            let ei = AcquisitionSpec::ei(inc);
            for _ in 0..200 {
                let x = vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
                let vp = acq_value(&pi, &m, &x).unwrap();
                let ve = acq_value(&ei, &m, &x).unwrap();
                assert!((0.0..=1.0).contains(&vp));
                assert!(ve >= -1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = stream(9, &[6]);
        for seed in 0..8u64 {
            let m = random_model(seed + 100, 6, 2, KernelFamily::Matern52);
            let inc = m.train_targets().iter().copied().fold(f64::INFINITY, f64::min);
            for spec in [
                AcquisitionSpec::pi(inc),
                AcquisitionSpec::ei(inc),
                AcquisitionSpec::ucb(2.0).unwrap(),
            ] {
                for _ in 0..12 {
                    let x = vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
                    let g = acq_grad(&spec, &m, &x).unwrap();
                    let h = 1e-5;
                    let mut fd = vec![0.0; 2];
                    for i in 0..2 {
                        let mut hi = x.clone();
                        let mut lo = x.clone();
                        hi[i] += h;
                        lo[i] -= h;
                        fd[i] = (acq_value(&spec, &m, &hi).unwrap()
                            - acq_value(&spec, &m, &lo).unwrap())
                            / (2.0 * h);
                    }
                    let num: f64 =
                        g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    let den = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0);
                    assert!(num / den < 1e-5, "{:?}: rel {}", spec.kind(), num / den);
                }
            }
        }
    }

    /// The paper-form four-term EI derivative, used as an independent check
    /// of the simplified implementation.
    fn ei_grad_four_term(inc: f64, sigma_n: f64, post: &PosteriorEval) -> Vec<f64> {
        let sigma = post.var.sqrt();
        if sigma <= sigma_n {
            return vec![0.0; post.dmu.len()];
        }
        let z = (inc - post.mu) / sigma;
        let dsigma: Vec<f64> = post.dvar.iter().map(|&dv| dv / (2.0 * sigma)).collect();
        let dz: Vec<f64> = (0..post.dmu.len())
            .map(|i| (post.mu - inc) / (sigma * sigma) * dsigma[i] - post.dmu[i] / sigma)
            .collect();
        let pdf = norm_pdf(z);
        let cdf = norm_cdf(z);
        let dpdf = -z * pdf; // phi'(z)
        (0..post.dmu.len())
            .map(|i| {
                (inc - post.mu) * pdf * dz[i] - post.dmu[i] * cdf
                    + sigma * dpdf * dz[i]
                    + dsigma[i] * pdf
            })
            .collect()
    }

    #[test]
    fn ei_two_term_equals_four_term() {
        let mut rng = stream(21, &[8]);
        for seed in 0..6u64 {
            let m = random_model(seed + 50, 7, 3, KernelFamily::SquaredExponential);
            let inc = m.train_targets().iter().copied().fold(f64::INFINITY, f64::min);
            let spec = AcquisitionSpec::ei(inc);
            for _ in 0..30 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
                let post = m.posterior_full(&x);
                let simplified = grad_from_posterior(&spec, m.noise(), &post).unwrap();
                let four = ei_grad_four_term(inc, m.noise(), &post);
                for (a, b) in simplified.iter().zip(&four) {
                    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
                }
            }
        }
    }
}
