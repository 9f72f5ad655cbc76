//! Stationary covariance functions with analytic input derivatives.
//!
//! All kernels are functions of the scaled distance
//! `d(x1, x2) = sqrt((x1 - x2)^T L^-1 (x1 - x2))` where `L` is the diagonal
//! matrix of per-axis lengthscales.

use crate::error::{Error, Result};

const SQRT_5: f64 = 2.236067977499790;
const SQRT_3: f64 = 1.7320508075688772;

/// Supported stationary kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    SquaredExponential,
    Matern52,
    Matern32,
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::SquaredExponential => "se",
            KernelFamily::Matern52 => "matern52",
            KernelFamily::Matern32 => "matern32",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "se" | "squared_exponential" | "rbf" => Ok(KernelFamily::SquaredExponential),
            "matern52" | "matern5/2" => Ok(KernelFamily::Matern52),
            "matern32" | "matern3/2" => Ok(KernelFamily::Matern32),
            other => Err(Error::Config(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// A stationary kernel: family, signal scale, and per-axis lengthscales.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    signal_scale: f64,
    lengthscales: Vec<f64>,
}

impl Kernel {
    /// Validates hyperparameters; every scale must be strictly positive.
    pub fn new(family: KernelFamily, signal_scale: f64, lengthscales: Vec<f64>) -> Result<Self> {
        if !(signal_scale > 0.0) || !signal_scale.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "signal scale must be positive, got {signal_scale}"
            )));
        }
        if lengthscales.is_empty() {
            return Err(Error::InvalidKernel("no lengthscales given".into()));
        }
        for (i, &l) in lengthscales.iter().enumerate() {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidKernel(format!(
                    "lengthscale {i} must be positive, got {l}"
                )));
            }
        }
        Ok(Kernel {
            family,
            signal_scale,
            lengthscales,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn signal_scale(&self) -> f64 {
        self.signal_scale
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Squared scaled distance `sum_i (x1_i - x2_i)^2 / l_i`.
    fn sq_dist(&self, x1: &[f64], x2: &[f64]) -> f64 {
        debug_assert_eq!(x1.len(), self.dim());
        debug_assert_eq!(x2.len(), self.dim());
        x1.iter()
            .zip(x2)
            .zip(&self.lengthscales)
            .map(|((&a, &b), &l)| (a - b) * (a - b) / l)
            .sum()
    }

    /// `k(x1, x2)`.
    pub fn eval(&self, x1: &[f64], x2: &[f64]) -> f64 {
        let s2 = self.signal_scale * self.signal_scale;
        let d2 = self.sq_dist(x1, x2);
        match self.family {
            KernelFamily::SquaredExponential => s2 * (-0.5 * d2).exp(),
            KernelFamily::Matern52 => {
                let d = d2.sqrt();
                s2 * (1.0 + SQRT_5 * d + 5.0 / 3.0 * d2) * (-SQRT_5 * d).exp()
            }
            KernelFamily::Matern32 => {
                let d = d2.sqrt();
                s2 * (1.0 + SQRT_3 * d) * (-SQRT_3 * d).exp()
            }
        }
    }

    /// `dk(x1, x2)/dx1`. For the Matern families the direction factor is
    /// undefined at `x1 == x2`; the symmetric subgradient (zero) is returned
    /// there.
    pub fn grad_x1(&self, x1: &[f64], x2: &[f64]) -> Vec<f64> {
        let s2 = self.signal_scale * self.signal_scale;
        let d2 = self.sq_dist(x1, x2);
        // Common factor c such that dk/dx1 = c * L^-1 (x1 - x2).
        let c = match self.family {
            KernelFamily::SquaredExponential => -s2 * (-0.5 * d2).exp(),
            KernelFamily::Matern52 => {
                let d = d2.sqrt();
                -(5.0 * s2 / 3.0) * (1.0 + SQRT_5 * d) * (-SQRT_5 * d).exp()
            }
            KernelFamily::Matern32 => {
                let d = d2.sqrt();
                -3.0 * s2 * (-SQRT_3 * d).exp()
            }
        };
        x1.iter()
            .zip(x2)
            .zip(&self.lengthscales)
            .map(|((&a, &b), &l)| c * (a - b) / l)
            .collect()
    }

    /// Derivatives of `k(x1, x2)` with respect to each `log(lengthscale_i)`.
    pub(crate) fn grad_log_lengthscales(&self, x1: &[f64], x2: &[f64]) -> Vec<f64> {
        let s2 = self.signal_scale * self.signal_scale;
        let d2 = self.sq_dist(x1, x2);
        // dk/d(log l_i) = c * s_i^2 / l_i.
        let c = match self.family {
            KernelFamily::SquaredExponential => 0.5 * s2 * (-0.5 * d2).exp(),
            KernelFamily::Matern52 => {
                let d = d2.sqrt();
                (5.0 * s2 / 6.0) * (1.0 + SQRT_5 * d) * (-SQRT_5 * d).exp()
            }
            KernelFamily::Matern32 => {
                let d = d2.sqrt();
                1.5 * s2 * (-SQRT_3 * d).exp()
            }
        };
        x1.iter()
            .zip(x2)
            .zip(&self.lengthscales)
            .map(|((&a, &b), &l)| c * (a - b) * (a - b) / l)
            .collect()
    }
}
