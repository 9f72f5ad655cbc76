//! Gaussian process regression: posterior mean/variance with analytic
//! gradients, and marginal-likelihood hyperparameter fitting.
//!
//! The posterior at a query point is
//! `mu(x) = k(x, X) Kt^-1 y` and `s2(x) = k(x, x) - k(x, X) Kt^-1 k(X, x)`
//! with `Kt = K(X, X) + sigma_n^2 I` (plus jitter when needed), factored
//! once by Cholesky at fit time and queried through triangular solves.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rayon::prelude::*;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelFamily};
use crate::opt::{local_maximize, Differentiable, LocalSearchConfig, Objective};
use crate::rng;

const LN_2PI: f64 = 1.8378770664093453;

/// Jitter ladder: multiples of `sigma_s^2` added to the diagonal until the
/// Cholesky succeeds.
const JITTERS: [f64; 7] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// How the observation noise enters the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseMode {
    /// `sigma_n` is pinned to the given value.
    Fixed(f64),
    /// `sigma_n` is fitted along with the kernel hyperparameters.
    Fitted,
}

/// Log-parameterized hyperparameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub log_signal_scale: f64,
    pub log_lengthscales: Vec<f64>,
    /// `None` when the noise is frozen.
    pub log_noise: Option<f64>,
}

/// Search box for the log hyperparameters, sized for unit-cube inputs and
/// standardized targets. The noise floor of 1e-8 keeps near-noiseless fits
/// representable.
pub const LOG_SIGNAL_BOUNDS: (f64, f64) = (-5.0, 5.0);
pub const LOG_LENGTHSCALE_BOUNDS: (f64, f64) = (-5.0, 5.0);
pub const LOG_NOISE_BOUNDS: (f64, f64) = (-18.420680743952367, 1.0); // ln(1e-8) .. ln(e)

/// Multi-start settings for the marginal-likelihood fit.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub family: KernelFamily,
    pub noise: NoiseMode,
    /// Number of quasi-Newton starts in log-hyperparameter space.
    pub n_starts: usize,
    pub search: LocalSearchConfig,
    pub seed: u64,
}

impl FitConfig {
    pub fn new(family: KernelFamily, noise: NoiseMode, seed: u64) -> Self {
        FitConfig {
            family,
            noise,
            n_starts: 8,
            search: LocalSearchConfig {
                max_iters: 100,
                ..LocalSearchConfig::default()
            },
            seed,
        }
    }
}

/// A fitted, immutable surrogate. Read-only queries are safe to share
/// across threads.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: Kernel,
    noise: f64,
    train_x: Vec<Vec<f64>>,
    train_y: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
    log_marginal: f64,
}

/// Posterior mean, variance, and both gradients at one query point.
#[derive(Debug, Clone)]
pub struct PosteriorEval {
    pub mu: f64,
    pub var: f64,
    pub dmu: Vec<f64>,
    pub dvar: Vec<f64>,
}

fn gram(kernel: &Kernel, x: &[Vec<f64>]) -> DMatrix<f64> {
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&x[i], &x[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Factor `kt + e*sigma_s^2*I`, escalating `e` through the jitter ladder.
fn chol_with_jitter(
    kt: &DMatrix<f64>,
    sigma_s2: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(kt.clone()) {
        return Ok((c, 0.0));
    }
    for &eps in &JITTERS {
        let mut m = kt.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += eps * sigma_s2;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, eps * sigma_s2));
        }
    }
    Err(Error::IllConditioned {
        max_jitter: JITTERS[JITTERS.len() - 1] * sigma_s2,
    })
}

impl GpModel {
    /// Build a model at fixed hyperparameters.
    pub fn from_hyperparams(
        x: &[Vec<f64>],
        y: &[f64],
        kernel: Kernel,
        noise: f64,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Config("need at least one observation".into()));
        }
        let d = kernel.dim();
        for (i, xi) in x.iter().enumerate() {
            if xi.len() != d || xi.iter().any(|v| !v.is_finite()) {
                return Err(Error::DomainViolation(format!(
                    "training input {i} has wrong dimension or non-finite entries"
                )));
            }
        }
        if y.len() != x.len() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("targets must match inputs and be finite".into()));
        }
        if !(noise >= 0.0) {
            return Err(Error::Config(format!("noise must be nonnegative, got {noise}")));
        }
        let n = x.len();
        let sigma_s2 = kernel.signal_scale() * kernel.signal_scale();
        let mut kt = gram(&kernel, x);
        for i in 0..n {
            kt[(i, i)] += noise * noise;
        }
        let (chol, jitter) = chol_with_jitter(&kt, sigma_s2)?;
        let yv = DVector::from_column_slice(y);
        let alpha = chol.solve(&yv);
        let log_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
        let log_marginal = -0.5 * yv.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * LN_2PI;
        Ok(GpModel {
            kernel,
            noise,
            train_x: x.to_vec(),
            train_y: yv,
            chol,
            alpha,
            jitter,
            log_marginal,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn n_train(&self) -> usize {
        self.train_x.len()
    }

    pub fn train_inputs(&self) -> &[Vec<f64>] {
        &self.train_x
    }

    pub fn train_targets(&self) -> Vec<f64> {
        self.train_y.iter().copied().collect()
    }

    /// Log marginal likelihood of the training data under this model.
    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }

    /// Lower-triangular factor of the regularized covariance.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    fn kvec(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.train_x.len(),
            self.train_x.iter().map(|xi| self.kernel.eval(x, xi)),
        )
    }

    /// Posterior mean and variance; the variance is clamped to `[0, inf)`.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let kvec = self.kvec(x);
        let mu = kvec.dot(&self.alpha);
        let w = self.chol.solve(&kvec);
        let var = self.kernel.eval(x, x) - kvec.dot(&w);
        (mu, var.max(0.0))
    }

    /// Gradients of the posterior mean and variance.
    pub fn posterior_grad(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let full = self.posterior_full(x);
        (full.dmu, full.dvar)
    }

    /// Mean, variance, and both gradients sharing one set of solves.
    pub fn posterior_full(&self, x: &[f64]) -> PosteriorEval {
        let n = self.train_x.len();
        let d = self.dim();
        let kvec = self.kvec(x);
        let mu = kvec.dot(&self.alpha);
        let w = self.chol.solve(&kvec);
        let var = (self.kernel.eval(x, x) - kvec.dot(&w)).max(0.0);
        let mut dmu = vec![0.0; d];
        let mut dvar = vec![0.0; d];
        for i in 0..n {
            let gi = self.kernel.grad_x1(x, &self.train_x[i]);
            let (ai, wi) = (self.alpha[i], w[i]);
            for (j, &gij) in gi.iter().enumerate() {
                dmu[j] += gij * ai;
                dvar[j] -= 2.0 * gij * wi;
            }
        }
        PosteriorEval { mu, var, dmu, dvar }
    }

    /// Key-value text form (hyperparameters plus data), for run records.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        s.push_str("format = acqregret-gp-v1\n");
        s.push_str(&format!("kernel = {}\n", self.kernel.family().name()));
        s.push_str(&format!("signal_scale = {}\n", self.kernel.signal_scale()));
        let ls: Vec<String> = self.kernel.lengthscales().iter().map(|v| v.to_string()).collect();
        s.push_str(&format!("lengthscales = {}\n", ls.join(",")));
        s.push_str(&format!("noise = {}\n", self.noise));
        s.push_str(&format!("n = {}\n", self.n_train()));
        s.push_str(&format!("d = {}\n", self.dim()));
        for (i, xi) in self.train_x.iter().enumerate() {
            let row: Vec<String> = xi.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("x_{i} = {}\n", row.join(",")));
        }
        let yv: Vec<String> = self.train_y.iter().map(|v| v.to_string()).collect();
        s.push_str(&format!("y = {}\n", yv.join(",")));
        s
    }

    /// Rebuild a model from its key-value text form.
    pub fn from_kv_string(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected 'key = value', got '{line}'")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            map.get(k)
                .ok_or_else(|| Error::Parse(format!("missing key '{k}'")))
        };
        if get("format")? != "acqregret-gp-v1" {
            return Err(Error::Parse("unsupported model format".into()));
        }
        let family = KernelFamily::parse(get("kernel")?)?;
        let signal: f64 = get("signal_scale")?
            .parse()
            .map_err(|e| Error::Parse(format!("signal_scale: {e}")))?;
        let parse_list = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{e}"))))
                .collect()
        };
        let ls = parse_list(get("lengthscales")?)?;
        let noise: f64 = get("noise")?
            .parse()
            .map_err(|e| Error::Parse(format!("noise: {e}")))?;
        let n: usize = get("n")?.parse().map_err(|e| Error::Parse(format!("n: {e}")))?;
        let mut x = Vec::with_capacity(n);
        for i in 0..n {
            x.push(parse_list(get(&format!("x_{i}"))?)?);
        }
        let y = parse_list(get("y")?)?;
        let kernel = Kernel::new(family, signal, ls)?;
        GpModel::from_hyperparams(&x, &y, kernel, noise)
    }
}

/// Log marginal likelihood as a maximization surface over log hyperparameters.
///
/// Layout: `[log sigma_s, log l_1 .. log l_d, (log sigma_n)]`, the last entry
/// present only in fitted-noise mode. Hyperparameters that break the Cholesky
/// even after jitter get `-inf`.
struct LmlSurface<'a> {
    x: &'a [Vec<f64>],
    y: DVector<f64>,
    family: KernelFamily,
    noise: NoiseMode,
}

impl LmlSurface<'_> {
    fn dim(&self) -> usize {
        self.x[0].len()
    }

    fn unpack(&self, theta: &[f64]) -> (Kernel, f64) {
        let d = self.dim();
        let kernel = Kernel::new(
            self.family,
            theta[0].exp(),
            theta[1..=d].iter().map(|t| t.exp()).collect(),
        )
        .expect("exp of finite logs is positive");
        let sigma_n = match self.noise {
            NoiseMode::Fixed(v) => v,
            NoiseMode::Fitted => theta[d + 1].exp(),
        };
        (kernel, sigma_n)
    }

    fn compute(&self, theta: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let (kernel, sigma_n) = self.unpack(theta);
        let n = self.x.len();
        let d = self.dim();
        let sigma_s2 = kernel.signal_scale() * kernel.signal_scale();
        let mut kt = gram(&kernel, self.x);
        for i in 0..n {
            kt[(i, i)] += sigma_n * sigma_n;
        }
        let (chol, jitter) = match chol_with_jitter(&kt, sigma_s2) {
            Ok(v) => v,
            Err(_) => return (f64::NEG_INFINITY, vec![0.0; theta.len()]),
        };
        for i in 0..n {
            kt[(i, i)] += jitter;
        }
        let alpha = chol.solve(&self.y);
        let log_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
        let lml = -0.5 * self.y.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * LN_2PI;
        if !want_grad {
            return (lml, Vec::new());
        }
        // d lml / d theta_j = 1/2 tr((alpha alpha^T - Kt^-1) dKt/dtheta_j)
        let kinv = chol.inverse();
        let a = &alpha * alpha.transpose() - kinv;
        let mut grad = vec![0.0; theta.len()];
        // dKt/d(log sigma_s) = 2 (Kt - sigma_n^2 I); the jitter scales with
        // sigma_s^2 so it is included through Kt.
        let mut tr_akt = 0.0;
        let mut tr_a = 0.0;
        for p in 0..n {
            tr_a += a[(p, p)];
            for q in 0..n {
                tr_akt += a[(p, q)] * kt[(p, q)];
            }
        }
        grad[0] = tr_akt - sigma_n * sigma_n * tr_a;
        // Lengthscale entries vanish on the diagonal; the two symmetric
        // triangles cancel the 1/2 in front of the trace.
        for p in 0..n {
            for q in 0..p {
                let gl = kernel.grad_log_lengthscales(&self.x[p], &self.x[q]);
                let apq = a[(p, q)];
                for (i, &g) in gl.iter().enumerate() {
                    grad[1 + i] += apq * g;
                }
            }
        }
        if let NoiseMode::Fitted = self.noise {
            grad[d + 1] = sigma_n * sigma_n * tr_a;
        }
        (lml, grad)
    }
}

impl Objective for LmlSurface<'_> {
    fn value(&self, theta: &[f64]) -> f64 {
        self.compute(theta, false).0
    }
}

impl Differentiable for LmlSurface<'_> {
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        self.compute(theta, true).1
    }

    fn value_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        self.compute(theta, true)
    }
}

/// Fit a GP by maximizing the log marginal likelihood from several
/// quasi-Newton starts in log-hyperparameter space.
pub fn fit_gp(
    x: &[Vec<f64>],
    y: &[f64],
    family: KernelFamily,
    noise: NoiseMode,
    seed: u64,
) -> Result<GpModel> {
    fit_gp_with(x, y, &FitConfig::new(family, noise, seed))
}

/// [`fit_gp`] with explicit multi-start and search settings.
pub fn fit_gp_with(x: &[Vec<f64>], y: &[f64], cfg: &FitConfig) -> Result<GpModel> {
    if x.is_empty() || x[0].is_empty() {
        return Err(Error::Config("need at least one observation".into()));
    }
    if cfg.n_starts == 0 {
        return Err(Error::Config("n_starts must be >= 1".into()));
    }
    let d = x[0].len();
    let surface = LmlSurface {
        x,
        y: DVector::from_column_slice(y),
        family: cfg.family,
        noise: cfg.noise,
    };
    let n_theta = match cfg.noise {
        NoiseMode::Fixed(_) => 1 + d,
        NoiseMode::Fitted => 2 + d,
    };
    let mut lower = vec![LOG_SIGNAL_BOUNDS.0];
    let mut upper = vec![LOG_SIGNAL_BOUNDS.1];
    lower.extend(std::iter::repeat(LOG_LENGTHSCALE_BOUNDS.0).take(d));
    upper.extend(std::iter::repeat(LOG_LENGTHSCALE_BOUNDS.1).take(d));
    if n_theta == 2 + d {
        lower.push(LOG_NOISE_BOUNDS.0);
        upper.push(LOG_NOISE_BOUNDS.1);
    }
    let bounds = Domain::new(lower, upper)?;

    // First start is a fixed heuristic; the rest are uniform in the box.
    let mut starts = Vec::with_capacity(cfg.n_starts);
    let mut theta0 = vec![0.0; n_theta];
    for t in theta0[1..=d].iter_mut() {
        *t = (0.25f64).ln();
    }
    if n_theta == 2 + d {
        theta0[d + 1] = (1e-3f64).ln();
    }
    starts.push(theta0);
    let mut stream = rng::stream(cfg.seed, &[0x66_69_74]);
    for _ in 1..cfg.n_starts {
        starts.push(bounds.sample(&mut stream));
    }

    let runs: Vec<_> = starts
        .par_iter()
        .map(|s| local_maximize(&surface, &bounds, s, &cfg.search))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<usize> = None;
    for (i, r) in runs.iter().enumerate() {
        if r.value.is_finite() && best.map_or(true, |b| r.value > runs[b].value) {
            best = Some(i);
        }
    }
    let best = best.ok_or(Error::IllConditioned {
        max_jitter: JITTERS[JITTERS.len() - 1],
    })?;
    let (kernel, sigma_n) = surface.unpack(&runs[best].x_star);
    GpModel::from_hyperparams(x, y, kernel, sigma_n)
}

/// Shift targets to zero mean and unit variance; returns the transformed
/// values with the (mean, scale) needed to undo it. A degenerate spread
/// falls back to scale 1.
pub fn standardize(y: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = if std > 1e-12 { std } else { 1.0 };
    (y.iter().map(|v| (v - mean) / scale).collect(), mean, scale)
}

/// Uniform design in a domain from a seeded stream.
pub fn uniform_design<R: Rng>(domain: &Domain, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| domain.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;

    fn se_kernel(d: usize) -> Kernel {
        Kernel::new(KernelFamily::SquaredExponential, 1.0, vec![1.0; d]).unwrap()
    }

    #[test]
    fn single_point_closed_form() {
        let m = GpModel::from_hyperparams(&[vec![0.0]], &[1.0], se_kernel(1), 0.1).unwrap();
        let (mu, var) = m.posterior(&[0.0]);
        assert!((mu - 1.0 / 1.01).abs() < 1e-12, "mu = {mu}");
        assert!((var - (1.0 - 1.0 / 1.01)).abs() < 1e-12, "var = {var}");
    }

    #[test]
    fn zero_targets_give_zero_mean_everywhere() {
        let x = vec![vec![0.1, 0.2], vec![0.5, 0.9], vec![0.3, 0.4]];
        let m = GpModel::from_hyperparams(&x, &[0.0, 0.0, 0.0], se_kernel(2), 0.01).unwrap();
        for q in [[0.0, 0.0], [0.7, 0.3], [1.5, -2.0]] {
            let (mu, _) = m.posterior(&q);
            assert_eq!(mu, 0.0);
            let (dmu, _) = m.posterior_grad(&q);
            assert!(dmu.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn far_queries_revert_to_prior() {
        let x = vec![vec![0.0], vec![0.5]];
        let m = GpModel::from_hyperparams(&x, &[1.0, -1.0], se_kernel(1), 0.0).unwrap();
        let (mu, var) = m.posterior(&[100.0]);
        assert!(mu.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-6);
    }

    #[test]
    fn interpolates_with_zero_noise() {
        let x = vec![vec![0.0, 0.0], vec![0.6, 0.2], vec![0.3, 0.9], vec![0.9, 0.7]];
        let y = [1.0, -0.5, 2.0, 0.3];
        let m = GpModel::from_hyperparams(
            &x,
            &y,
            Kernel::new(KernelFamily::Matern52, 1.5, vec![0.4, 0.4]).unwrap(),
            0.0,
        )
        .unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            let (mu, var) = m.posterior(xi);
            assert!((mu - yi).abs() < 1e-6 * (1.0 + yi.abs()), "mu {mu} vs {yi}");
            let s2 = m.kernel().signal_scale().powi(2);
            assert!(var <= 1e-6 * s2, "var {var}");
        }
    }

    #[test]
    fn chol_reconstructs_regularized_gram() {
        let x = vec![vec![0.1], vec![0.4], vec![0.8]];
        let m = GpModel::from_hyperparams(&x, &[0.3, -0.2, 0.9], se_kernel(1), 0.05).unwrap();
        let l = m.chol_factor();
        let recon = &l * l.transpose();
        for i in 0..3 {
            for j in 0..3 {
                let expect = m.kernel().eval(&x[i], &x[j])
                    + if i == j { 0.05 * 0.05 + m.jitter() } else { 0.0 };
                assert!(
                    (recon[(i, j)] - expect).abs() <= 1e-8 * expect.abs().max(1.0),
                    "({i},{j}): {} vs {expect}",
                    recon[(i, j)]
                );
            }
        }
    }

    #[test]
    fn posterior_gradients_match_finite_differences() {
        use rand::Rng;
        let mut rng = rng::stream(3, &[1]);
        for family in [KernelFamily::SquaredExponential, KernelFamily::Matern52] {
            for _ in 0..20 {
                let d = rng.random_range(1..=3);
                let n = rng.random_range(2..=8);
                let x: Vec<Vec<f64>> =
                    (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let kernel = Kernel::new(
                    family,
                    rng.random_range(0.5..2.0),
                    (0..d).map(|_| rng.random_range(0.2..1.0)).collect(),
                )
                .unwrap();
                let m = GpModel::from_hyperparams(&x, &y, kernel, 0.05).unwrap();
                let q: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
                let (dmu, dvar) = m.posterior_grad(&q);
                let h = 1e-5;
                for i in 0..d {
                    let mut hi = q.clone();
                    let mut lo = q.clone();
                    hi[i] += h;
                    lo[i] -= h;
                    let (mu_h, var_h) = m.posterior(&hi);
                    let (mu_l, var_l) = m.posterior(&lo);
                    let fd_mu = (mu_h - mu_l) / (2.0 * h);
                    let fd_var = (var_h - var_l) / (2.0 * h);
                    assert!(
                        (dmu[i] - fd_mu).abs() / fd_mu.abs().max(1.0) < 1e-5,
                        "dmu {} vs {fd_mu}",
                        dmu[i]
                    );
                    assert!(
                        (dvar[i] - fd_var).abs() / fd_var.abs().max(1.0) < 1e-5,
                        "dvar {} vs {fd_var}",
                        dvar[i]
                    );
                }
            }
        }
    }

    #[test]
    fn lml_gradient_matches_finite_differences() {
        use rand::Rng;
        let mut rng = rng::stream(17, &[2]);
        let d = 2;
        let n = 6;
        let x: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for noise in [NoiseMode::Fixed(0.1), NoiseMode::Fitted] {
            let surface = LmlSurface {
                x: &x,
                y: DVector::from_column_slice(&y),
                family: KernelFamily::Matern52,
                noise,
            };
            let n_theta = if matches!(noise, NoiseMode::Fitted) { d + 2 } else { d + 1 };
            for _ in 0..10 {
                let theta: Vec<f64> =
                    (0..n_theta).map(|_| rng.random_range(-1.5..1.0)).collect();
                let (_, g) = surface.value_grad(&theta);
                let h = 1e-6;
                for i in 0..n_theta {
                    let mut hi = theta.clone();
                    let mut lo = theta.clone();
                    hi[i] += h;
                    lo[i] -= h;
                    let fd = (surface.value(&hi) - surface.value(&lo)) / (2.0 * h);
                    assert!(
                        (g[i] - fd).abs() / fd.abs().max(1.0) < 1e-4,
                        "theta grad {i}: {} vs {fd}",
                        g[i]
                    );
                }
            }
        }
    }

    #[test]
    fn fit_improves_on_every_start() {
        use rand::Rng;
        let mut rng = rng::stream(5, &[9]);
        let x: Vec<Vec<f64>> =
            (0..5).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
        let y: Vec<f64> = x.iter().map(|p| (3.0 * p[0]).sin() + p[1]).collect();
        let (ys, _, _) = standardize(&y);
        let m = fit_gp(&x, &ys, KernelFamily::Matern52, NoiseMode::Fitted, 7).unwrap();
        // The fitted optimum must dominate the heuristic initial hyperparameters.
        let init = GpModel::from_hyperparams(
            &x,
            &ys,
            Kernel::new(KernelFamily::Matern52, 1.0, vec![0.25, 0.25]).unwrap(),
            1e-3,
        )
        .unwrap();
        assert!(m.log_marginal() >= init.log_marginal() - 1e-9);
    }

    #[test]
    fn variance_nonnegative_on_random_queries() {
        use rand::Rng;
        let mut rng = rng::stream(6, &[4]);
        for _ in 0..20 {
            let n = rng.random_range(2..=12);
            let x: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let kernel = Kernel::new(KernelFamily::Matern52, 1.0, vec![0.3, 0.3]).unwrap();
            let m = GpModel::from_hyperparams(&x, &y, kernel, 1e-8).unwrap();
            for _ in 0..500 {
                let q = vec![rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5)];
                assert!(m.posterior(&q).1 >= 0.0);
            }
        }
    }

    #[test]
    fn kv_round_trip_preserves_posterior() {
        let x = vec![vec![0.2, 0.4], vec![0.8, 0.1], vec![0.5, 0.9]];
        let y = [0.3, -1.2, 0.7];
        let kernel = Kernel::new(KernelFamily::Matern52, 1.3, vec![0.5, 0.8]).unwrap();
        let m = GpModel::from_hyperparams(&x, &y, kernel, 0.01).unwrap();
        let text = m.to_kv_string();
        let m2 = GpModel::from_kv_string(&text).unwrap();
        for q in [[0.0, 0.0], [0.6, 0.6], [1.0, 0.2]] {
            assert_eq!(m.posterior(&q), m2.posterior(&q));
        }
    }
}
