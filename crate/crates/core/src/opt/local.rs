//! Bound-constrained limited-memory quasi-Newton ascent and its N-start wrapper.
//!
//! Internally minimizes the negated surface. Steps are kept feasible by
//! capping the line search at the box boundary; the curvature history is
//! reset whenever the active set changes.

use std::collections::VecDeque;
use std::time::Instant;

use rayon::prelude::*;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::opt::{Differentiable, OptResult, Strategy};
use crate::rng;

/// Tuning knobs for the quasi-Newton ascent.
#[derive(Debug, Clone)]
pub struct LocalSearchConfig {
    /// Step-norm convergence threshold: stop when `||x_k - x_{k-1}||_2` falls below.
    pub eps_opt: f64,
    pub max_iters: usize,
    /// Number of curvature pairs kept for the inverse-Hessian approximation.
    pub memory: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        LocalSearchConfig {
            eps_opt: 1e-5,
            max_iters: 200,
            memory: 10,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
        }
    }
}

impl LocalSearchConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eps_opt > 0.0) {
            return Err(Error::Config("eps_opt must be positive".into()));
        }
        if self.max_iters == 0 || self.memory == 0 {
            return Err(Error::Config("max_iters and memory must be >= 1".into()));
        }
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(Error::Config("need 0 < c1 < c2 < 1".into()));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Per-axis activity at the box boundary.
fn active_set(x: &[f64], domain: &Domain) -> Vec<i8> {
    x.iter()
        .zip(domain.lower().iter().zip(domain.upper()))
        .map(|(&xi, (&lo, &hi))| {
            let tol = 1e-12 * (hi - lo);
            if xi - lo <= tol {
                -1
            } else if hi - xi <= tol {
                1
            } else {
                0
            }
        })
        .collect()
}

/// Gradient of the negated surface with bound-infeasible components zeroed.
fn project_gradient(g: &[f64], active: &[i8]) -> Vec<f64> {
    g.iter()
        .zip(active)
        .map(|(&gi, &a)| {
            // Minimization steps move along -g; freeze axes that would leave the box.
            if (a == -1 && gi > 0.0) || (a == 1 && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

/// Two-loop recursion: approximates `H * g` from the curvature history.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}

struct LineSearchOutcome {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    ok: bool,
}

/// Strong Wolfe line search on `phi(a) = f(x + a d)` for `a in (0, alpha_max]`.
///
/// Falls back to accepting a sufficient-decrease point when the curvature
/// condition cannot be met inside the box (a bound was hit), and reports
/// failure when no decrease is found at all.
#[allow(clippy::too_many_arguments)]
fn wolfe_search<F>(
    mut eval: F,
    d: &[f64],
    f0: f64,
    dphi0: f64,
    alpha_init: f64,
    alpha_max: f64,
    c1: f64,
    c2: f64,
) -> LineSearchOutcome
where
    F: FnMut(f64) -> (f64, Vec<f64>),
{
    let armijo = |alpha: f64, phi: f64| phi <= f0 + c1 * alpha * dphi0;
    let mut alpha_prev = 0.0;
    let mut phi_prev = f0;
    let mut alpha = alpha_init.min(alpha_max);
    let mut last: Option<(f64, f64, Vec<f64>)> = None;

    for i in 0..20 {
        let (phi_a, g_a) = eval(alpha);
        let dphi_a = dot(&g_a, d);
        if !armijo(alpha, phi_a) || (i > 0 && phi_a >= phi_prev) || phi_a.is_nan() {
            return zoom(&mut eval, d, f0, dphi0, c1, c2, alpha_prev, phi_prev, alpha);
        }
        if dphi_a.abs() <= -c2 * dphi0 {
            return LineSearchOutcome {
                alpha,
                f: phi_a,
                g: g_a,
                ok: true,
            };
        }
        if dphi_a >= 0.0 {
            return zoom(&mut eval, d, f0, dphi0, c1, c2, alpha, phi_a, alpha_prev);
        }
        if alpha >= alpha_max {
            // Still descending at the boundary; the boundary point decreases f.
            return LineSearchOutcome {
                alpha,
                f: phi_a,
                g: g_a,
                ok: true,
            };
        }
        last = Some((alpha, phi_a, g_a));
        alpha_prev = alpha;
        phi_prev = phi_a;
        alpha = (2.0 * alpha).min(alpha_max);
    }
    // Expansion budget exhausted; every kept point satisfied sufficient decrease.
    match last {
        Some((alpha, f, g)) => LineSearchOutcome {
            alpha,
            f,
            g,
            ok: true,
        },
        None => LineSearchOutcome {
            alpha: 0.0,
            f: f0,
            g: Vec::new(),
            ok: false,
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn zoom<F>(
    eval: &mut F,
    d: &[f64],
    f0: f64,
    dphi0: f64,
    c1: f64,
    c2: f64,
    mut alpha_lo: f64,
    mut phi_lo: f64,
    mut alpha_hi: f64,
) -> LineSearchOutcome
where
    F: FnMut(f64) -> (f64, Vec<f64>),
{
    let armijo = |alpha: f64, phi: f64| phi <= f0 + c1 * alpha * dphi0;
    let mut g_lo: Option<Vec<f64>> = None;
    for _ in 0..30 {
        if (alpha_hi - alpha_lo).abs() < 1e-16 * alpha_lo.abs().max(1.0) {
            break;
        }
        let alpha_j = 0.5 * (alpha_lo + alpha_hi);
        let (phi_j, g_j) = eval(alpha_j);
        let dphi_j = dot(&g_j, d);
        if !armijo(alpha_j, phi_j) || phi_j >= phi_lo || phi_j.is_nan() {
            alpha_hi = alpha_j;
        } else {
            if dphi_j.abs() <= -c2 * dphi0 {
                return LineSearchOutcome {
                    alpha: alpha_j,
                    f: phi_j,
                    g: g_j,
                    ok: true,
                };
            }
            if dphi_j * (alpha_hi - alpha_lo) >= 0.0 {
                alpha_hi = alpha_lo;
            }
            alpha_lo = alpha_j;
            phi_lo = phi_j;
            g_lo = Some(g_j);
        }
    }
    // Settle for the best sufficient-decrease point seen.
    if alpha_lo > 0.0 && armijo(alpha_lo, phi_lo) {
        let g = g_lo.unwrap_or_else(|| eval(alpha_lo).1);
        return LineSearchOutcome {
            alpha: alpha_lo,
            f: phi_lo,
            g,
            ok: true,
        };
    }
    LineSearchOutcome {
        alpha: 0.0,
        f: f0,
        g: Vec::new(),
        ok: false,
    }
}

/// Maximum feasible step along `d` from `x`.
fn max_step(x: &[f64], d: &[f64], domain: &Domain) -> f64 {
    let mut a_max = f64::INFINITY;
    for i in 0..x.len() {
        if d[i] > 0.0 {
            a_max = a_max.min((domain.upper()[i] - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            a_max = a_max.min((domain.lower()[i] - x[i]) / d[i]);
        }
    }
    a_max.max(0.0)
}

/// Quasi-Newton ascent of `obj` from `x0`, constrained to `domain`.
///
/// Terminates when the step norm drops to `cfg.eps_opt` or after
/// `cfg.max_iters` iterations; on a line-search failure the best point so
/// far is returned with `converged = false`.
pub fn local_maximize(
    obj: &dyn Differentiable,
    domain: &Domain,
    x0: &[f64],
    cfg: &LocalSearchConfig,
) -> Result<OptResult> {
    cfg.validate()?;
    if !domain.contains(x0) {
        return Err(Error::DomainViolation(format!(
            "start point {x0:?} outside domain"
        )));
    }
    let t0 = Instant::now();
    let mut n_evals = 0usize;
    // Minimize f = -obj.
    fn eval_neg(obj: &dyn Differentiable, x: &[f64], n_evals: &mut usize) -> (f64, Vec<f64>) {
        *n_evals += 1;
        let (v, mut g) = obj.value_grad(x);
        for gi in g.iter_mut() {
            *gi = -*gi;
        }
        (-v, g)
    }

    let mut x = x0.to_vec();
    let (mut f, mut g) = eval_neg(obj, &x, &mut n_evals);
    let mut converged = false;

    if f.is_finite() {
        let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut active = active_set(&x, domain);

        for _ in 0..cfg.max_iters {
            let pg = project_gradient(&g, &active);
            if pg.iter().all(|&v| v == 0.0) {
                converged = true;
                break;
            }
            let mut d: Vec<f64> = two_loop(&pg, &history).iter().map(|v| -v).collect();
            // Zero any component that would immediately leave the box.
            for i in 0..d.len() {
                if (active[i] == -1 && d[i] < 0.0) || (active[i] == 1 && d[i] > 0.0) {
                    d[i] = 0.0;
                }
            }
            let mut dphi0 = dot(&d, &g);
            if !(dphi0 < -1e-15 * norm2(&d) * norm2(&g)) {
                history.clear();
                d = pg.iter().map(|v| -v).collect();
                dphi0 = dot(&d, &g);
            }
            if dphi0 >= 0.0 || d.iter().all(|&v| v == 0.0) {
                converged = true;
                break;
            }
            let a_max = max_step(&x, &d, domain);
            if a_max <= 1e-16 {
                converged = true;
                break;
            }
            let ls = wolfe_search(
                |alpha| {
                    let xt = domain.project(
                        &x.iter()
                            .zip(&d)
                            .map(|(xi, di)| xi + alpha * di)
                            .collect::<Vec<_>>(),
                    );
                    eval_neg(obj, &xt, &mut n_evals)
                },
                &d,
                f,
                dphi0,
                1.0,
                a_max,
                cfg.wolfe_c1,
                cfg.wolfe_c2,
            );
            if !ls.ok {
                break; // line-search failure: keep best-so-far, unconverged
            }
            let x_new =
                domain.project(&x.iter().zip(&d).map(|(xi, di)| xi + ls.alpha * di).collect::<Vec<_>>());
            let step: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let step_norm = norm2(&step);

            let active_new = active_set(&x_new, domain);
            if active_new != active {
                history.clear();
            } else {
                let yv: Vec<f64> = ls.g.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&step, &yv);
                if sy > 1e-10 * norm2(&step) * norm2(&yv) {
                    history.push_back((step, yv, 1.0 / sy));
                    if history.len() > cfg.memory {
                        history.pop_front();
                    }
                }
            }
            x = x_new;
            f = ls.f;
            g = ls.g;
            active = active_new;
            if step_norm <= cfg.eps_opt {
                converged = true;
                break;
            }
        }
    }

    Ok(OptResult {
        value: -f,
        x_star: x,
        strategy: Strategy::Local,
        n_evals,
        wall_time: t0.elapsed().as_secs_f64(),
        converged,
        start_points: vec![x0.to_vec()],
    })
}

/// Per-start results of `n` independent ascents from a seeded uniform stream.
///
/// For a fixed seed the start sequence is shared across all `n`, so the
/// start set for `n` is a prefix of the start set for any `n' > n`.
pub fn multi_start_results(
    obj: &dyn Differentiable,
    domain: &Domain,
    n: usize,
    cfg: &LocalSearchConfig,
    seed: u64,
) -> Result<Vec<OptResult>> {
    if n == 0 {
        return Err(Error::Config("need at least one start".into()));
    }
    let mut rng = rng::stream(seed, &[]);
    let starts: Vec<Vec<f64>> = (0..n).map(|_| domain.sample(&mut rng)).collect();
    starts
        .par_iter()
        .map(|x0| local_maximize(obj, domain, x0, cfg))
        .collect()
}

/// Pick the winner among per-start results: maximal value, first index on ties.
pub(crate) fn reduce_best(results: &[OptResult]) -> usize {
    let mut best = 0;
    for (i, r) in results.iter().enumerate().skip(1) {
        if r.value > results[best].value {
            best = i;
        }
    }
    best
}

/// Best of `n` quasi-Newton ascents from seeded uniform starts.
pub fn multi_start_maximize(
    obj: &dyn Differentiable,
    domain: &Domain,
    n: usize,
    cfg: &LocalSearchConfig,
    seed: u64,
) -> Result<OptResult> {
    let t0 = Instant::now();
    let results = multi_start_results(obj, domain, n, cfg, seed)?;
    let best = reduce_best(&results);
    Ok(OptResult {
        x_star: results[best].x_star.clone(),
        value: results[best].value,
        strategy: Strategy::MultiLocal(n),
        n_evals: results.iter().map(|r| r.n_evals).sum(),
        wall_time: t0.elapsed().as_secs_f64(),
        converged: results[best].converged,
        start_points: results.iter().map(|r| r.start_points[0].clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opt::Objective;

    /// Concave quadratic -||x - c||^2.
    struct Quadratic {
        c: Vec<f64>,
    }

    impl crate::opt::Objective for Quadratic {
        fn value(&self, x: &[f64]) -> f64 {
            -x.iter().zip(&self.c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        }
    }

    impl Differentiable for Quadratic {
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.c).map(|(a, b)| -2.0 * (a - b)).collect()
        }
    }

    #[test]
    fn quadratic_interior_optimum() {
        let domain = Domain::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let obj = Quadratic { c: vec![0.4, -0.9] };
        let r = local_maximize(&obj, &domain, &[-1.5, 1.5], &LocalSearchConfig::default()).unwrap();
        assert!(r.converged);
        assert!(crate::domain::l2_distance(&r.x_star, &obj.c) < 1e-6);
        assert!(r.value >= obj.value(&[-1.5, 1.5]) - 1e-12);
    }

    #[test]
    fn quadratic_optimum_outside_box_projects() {
        let domain = Domain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let obj = Quadratic { c: vec![3.0, 0.5] };
        let r = local_maximize(&obj, &domain, &[0.1, 0.1], &LocalSearchConfig::default()).unwrap();
        // Projection of c onto the box is (1, 0.5).
        assert!(crate::domain::l2_distance(&r.x_star, &[1.0, 0.5]) < 1e-6);
        assert!(domain.contains(&r.x_star));
    }

    #[test]
    fn start_outside_domain_is_rejected() {
        let domain = Domain::unit_cube(2);
        let obj = Quadratic { c: vec![0.5, 0.5] };
        assert!(local_maximize(&obj, &domain, &[2.0, 0.5], &LocalSearchConfig::default()).is_err());
    }

    #[test]
    fn single_start_equals_local() {
        let domain = Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let obj = Quadratic { c: vec![0.2, 0.3] };
        let cfg = LocalSearchConfig::default();
        let multi = multi_start_maximize(&obj, &domain, 1, &cfg, 99).unwrap();
        let mut rng = rng::stream(99, &[]);
        let x0 = domain.sample(&mut rng);
        let single = local_maximize(&obj, &domain, &x0, &cfg).unwrap();
        assert_eq!(multi.start_points[0], x0);
        assert_eq!(multi.x_star, single.x_star);
        assert_eq!(multi.value, single.value);
    }

    #[test]
    fn nested_starts_are_monotone_in_n() {
        let domain = Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let obj = Quadratic { c: vec![0.2, 0.3] };
        let cfg = LocalSearchConfig::default();
        let r10 = multi_start_maximize(&obj, &domain, 10, &cfg, 5).unwrap();
        let r100 = multi_start_maximize(&obj, &domain, 100, &cfg, 5).unwrap();
        assert!(r100.value >= r10.value);
        assert_eq!(r100.start_points[..10], r10.start_points[..]);
    }

    #[test]
    fn deterministic_given_seed() {
        let domain = Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let obj = Quadratic { c: vec![-0.7, 0.1] };
        let cfg = LocalSearchConfig::default();
        let a = multi_start_maximize(&obj, &domain, 8, &cfg, 123).unwrap();
        let b = multi_start_maximize(&obj, &domain, 8, &cfg, 123).unwrap();
        assert_eq!(a.x_star, b.x_star);
        assert_eq!(a.value, b.value);
        assert_eq!(a.start_points, b.start_points);
    }
}
