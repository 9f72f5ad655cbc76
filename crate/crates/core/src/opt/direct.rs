//! DIRECT (DIviding RECTangles): deterministic derivative-free global search.
//!
//! The box is normalized to the unit cube and trisected adaptively: each
//! sweep selects the potentially-optimal rectangles (the upper-right convex
//! hull of center value against rectangle size, with a slack relative to the
//! incumbent) and splits them along their longest axes, evaluating only the
//! new centers. No Lipschitz constant is required.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::opt::{Objective, OptResult, Strategy};

/// A cell of the unit-cube partition.
#[derive(Debug, Clone)]
pub struct Rect {
    /// Center in unit-cube coordinates.
    pub center: Vec<f64>,
    /// Trisection depth per axis; side length on axis `i` is `3^-levels[i]`.
    pub side_levels: Vec<u32>,
    /// Surface value at the center, maximization orientation.
    pub f_center: f64,
    /// Size index used for potential-optimality: the half-diagonal.
    pub measure: f64,
}

impl Rect {
    fn half_diagonal(levels: &[u32]) -> f64 {
        0.5 * levels
            .iter()
            .map(|&l| 3f64.powi(-2 * l as i32))
            .sum::<f64>()
            .sqrt()
    }

    /// Exact volume of the cell; the partition's volumes always sum to 1.
    pub fn volume(&self) -> f64 {
        self.side_levels
            .iter()
            .map(|&l| 3f64.powi(-(l as i32)))
            .product()
    }
}

/// Budget and slack knobs for the dividing-rectangles search.
#[derive(Debug, Clone)]
pub struct DirectConfig {
    /// Evaluation budget; the search stops once this many centers are evaluated.
    pub max_evals: usize,
    /// Maximum trisection depth per axis.
    pub max_depth: u32,
    /// Potential-optimality slack, relative to the incumbent best value.
    pub epsilon_po: f64,
}

impl Default for DirectConfig {
    fn default() -> Self {
        DirectConfig {
            max_evals: 10_000,
            max_depth: 30,
            epsilon_po: 1e-4,
        }
    }
}

struct Partition<'a> {
    obj: &'a dyn Objective,
    domain: &'a Domain,
    rects: Vec<Rect>,
    n_evals: usize,
    best: usize,
}

impl<'a> Partition<'a> {
    fn eval(&mut self, unit_center: &[f64]) -> f64 {
        self.n_evals += 1;
        self.obj.value(&self.domain.from_unit(unit_center))
    }

    fn push(&mut self, rect: Rect) {
        // Strictly-greater comparison: earliest creation index wins ties.
        if rect.f_center > self.rects[self.best].f_center {
            self.best = self.rects.len();
        }
        self.rects.push(rect);
    }

    /// Indices of potentially-optimal rectangles, ascending in measure.
    ///
    /// A candidate (the best rect of its size class) qualifies when some
    /// slope K > 0 makes its optimistic bound `f + K m` dominate every other
    /// class and exceed the incumbent by the relative slack.
    fn potentially_optimal(&self, epsilon_po: f64, max_depth: u32) -> Vec<usize> {
        // Group by measure; bit patterns of equal positive measures are equal
        // and order like the values themselves.
        let mut classes: BTreeMap<u64, usize> = BTreeMap::new();
        for (i, r) in self.rects.iter().enumerate() {
            if r.side_levels.iter().all(|&l| l >= max_depth) {
                continue; // cannot be divided further
            }
            let key = r.measure.to_bits();
            classes
                .entry(key)
                .and_modify(|b| {
                    if r.f_center > self.rects[*b].f_center {
                        *b = i;
                    }
                })
                .or_insert(i);
        }
        let cand: Vec<usize> = classes.into_values().collect();
        if cand.is_empty() {
            return cand;
        }
        let f_best = self.rects[self.best].f_center;
        let mut selected = Vec::new();
        for (j, &cj) in cand.iter().enumerate() {
            let (mj, vj) = (self.rects[cj].measure, self.rects[cj].f_center);
            let mut k_lo: f64 = 0.0;
            let mut k_hi = f64::INFINITY;
            for (i, &ci) in cand.iter().enumerate() {
                if i == j {
                    continue;
                }
                let (mi, vi) = (self.rects[ci].measure, self.rects[ci].f_center);
                if mi < mj {
                    k_lo = k_lo.max((vi - vj) / (mj - mi));
                } else {
                    k_hi = k_hi.min((vj - vi) / (mi - mj));
                }
            }
            if k_lo > k_hi || k_hi < 0.0 {
                continue;
            }
            let bound = if k_hi.is_finite() { vj + k_hi * mj } else { f64::INFINITY };
            if bound >= f_best + epsilon_po * f_best.abs() {
                selected.push(cj);
            }
        }
        selected
    }

    /// Trisect rect `idx` along its longest axes; divides nothing if the
    /// remaining budget cannot cover all new centers.
    fn divide(&mut self, idx: usize, budget: usize) -> bool {
        let (center, levels) = {
            let r = &self.rects[idx];
            (r.center.clone(), r.side_levels.clone())
        };
        let min_level = *levels.iter().min().unwrap();
        let axes: Vec<usize> = (0..levels.len()).filter(|&i| levels[i] == min_level).collect();
        if self.n_evals + 2 * axes.len() > budget {
            return false;
        }
        // Evaluate both offset centers on every longest axis.
        let delta = 3f64.powi(-(min_level as i32 + 1));
        let mut trials: Vec<(usize, f64, f64)> = Vec::with_capacity(axes.len());
        for &ax in &axes {
            let mut lo_c = center.clone();
            let mut hi_c = center.clone();
            lo_c[ax] -= delta;
            hi_c[ax] += delta;
            let f_lo = self.eval(&lo_c);
            let f_hi = self.eval(&hi_c);
            trials.push((ax, f_lo, f_hi));
        }
        // Split the axis with the best child first so it keeps the larger cells.
        trials.sort_by(|a, b| {
            let wa = a.1.max(a.2);
            let wb = b.1.max(b.2);
            wb.partial_cmp(&wa).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0))
        });
        let mut cur_levels = levels;
        for (ax, f_lo, f_hi) in trials {
            cur_levels[ax] += 1;
            let mut lo_c = center.clone();
            let mut hi_c = center.clone();
            lo_c[ax] -= delta;
            hi_c[ax] += delta;
            let measure = Rect::half_diagonal(&cur_levels);
            self.push(Rect {
                center: lo_c,
                side_levels: cur_levels.clone(),
                f_center: f_lo,
                measure,
            });
            self.push(Rect {
                center: hi_c,
                side_levels: cur_levels.clone(),
                f_center: f_hi,
                measure,
            });
        }
        let measure = Rect::half_diagonal(&cur_levels);
        let r = &mut self.rects[idx];
        r.side_levels = cur_levels;
        r.measure = measure;
        true
    }
}

fn run<'a>(
    obj: &'a dyn Objective,
    domain: &'a Domain,
    cfg: &DirectConfig,
) -> Result<(Partition<'a>, f64)> {
    if cfg.max_evals == 0 {
        return Err(Error::Config("max_evals must be >= 1".into()));
    }
    let dim = domain.dim();
    for i in 0..dim {
        if !(domain.upper()[i] - domain.lower()[i] > 0.0) {
            return Err(Error::DomainViolation(format!("degenerate side on axis {i}")));
        }
    }
    let t0 = Instant::now();
    let mut part = Partition {
        obj,
        domain,
        rects: Vec::new(),
        n_evals: 0,
        best: 0,
    };
    let c0 = vec![0.5; dim];
    let f0 = part.eval(&c0);
    part.rects.push(Rect {
        center: c0,
        side_levels: vec![0; dim],
        f_center: f0,
        measure: Rect::half_diagonal(&vec![0; dim]),
    });

    while part.n_evals < cfg.max_evals {
        let selected = part.potentially_optimal(cfg.epsilon_po, cfg.max_depth);
        if selected.is_empty() {
            break; // everything at max depth
        }
        let mut divided_any = false;
        for idx in selected {
            if !part.divide(idx, cfg.max_evals) {
                break; // budget cannot cover another division
            }
            divided_any = true;
        }
        if !divided_any {
            break;
        }
    }
    Ok((part, t0.elapsed().as_secs_f64()))
}

fn best_result(part: &Partition, wall_time: f64) -> OptResult {
    let best = &part.rects[part.best];
    OptResult {
        x_star: part.domain.from_unit(&best.center),
        value: best.f_center,
        strategy: Strategy::Global,
        n_evals: part.n_evals,
        wall_time,
        converged: true,
        start_points: Vec::new(),
    }
}

/// Deterministic global maximization of `obj` over `domain`.
pub fn direct_maximize(
    obj: &dyn Objective,
    domain: &Domain,
    cfg: &DirectConfig,
) -> Result<OptResult> {
    let (part, wall) = run(obj, domain, cfg)?;
    Ok(best_result(&part, wall))
}

/// Testing hook: run the partition loop and return the final cell list too.
#[doc(hidden)]
pub fn direct_partition(
    obj: &dyn Objective,
    domain: &Domain,
    cfg: &DirectConfig,
) -> Result<(Vec<Rect>, OptResult)> {
    let (part, wall) = run(obj, domain, cfg)?;
    let result = best_result(&part, wall);
    Ok((part.rects, result))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Func<F: Fn(&[f64]) -> f64 + Sync>(F);
    impl<F: Fn(&[f64]) -> f64 + Sync> Objective for Func<F> {
        fn value(&self, x: &[f64]) -> f64 {
            (self.0)(x)
        }
    }

    #[test]
    fn one_dim_quadratic_peak() {
        let domain = Domain::new(vec![0.0], vec![1.0]).unwrap();
        let obj = Func(|x: &[f64]| -(x[0] - 0.3) * (x[0] - 0.3));
        let cfg = DirectConfig {
            max_evals: 200,
            ..DirectConfig::default()
        };
        let r = direct_maximize(&obj, &domain, &cfg).unwrap();
        assert!((r.x_star[0] - 0.3).abs() < 1e-3, "got {}", r.x_star[0]);
        assert!(r.n_evals <= 200);
    }

    #[test]
    fn constant_surface_returns_first_batch_value() {
        let domain = Domain::unit_cube(2);
        let obj = Func(|_: &[f64]| 2.5);
        let cfg = DirectConfig {
            max_evals: 50,
            ..DirectConfig::default()
        };
        let r = direct_maximize(&obj, &domain, &cfg).unwrap();
        assert_eq!(r.value, 2.5);
    }

    #[test]
    fn deterministic_evaluation_sequence() {
        use std::sync::Mutex;
        let domain = Domain::new(vec![-2.0, -1.0], vec![3.0, 4.0]).unwrap();
        let run = || {
            let log = Mutex::new(Vec::new());
            let obj = Func(|x: &[f64]| {
                let v = (x[0] * 1.7).sin() + (x[1] * 0.9).cos();
                log.lock().unwrap().push((x.to_vec(), v));
                v
            });
            let cfg = DirectConfig {
                max_evals: 500,
                ..DirectConfig::default()
            };
            let r = direct_maximize(&obj, &domain, &cfg).unwrap();
            (log.into_inner().unwrap(), r.x_star, r.value)
        };
        let (log_a, x_a, v_a) = run();
        let (log_b, x_b, v_b) = run();
        assert_eq!(log_a, log_b);
        assert_eq!(x_a, x_b);
        assert_eq!(v_a, v_b);
    }

    #[test]
    fn partition_tiles_unit_cube() {
        let domain = Domain::unit_cube(2);
        let obj = Func(|x: &[f64]| -(x[0] - 0.37).powi(2) - (x[1] - 0.81).powi(2));
        for budget in [1usize, 9, 55, 301, 2000] {
            let cfg = DirectConfig {
                max_evals: budget,
                ..DirectConfig::default()
            };
            let (rects, _) = direct_partition(&obj, &domain, &cfg).unwrap();
            let vol: f64 = rects.iter().map(Rect::volume).sum();
            assert!(
                (vol - 1.0).abs() < 1e-9,
                "budget {budget}: volumes sum to {vol}"
            );
        }
    }

    #[test]
    fn max_side_shrinks_with_budget() {
        let domain = Domain::unit_cube(2);
        let obj = Func(|x: &[f64]| {
            -(x[0] - 0.5).powi(2) - (x[1] - 0.4).powi(2) + 0.3 * (7.0 * x[0]).sin()
        });
        let cfg = DirectConfig {
            max_evals: 10_000,
            ..DirectConfig::default()
        };
        let (rects, _) = direct_partition(&obj, &domain, &cfg).unwrap();
        let max_side = rects
            .iter()
            .map(|r| 3f64.powi(-(*r.side_levels.iter().min().unwrap() as i32)))
            .fold(0.0, f64::max);
        assert!(max_side <= 3f64.powi(-4), "max side {max_side}");
    }

    #[test]
    fn returned_value_is_max_over_all_evaluations() {
        use std::sync::Mutex;
        let domain = Domain::unit_cube(2);
        let best_seen = Mutex::new(f64::NEG_INFINITY);
        let tracker = Func(|x: &[f64]| {
            let v = (x[0] * 3.0).sin() * (x[1] * 2.0).cos();
            let mut b = best_seen.lock().unwrap();
            if v > *b {
                *b = v;
            }
            v
        });
        let cfg = DirectConfig {
            max_evals: 800,
            ..DirectConfig::default()
        };
        let r = direct_maximize(&tracker, &domain, &cfg).unwrap();
        assert_eq!(r.value, *best_seen.lock().unwrap());
    }
}
