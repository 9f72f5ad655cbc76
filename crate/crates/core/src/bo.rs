//! The sequential optimization loop: accumulate observations, refit the
//! surrogate, maximize the acquisition, query.
//!
//! Inputs are mapped to the unit cube and targets standardized per round
//! before fitting, so the hyperparameter box and the UCB coefficient are
//! scale-free. Incumbents and acquisition values live in standardized
//! space; recorded `y` and running bests are in the original scale.

use std::fmt::Write as _;

use crate::acquisition::{AcqSurface, AcquisitionKind, AcquisitionSpec};
use crate::benchmarks::{get_benchmark, Benchmark};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::gp::{fit_gp_with, standardize, FitConfig, GpModel, NoiseMode};
use crate::kernel::KernelFamily;
use crate::opt::{direct_maximize, multi_start_maximize, DirectConfig, LocalSearchConfig, OptResult};
use crate::rng;

/// Which strategy drives the query selection.
#[derive(Debug, Clone)]
pub enum AcqOptimizer {
    Direct(DirectConfig),
    MultiLocal(usize, LocalSearchConfig),
}

/// How observation noise is handled end to end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoisePolicy {
    /// Exact observations; the surrogate noise is fitted (floored at 1e-8).
    NoiselessFitted,
    /// Observations get `N(0, sigma^2)` noise and the surrogate pins the
    /// same sigma (rescaled with the targets).
    Fixed(f64),
}

/// Full specification of one optimization run.
#[derive(Debug, Clone)]
pub struct BoConfig {
    pub benchmark: String,
    pub bench_dim: Option<usize>,
    pub kernel_family: KernelFamily,
    pub acquisition: AcquisitionKind,
    pub ucb_alpha: f64,
    /// Number of acquisition-driven rounds after the initial design.
    pub rounds: usize,
    pub n_init: usize,
    pub acq_optimizer: AcqOptimizer,
    pub noise: NoisePolicy,
    pub fit_starts: usize,
    pub seed: u64,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig {
            benchmark: "branin".into(),
            bench_dim: None,
            kernel_family: KernelFamily::Matern52,
            acquisition: AcquisitionKind::Ei,
            ucb_alpha: 2.0,
            rounds: 50,
            n_init: 3,
            acq_optimizer: AcqOptimizer::Direct(DirectConfig::default()),
            noise: NoisePolicy::NoiselessFitted,
            fit_starts: 8,
            seed: 0,
        }
    }
}

impl BoConfig {
    fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.n_init == 0 {
            return Err(Error::Config("rounds and n_init must be >= 1".into()));
        }
        Ok(())
    }
}

/// One observation row.
#[derive(Debug, Clone)]
pub struct HistoryRow {
    /// 1-based observation index; the initial design occupies the first rows.
    pub round: usize,
    pub x: Vec<f64>,
    pub y: f64,
    /// Running minimum of `y`.
    pub best: f64,
    /// Acquisition value at the chosen point (standardized space);
    /// NaN for initial-design rows.
    pub acq_value: f64,
    pub strategy: String,
    pub wall_time: f64,
}

/// Observations of one run, in query order.
#[derive(Debug, Clone)]
pub struct History {
    pub rows: Vec<HistoryRow>,
    /// Set when the run aborted early (surrogate fit failure); rows hold the
    /// partial trajectory.
    pub error: Option<String>,
}

impl History {
    /// CSV with header `round,x_0..x_{d-1},y,best,acq_value,strategy,wall_time_s`.
    pub fn to_csv(&self, dim: usize) -> String {
        let mut s = String::new();
        let xs: Vec<String> = (0..dim).map(|i| format!("x_{i}")).collect();
        let _ = writeln!(s, "round,{},y,best,acq_value,strategy,wall_time_s", xs.join(","));
        for r in &self.rows {
            let xrow: Vec<String> = r.x.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:.6}",
                r.round,
                xrow.join(","),
                r.y,
                r.best,
                r.acq_value,
                r.strategy,
                r.wall_time
            );
        }
        s
    }
}

/// Fit a surrogate on unit-cube inputs and standardized targets.
///
/// Returns the model plus the standardization scale (needed to pin a fixed
/// observation noise in standardized units).
pub fn fit_round_model(
    x_unit: &[Vec<f64>],
    y: &[f64],
    family: KernelFamily,
    noise: NoisePolicy,
    fit_starts: usize,
    seed: u64,
) -> Result<(GpModel, Vec<f64>)> {
    let (ys, _, scale) = standardize(y);
    let mode = match noise {
        NoisePolicy::NoiselessFitted => NoiseMode::Fitted,
        NoisePolicy::Fixed(s) => NoiseMode::Fixed(s / scale),
    };
    let mut cfg = FitConfig::new(family, mode, seed);
    cfg.n_starts = fit_starts;
    let model = fit_gp_with(x_unit, &ys, &cfg)?;
    Ok((model, ys))
}

/// Maximize the round's acquisition surface over the unit cube.
pub fn maximize_acquisition(
    surface: &AcqSurface,
    dim: usize,
    optimizer: &AcqOptimizer,
    seed: u64,
) -> Result<OptResult> {
    let cube = Domain::unit_cube(dim);
    match optimizer {
        AcqOptimizer::Direct(cfg) => direct_maximize(surface, &cube, cfg),
        AcqOptimizer::MultiLocal(n, cfg) => multi_start_maximize(surface, &cube, *n, cfg, seed),
    }
}

/// Run the loop; deterministic given the seed.
pub fn run_bo(cfg: &BoConfig) -> Result<History> {
    cfg.validate()?;
    let bench = get_benchmark(&cfg.benchmark, cfg.bench_dim)?;
    run_bo_on(&bench, cfg)
}

/// [`run_bo`] against an already-resolved benchmark.
pub fn run_bo_on(bench: &Benchmark, cfg: &BoConfig) -> Result<History> {
    cfg.validate()?;
    let domain = bench.domain();
    let dim = bench.dim();
    let sigma_obs = match cfg.noise {
        NoisePolicy::NoiselessFitted => 0.0,
        NoisePolicy::Fixed(s) => s,
    };

    let mut rows: Vec<HistoryRow> = Vec::new();
    let mut xs_unit: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut best = f64::INFINITY;

    let mut init_rng = rng::stream(cfg.seed, &[1]);
    for i in 0..cfg.n_init {
        let x = domain.sample(&mut init_rng);
        let mut obs_rng = rng::stream(cfg.seed, &[2, i as u64]);
        let y = bench.observe(&x, sigma_obs, &mut obs_rng)?;
        best = best.min(y);
        xs_unit.push(domain.to_unit(&x));
        ys.push(y);
        rows.push(HistoryRow {
            round: i + 1,
            x,
            y,
            best,
            acq_value: f64::NAN,
            strategy: "init".into(),
            wall_time: 0.0,
        });
    }

    for t in 0..cfg.rounds {
        let round_seed = rng::derive_seed(cfg.seed, &[3, t as u64]);
        let fitted = fit_round_model(
            &xs_unit,
            &ys,
            cfg.kernel_family,
            cfg.noise,
            cfg.fit_starts,
            round_seed,
        );
        let (model, ys_std) = match fitted {
            Ok(v) => v,
            Err(e) => {
                return Ok(History {
                    rows,
                    error: Some(format!("fit failed at round {}: {e}", t + 1)),
                });
            }
        };
        let spec = AcquisitionSpec::for_kind(cfg.acquisition, &ys_std, cfg.ucb_alpha)?;
        let surface = AcqSurface::new(spec, &model);
        let result = maximize_acquisition(
            &surface,
            dim,
            &cfg.acq_optimizer,
            rng::derive_seed(cfg.seed, &[4, t as u64]),
        )?;
        let x_next = domain.from_unit(&result.x_star);
        let mut obs_rng = rng::stream(cfg.seed, &[5, t as u64]);
        let y = bench.observe(&x_next, sigma_obs, &mut obs_rng)?;
        best = best.min(y);
        xs_unit.push(result.x_star.clone());
        ys.push(y);
        rows.push(HistoryRow {
            round: cfg.n_init + t + 1,
            x: x_next,
            y,
            best,
            acq_value: result.value,
            strategy: result.strategy.to_string(),
            wall_time: result.wall_time,
        });
    }

    Ok(History { rows, error: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> BoConfig {
        BoConfig {
            benchmark: "sphere".into(),
            bench_dim: Some(2),
            rounds: 5,
            n_init: 3,
            acq_optimizer: AcqOptimizer::Direct(DirectConfig {
                max_evals: 300,
                ..DirectConfig::default()
            }),
            fit_starts: 3,
            seed: 42,
            ..BoConfig::default()
        }
    }

    #[test]
    fn history_row_count_and_monotone_best() {
        let mut cfg = tiny_cfg();
        cfg.rounds = 1;
        let h = run_bo(&cfg).unwrap();
        assert!(h.error.is_none());
        assert_eq!(h.rows.len(), cfg.n_init + 1);
        let h = run_bo(&tiny_cfg()).unwrap();
        let mut prev = f64::INFINITY;
        for r in &h.rows {
            assert!(r.best <= prev + 1e-15);
            assert!((r.best - h.rows.iter().take(r.round).map(|q| q.y).fold(f64::INFINITY, f64::min)).abs() < 1e-15);
            prev = r.best;
        }
    }

    #[test]
    fn queries_stay_in_domain() {
        let bench = get_benchmark("sphere", Some(2)).unwrap();
        let h = run_bo(&tiny_cfg()).unwrap();
        for r in &h.rows {
            assert!(bench.domain().contains(&r.x));
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = run_bo(&tiny_cfg()).unwrap();
        let b = run_bo(&tiny_cfg()).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.x, rb.x);
            assert_eq!(ra.y, rb.y);
            assert_eq!(ra.acq_value, rb.acq_value);
        }
    }

    #[test]
    fn csv_has_documented_header() {
        let mut cfg = tiny_cfg();
        cfg.rounds = 1;
        let h = run_bo(&cfg).unwrap();
        let csv = h.to_csv(2);
        assert!(csv.starts_with("round,x_0,x_1,y,best,acq_value,strategy,wall_time_s\n"));
    }
}
