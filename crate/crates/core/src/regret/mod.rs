//! Synchronized-history regret-difference experiments.
//!
//! Each repeat runs one optimization loop in which the DIRECT maximizer is
//! always the queried point. At every round, before querying, the fitted
//! model is frozen and N-start local maximizers are run on that same
//! snapshot purely to measure how far their choices fall from the global
//! one: the per-round regret difference `|f(x_g) - f(x_m)|` (the unknown
//! optimum cancels), wall times, and coincidence flags.

mod basins;
mod plot;
mod timing;

pub use basins::{estimate_basins, BasinStats};
pub use plot::{emit_plots, plot_curves_csv};
pub use timing::{timing_table, TimingTable};

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::acquisition::{AcqSurface, AcquisitionKind, AcquisitionSpec};
use crate::benchmarks::get_benchmark;
use crate::bo::{fit_round_model, NoisePolicy};
use crate::domain::{l2_distance, Domain};
use crate::error::{Error, Result};
use crate::kernel::KernelFamily;
use crate::opt::local::{multi_start_results, reduce_best};
use crate::opt::{direct_maximize, DirectConfig, LocalSearchConfig};
use crate::rng;

/// Everything one experiment needs; defaults mirror the reference protocol
/// (50 repeats, 50 rounds, starts {1, 10, 100, 1000}, 10-step smoothing).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub benchmark: String,
    pub bench_dim: Option<usize>,
    pub repeats: usize,
    pub rounds: usize,
    /// Start counts for the counterfactual multi-started maximizers,
    /// ascending.
    pub start_counts: Vec<usize>,
    pub moving_avg_window: usize,
    pub seed: u64,
    pub direct_cfg: DirectConfig,
    pub local_cfg: LocalSearchConfig,
    /// Two maximizers "coincide" within this fraction of the domain diameter.
    pub coincidence_tol: f64,
    pub kernel_family: KernelFamily,
    pub acquisition: AcquisitionKind,
    pub ucb_alpha: f64,
    pub n_init: usize,
    pub fit_starts: usize,
    pub noise: NoisePolicy,
    /// Measure wall times; forces sequential execution so the clock is
    /// contention-free, and makes time columns nonzero in the records CSV.
    pub timing: bool,
    /// Estimate basin statistics each round (first repeat only; expensive).
    pub basins: bool,
    pub basin_probes: usize,
    pub cluster_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            benchmark: "branin".into(),
            bench_dim: None,
            repeats: 50,
            rounds: 50,
            start_counts: vec![1, 10, 100, 1000],
            moving_avg_window: 10,
            seed: 0,
            direct_cfg: DirectConfig::default(),
            local_cfg: LocalSearchConfig::default(),
            coincidence_tol: 1e-3,
            kernel_family: KernelFamily::Matern52,
            acquisition: AcquisitionKind::Ei,
            ucb_alpha: 2.0,
            n_init: 3,
            fit_starts: 8,
            noise: NoisePolicy::NoiselessFitted,
            timing: false,
            basins: false,
            basin_probes: 200,
            cluster_tol: 1e-2,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 || self.rounds == 0 || self.n_init == 0 {
            return Err(Error::Config("repeats, rounds, n_init must be >= 1".into()));
        }
        if self.start_counts.is_empty() {
            return Err(Error::Config("start_counts must be nonempty".into()));
        }
        if self.start_counts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("start_counts must be strictly ascending".into()));
        }
        if self.start_counts[0] == 0 {
            return Err(Error::Config("start counts must be >= 1".into()));
        }
        if self.moving_avg_window == 0 {
            return Err(Error::Config("moving_avg_window must be >= 1".into()));
        }
        if !(self.coincidence_tol > 0.0) || !(self.cluster_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Counterfactual result for one start count at one round.
#[derive(Debug, Clone)]
pub struct PerStartCount {
    pub n: usize,
    /// True objective value at the multi-started maximizer.
    pub f_local: f64,
    /// Acquisition value it achieved on the frozen snapshot.
    pub acq_local: f64,
    /// `|f_global - f_local|`; the `f(x*)` terms cancel exactly.
    pub regret_diff: f64,
    pub time_s: f64,
    pub n_evals: usize,
    pub coincided: bool,
}

/// One (repeat, round) row of the experiment.
#[derive(Debug, Clone)]
pub struct RegretRecord {
    pub repeat: usize,
    pub round: usize,
    /// True objective value at the DIRECT maximizer (the queried point).
    pub f_global: f64,
    pub acq_global: f64,
    pub time_global_s: f64,
    pub per_n: Vec<PerStartCount>,
}

/// A round that could not be completed (surrogate fit failure).
#[derive(Debug, Clone)]
pub struct FailedRound {
    pub repeat: usize,
    pub round: usize,
    pub message: String,
}

/// All outputs of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RegretRecord>,
    pub failures: Vec<FailedRound>,
    pub basins: Vec<BasinStats>,
    pub start_counts: Vec<usize>,
    pub benchmark: String,
}

/// Unweighted trailing mean; element `i` averages the last `window` elements
/// ending at `i` (shorter prefixes average what exists).
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for i in 0..series.len() {
        acc += series[i];
        if i >= w {
            acc -= series[i - w];
        }
        let len = (i + 1).min(w) as f64;
        out.push(acc / len);
    }
    out
}

struct RepeatOutput {
    records: Vec<RegretRecord>,
    failures: Vec<FailedRound>,
    basins: Vec<BasinStats>,
}

fn run_repeat(cfg: &ExperimentConfig, repeat: usize) -> Result<RepeatOutput> {
    let bench = get_benchmark(&cfg.benchmark, cfg.bench_dim)?;
    let domain = bench.domain();
    let dim = bench.dim();
    let cube = Domain::unit_cube(dim);
    let diam = domain.diameter();
    let sigma_obs = match cfg.noise {
        NoisePolicy::NoiselessFitted => 0.0,
        NoisePolicy::Fixed(s) => s,
    };
    let max_n = *cfg.start_counts.last().unwrap();
    let r = repeat as u64;

    let mut records = Vec::with_capacity(cfg.rounds);
    let mut failures = Vec::new();
    let mut basins = Vec::new();

    let mut init_rng = rng::stream(cfg.seed, &[10, r]);
    let mut xs_unit: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for i in 0..cfg.n_init {
        let x = domain.sample(&mut init_rng);
        let mut obs_rng = rng::stream(cfg.seed, &[11, r, i as u64]);
        let y = bench.observe(&x, sigma_obs, &mut obs_rng)?;
        xs_unit.push(domain.to_unit(&x));
        ys.push(y);
    }

    for t in 0..cfg.rounds {
        let tu = t as u64;
        let fit_seed = rng::derive_seed(cfg.seed, &[12, r, tu]);
        let (model, ys_std) = match fit_round_model(
            &xs_unit,
            &ys,
            cfg.kernel_family,
            cfg.noise,
            cfg.fit_starts,
            fit_seed,
        ) {
            Ok(v) => v,
            Err(e) => {
                failures.push(FailedRound {
                    repeat,
                    round: t + 1,
                    message: e.to_string(),
                });
                break;
            }
        };
        let spec = AcquisitionSpec::for_kind(cfg.acquisition, &ys_std, cfg.ucb_alpha)?;
        let surface = AcqSurface::new(spec, &model);

        let t_global = Instant::now();
        let global = direct_maximize(&surface, &cube, &cfg.direct_cfg)?;
        let time_global_s = if cfg.timing {
            t_global.elapsed().as_secs_f64()
        } else {
            0.0
        };
        let x_g = domain.from_unit(&global.x_star);
        let f_global = bench.eval(&x_g);

        let ms_seed = rng::derive_seed(cfg.seed, &[13, r, tu]);
        let mut per_n = Vec::with_capacity(cfg.start_counts.len());
        if cfg.timing {
            // Each N timed as its own full optimization, sequentially.
            for &n in &cfg.start_counts {
                let t0 = Instant::now();
                let results = multi_start_results(&surface, &cube, n, &cfg.local_cfg, ms_seed)?;
                let best = reduce_best(&results);
                let elapsed = t0.elapsed().as_secs_f64();
                let x_m = domain.from_unit(&results[best].x_star);
                let f_local = bench.eval(&x_m);
                per_n.push(PerStartCount {
                    n,
                    f_local,
                    acq_local: results[best].value,
                    regret_diff: (f_global - f_local).abs(),
                    time_s: elapsed,
                    n_evals: results.iter().map(|q| q.n_evals).sum(),
                    coincided: l2_distance(&x_g, &x_m) <= cfg.coincidence_tol * diam,
                });
            }
        } else {
            // Shared prefix trick: the seeded start stream is the same for
            // every N, so the N-start winner is the max over the first N
            // per-start results.
            let results = multi_start_results(&surface, &cube, max_n, &cfg.local_cfg, ms_seed)?;
            for &n in &cfg.start_counts {
                let best = reduce_best(&results[..n]);
                let x_m = domain.from_unit(&results[best].x_star);
                let f_local = bench.eval(&x_m);
                per_n.push(PerStartCount {
                    n,
                    f_local,
                    acq_local: results[best].value,
                    regret_diff: (f_global - f_local).abs(),
                    time_s: 0.0,
                    n_evals: results[..n].iter().map(|q| q.n_evals).sum(),
                    coincided: l2_distance(&x_g, &x_m) <= cfg.coincidence_tol * diam,
                });
            }
        }

        if cfg.basins && repeat == 0 {
            let bseed = rng::derive_seed(cfg.seed, &[14, r, tu]);
            let stats = estimate_basins(
                &surface,
                &cube,
                &global.x_star,
                cfg.basin_probes,
                cfg.cluster_tol,
                cfg.coincidence_tol,
                &cfg.local_cfg,
                bseed,
                t + 1,
            )?;
            basins.push(stats);
        }

        records.push(RegretRecord {
            repeat,
            round: t + 1,
            f_global,
            acq_global: global.value,
            time_global_s,
            per_n,
        });

        // Query the global choice: the histories stay synchronized.
        let mut obs_rng = rng::stream(cfg.seed, &[15, r, tu]);
        let y = bench.observe(&x_g, sigma_obs, &mut obs_rng)?;
        xs_unit.push(global.x_star.clone());
        ys.push(y);
    }

    Ok(RepeatOutput {
        records,
        failures,
        basins,
    })
}

/// Run the full experiment. Repeats execute in parallel unless `timing` is
/// set (timed runs are sequential so the clock is contention-free); either
/// way the records are identical for a fixed seed.
pub fn run_regret_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    get_benchmark(&cfg.benchmark, cfg.bench_dim)?; // fail fast on bad names
    let outputs: Vec<RepeatOutput> = if cfg.timing {
        (0..cfg.repeats)
            .map(|r| run_repeat(cfg, r))
            .collect::<Result<_>>()?
    } else {
        (0..cfg.repeats)
            .into_par_iter()
            .map(|r| run_repeat(cfg, r))
            .collect::<Result<_>>()?
    };
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut basins = Vec::new();
    for o in outputs {
        records.extend(o.records);
        failures.extend(o.failures);
        basins.extend(o.basins);
    }
    Ok(ExperimentOutput {
        records,
        failures,
        basins,
        start_counts: cfg.start_counts.clone(),
        benchmark: cfg.benchmark.clone(),
    })
}

/// Records CSV, schema:
/// `repeat,round,f_global,f_local_{N...},regret_diff_{N...},time_global_s,time_{N...}_s,coincided_{N...}`.
pub fn records_csv(records: &[RegretRecord], start_counts: &[usize]) -> String {
    let mut s = String::new();
    let mut header = String::from("repeat,round,f_global");
    for n in start_counts {
        let _ = write!(header, ",f_local_{n}");
    }
    for n in start_counts {
        let _ = write!(header, ",regret_diff_{n}");
    }
    header.push_str(",time_global_s");
    for n in start_counts {
        let _ = write!(header, ",time_{n}_s");
    }
    for n in start_counts {
        let _ = write!(header, ",coincided_{n}");
    }
    s.push_str(&header);
    s.push('\n');
    for r in records {
        let _ = write!(s, "{},{},{}", r.repeat, r.round, r.f_global);
        for p in &r.per_n {
            let _ = write!(s, ",{}", p.f_local);
        }
        for p in &r.per_n {
            let _ = write!(s, ",{}", p.regret_diff);
        }
        let _ = write!(s, ",{:.6}", r.time_global_s);
        for p in &r.per_n {
            let _ = write!(s, ",{:.6}", p.time_s);
        }
        for p in &r.per_n {
            let _ = write!(s, ",{}", p.coincided);
        }
        s.push('\n');
    }
    s
}

/// Companion CSV with the acquisition values behind each record,
/// schema `repeat,round,acq_global,acq_{N...}`.
pub fn acq_values_csv(records: &[RegretRecord], start_counts: &[usize]) -> String {
    let mut s = String::from("repeat,round,acq_global");
    for n in start_counts {
        let _ = write!(s, ",acq_{n}");
    }
    s.push('\n');
    for r in records {
        let _ = write!(s, "{},{},{}", r.repeat, r.round, r.acq_global);
        for p in &r.per_n {
            let _ = write!(s, ",{}", p.acq_local);
        }
        s.push('\n');
    }
    s
}

/// Basins CSV, schema `round,n_probes,rho_hat,beta_g_hat`.
pub fn basins_csv(basins: &[BasinStats]) -> String {
    let mut s = String::from("round,n_probes,rho_hat,beta_g_hat\n");
    for b in basins {
        let _ = writeln!(s, "{},{},{},{}", b.round, b.n_probes, b.rho_hat, b.beta_g_hat);
    }
    s
}

/// Parse a records CSV produced by [`records_csv`]; returns the start counts
/// recovered from the header and the records (acquisition values are not in
/// this file and come back as NaN).
pub fn parse_records_csv(text: &str) -> Result<(Vec<usize>, Vec<RegretRecord>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty records csv".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let mut start_counts = Vec::new();
    for c in &cols {
        if let Some(rest) = c.strip_prefix("f_local_") {
            start_counts.push(
                rest.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad header column {c}: {e}")))?,
            );
        }
    }
    if start_counts.is_empty() {
        return Err(Error::Parse("records csv has no f_local_{n} columns".into()));
    }
    let k = start_counts.len();
    let expected = 3 + 2 * k + 1 + k + k;
    if cols.len() != expected {
        return Err(Error::Parse(format!(
            "records csv has {} columns, expected {expected}",
            cols.len()
        )));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != expected {
            return Err(Error::Parse(format!("line {}: wrong field count", lineno + 2)));
        }
        let pf = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))
        };
        let repeat: usize = f[0]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
        let round: usize = f[1]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
        let f_global = pf(f[2])?;
        let mut per_n = Vec::with_capacity(k);
        for (i, &n) in start_counts.iter().enumerate() {
            per_n.push(PerStartCount {
                n,
                f_local: pf(f[3 + i])?,
                acq_local: f64::NAN,
                regret_diff: pf(f[3 + k + i])?,
                time_s: pf(f[3 + 2 * k + 1 + i])?,
                n_evals: 0,
                coincided: f[3 + 3 * k + 1 + i].trim() == "true",
            });
        }
        records.push(RegretRecord {
            repeat,
            round,
            f_global,
            acq_global: f64::NAN,
            time_global_s: pf(f[3 + 2 * k])?,
            per_n,
        });
    }
    Ok((start_counts, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_contract() {
        assert_eq!(moving_average(&[], 3), Vec::<f64>::new());
        assert_eq!(moving_average(&[1.0, 2.0, 3.0], 1), vec![1.0, 2.0, 3.0]);
        assert_eq!(moving_average(&[5.0, 5.0, 5.0], 2), vec![5.0, 5.0, 5.0]);
        assert_eq!(
            moving_average(&[0.0, 1.0, 2.0, 3.0], 2),
            vec![0.0, 0.5, 1.5, 2.5]
        );
        // Window larger than series: prefix means.
        assert_eq!(moving_average(&[2.0, 4.0], 10), vec![2.0, 3.0]);
    }

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            benchmark: "sphere".into(),
            bench_dim: Some(2),
            repeats: 2,
            rounds: 3,
            start_counts: vec![1, 4],
            seed: 7,
            direct_cfg: DirectConfig {
                max_evals: 300,
                ..DirectConfig::default()
            },
            fit_starts: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn regret_identity_and_coincidence() {
        let out = run_regret_experiment(&small_cfg()).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.records.len(), 2 * 3);
        for r in &out.records {
            for p in &r.per_n {
                assert_eq!(p.regret_diff, (r.f_global - p.f_local).abs());
                assert!(p.regret_diff >= 0.0);
            }
        }
    }

    #[test]
    fn nested_dominance_within_rounds() {
        let out = run_regret_experiment(&small_cfg()).unwrap();
        for r in &out.records {
            for w in r.per_n.windows(2) {
                assert!(
                    w[1].acq_local >= w[0].acq_local,
                    "repeat {} round {}: acq({}) {} < acq({}) {}",
                    r.repeat,
                    r.round,
                    w[1].n,
                    w[1].acq_local,
                    w[0].n,
                    w[0].acq_local
                );
            }
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let a = run_regret_experiment(&small_cfg()).unwrap();
        let b = run_regret_experiment(&small_cfg()).unwrap();
        let csv_a = records_csv(&a.records, &a.start_counts);
        let csv_b = records_csv(&b.records, &b.start_counts);
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn timing_mode_changes_clocks_not_values() {
        let mut cfg = small_cfg();
        let base = run_regret_experiment(&cfg).unwrap();
        cfg.timing = true;
        let timed = run_regret_experiment(&cfg).unwrap();
        for (a, b) in base.records.iter().zip(&timed.records) {
            assert_eq!(a.f_global, b.f_global);
            for (pa, pb) in a.per_n.iter().zip(&b.per_n) {
                assert_eq!(pa.f_local, pb.f_local);
                assert_eq!(pa.acq_local, pb.acq_local);
                assert!(pb.time_s > 0.0);
                assert_eq!(pa.time_s, 0.0);
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let out = run_regret_experiment(&small_cfg()).unwrap();
        let csv = records_csv(&out.records, &out.start_counts);
        assert!(csv.starts_with(
            "repeat,round,f_global,f_local_1,f_local_4,regret_diff_1,regret_diff_4,\
             time_global_s,time_1_s,time_4_s,coincided_1,coincided_4\n"
        ));
        let (counts, parsed) = parse_records_csv(&csv).unwrap();
        assert_eq!(counts, out.start_counts);
        assert_eq!(parsed.len(), out.records.len());
        for (a, b) in out.records.iter().zip(&parsed) {
            assert_eq!(a.f_global, b.f_global);
            for (pa, pb) in a.per_n.iter().zip(&b.per_n) {
                assert_eq!(pa.f_local, pb.f_local);
                assert_eq!(pa.regret_diff, pb.regret_diff);
                assert_eq!(pa.coincided, pb.coincided);
            }
        }
    }
}
