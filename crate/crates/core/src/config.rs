//! Flat key-value config files and reproduction manifests.
//!
//! Format: one `key = value` per line, `#` comments, unknown keys rejected.
//! Every run writes a manifest (the fully resolved config plus the library
//! version) next to its outputs; feeding a manifest back through
//! `--config` reproduces the run byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use crate::acquisition::AcquisitionKind;
use crate::bo::{AcqOptimizer, BoConfig, NoisePolicy};
use crate::error::{Error, Result};
use crate::kernel::KernelFamily;
use crate::opt::{DirectConfig, LocalSearchConfig};
use crate::regret::ExperimentConfig;

/// Keys accepted in any config; `version` and `command` are manifest
/// bookkeeping and are ignored on read.
const COMMON_KEYS: &[&str] = &["version", "command"];

/// Parse the text of a flat key-value file.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {}: expected 'key = value', got '{line}'", i + 1))
        })?;
        let key = k.trim().to_string();
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key '{key}'", i + 1)));
        }
    }
    Ok(map)
}

/// Read and parse a config file; a missing file is a configuration error
/// naming the path.
pub fn read_kv_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_kv(&text)
}

struct Resolver<'a> {
    map: &'a BTreeMap<String, String>,
    known: Vec<&'static str>,
}

impl<'a> Resolver<'a> {
    fn new(map: &'a BTreeMap<String, String>) -> Self {
        Resolver {
            map,
            known: COMMON_KEYS.to_vec(),
        }
    }

    fn get<T: std::str::FromStr>(&mut self, key: &'static str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.known.push(key);
        match self.map.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse::<T>()
                .map_err(|e| Error::Config(format!("key '{key}': {e}"))),
        }
    }

    fn get_opt<T: std::str::FromStr>(&mut self, key: &'static str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.known.push(key);
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::Config(format!("key '{key}': {e}"))),
        }
    }

    fn get_str(&mut self, key: &'static str, default: &str) -> String {
        self.known.push(key);
        self.map.get(key).cloned().unwrap_or_else(|| default.to_string())
    }

    fn finish(self) -> Result<()> {
        for key in self.map.keys() {
            if !self.known.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown config key '{key}'")));
            }
        }
        Ok(())
    }
}

fn parse_noise(raw: &str) -> Result<NoisePolicy> {
    if raw == "fitted" || raw == "noiseless" {
        Ok(NoisePolicy::NoiselessFitted)
    } else {
        raw.parse::<f64>()
            .map(NoisePolicy::Fixed)
            .map_err(|_| Error::Config(format!("noise must be 'fitted' or a sigma value, got '{raw}'")))
    }
}

fn noise_str(p: NoisePolicy) -> String {
    match p {
        NoisePolicy::NoiselessFitted => "fitted".into(),
        NoisePolicy::Fixed(s) => s.to_string(),
    }
}

fn resolve_local(r: &mut Resolver) -> Result<LocalSearchConfig> {
    let d = LocalSearchConfig::default();
    Ok(LocalSearchConfig {
        eps_opt: r.get("eps_opt", d.eps_opt)?,
        max_iters: r.get("max_iters", d.max_iters)?,
        memory: r.get("memory", d.memory)?,
        wolfe_c1: r.get("wolfe_c1", d.wolfe_c1)?,
        wolfe_c2: r.get("wolfe_c2", d.wolfe_c2)?,
    })
}

fn resolve_direct(r: &mut Resolver) -> Result<DirectConfig> {
    let d = DirectConfig::default();
    Ok(DirectConfig {
        max_evals: r.get("direct_max_evals", d.max_evals)?,
        max_depth: r.get("direct_max_depth", d.max_depth)?,
        epsilon_po: r.get("direct_epsilon_po", d.epsilon_po)?,
    })
}

/// Resolve an experiment config from parsed key-values, applying defaults.
pub fn experiment_from_kv(map: &BTreeMap<String, String>) -> Result<ExperimentConfig> {
    let mut r = Resolver::new(map);
    let d = ExperimentConfig::default();
    let cfg = ExperimentConfig {
        benchmark: r.get_str("benchmark", &d.benchmark),
        bench_dim: r.get_opt("dim")?,
        repeats: r.get("repeats", d.repeats)?,
        rounds: r.get("rounds", d.rounds)?,
        start_counts: {
            r.known.push("start_counts");
            match map.get("start_counts") {
                None => d.start_counts.clone(),
                Some(raw) => raw
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .map_err(|e| Error::Config(format!("start_counts: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?,
            }
        },
        moving_avg_window: r.get("moving_avg_window", d.moving_avg_window)?,
        seed: r.get("seed", d.seed)?,
        direct_cfg: resolve_direct(&mut r)?,
        local_cfg: resolve_local(&mut r)?,
        coincidence_tol: r.get("coincidence_tol", d.coincidence_tol)?,
        kernel_family: KernelFamily::parse(&r.get_str("kernel", d.kernel_family.name()))?,
        acquisition: AcquisitionKind::parse(&r.get_str("acquisition", d.acquisition.name()))?,
        ucb_alpha: r.get("ucb_alpha", d.ucb_alpha)?,
        n_init: r.get("n_init", d.n_init)?,
        fit_starts: r.get("fit_starts", d.fit_starts)?,
        noise: parse_noise(&r.get_str("noise", &noise_str(d.noise)))?,
        timing: r.get("timing", d.timing)?,
        basins: r.get("basins", d.basins)?,
        basin_probes: r.get("basin_probes", d.basin_probes)?,
        cluster_tol: r.get("cluster_tol", d.cluster_tol)?,
    };
    r.finish()?;
    cfg.validate()?;
    Ok(cfg)
}

/// Fully resolved manifest for an experiment run.
pub fn experiment_manifest(cfg: &ExperimentConfig, command: &str) -> String {
    let counts: Vec<String> = cfg.start_counts.iter().map(|n| n.to_string()).collect();
    let mut s = String::new();
    s.push_str(&format!("command = {command}\n"));
    s.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("benchmark = {}\n", cfg.benchmark));
    if let Some(d) = cfg.bench_dim {
        s.push_str(&format!("dim = {d}\n"));
    }
    s.push_str(&format!("repeats = {}\n", cfg.repeats));
    s.push_str(&format!("rounds = {}\n", cfg.rounds));
    s.push_str(&format!("start_counts = {}\n", counts.join(",")));
    s.push_str(&format!("moving_avg_window = {}\n", cfg.moving_avg_window));
    s.push_str(&format!("seed = {}\n", cfg.seed));
    s.push_str(&format!("direct_max_evals = {}\n", cfg.direct_cfg.max_evals));
    s.push_str(&format!("direct_max_depth = {}\n", cfg.direct_cfg.max_depth));
    s.push_str(&format!("direct_epsilon_po = {}\n", cfg.direct_cfg.epsilon_po));
    s.push_str(&format!("eps_opt = {}\n", cfg.local_cfg.eps_opt));
    s.push_str(&format!("max_iters = {}\n", cfg.local_cfg.max_iters));
    s.push_str(&format!("memory = {}\n", cfg.local_cfg.memory));
    s.push_str(&format!("wolfe_c1 = {}\n", cfg.local_cfg.wolfe_c1));
    s.push_str(&format!("wolfe_c2 = {}\n", cfg.local_cfg.wolfe_c2));
    s.push_str(&format!("coincidence_tol = {}\n", cfg.coincidence_tol));
    s.push_str(&format!("kernel = {}\n", cfg.kernel_family.name()));
    s.push_str(&format!("acquisition = {}\n", cfg.acquisition.name()));
    s.push_str(&format!("ucb_alpha = {}\n", cfg.ucb_alpha));
    s.push_str(&format!("n_init = {}\n", cfg.n_init));
    s.push_str(&format!("fit_starts = {}\n", cfg.fit_starts));
    s.push_str(&format!("noise = {}\n", noise_str(cfg.noise)));
    s.push_str(&format!("timing = {}\n", cfg.timing));
    s.push_str(&format!("basins = {}\n", cfg.basins));
    s.push_str(&format!("basin_probes = {}\n", cfg.basin_probes));
    s.push_str(&format!("cluster_tol = {}\n", cfg.cluster_tol));
    s
}

/// Resolve a single-run config from parsed key-values, applying defaults.
pub fn bo_from_kv(map: &BTreeMap<String, String>) -> Result<BoConfig> {
    let mut r = Resolver::new(map);
    let d = BoConfig::default();
    let local = resolve_local(&mut r)?;
    let direct = resolve_direct(&mut r)?;
    r.known.push("optimizer");
    let optimizer = match map.get("optimizer").map(String::as_str) {
        None | Some("direct") => AcqOptimizer::Direct(direct),
        Some(s) => match s.strip_prefix("local:") {
            Some(n) => AcqOptimizer::MultiLocal(
                n.parse()
                    .map_err(|e| Error::Config(format!("optimizer '{s}': {e}")))?,
                local,
            ),
            None => return Err(Error::Config(format!("optimizer must be 'direct' or 'local:N', got '{s}'"))),
        },
    };
    let cfg = BoConfig {
        benchmark: r.get_str("benchmark", &d.benchmark),
        bench_dim: r.get_opt("dim")?,
        kernel_family: KernelFamily::parse(&r.get_str("kernel", d.kernel_family.name()))?,
        acquisition: AcquisitionKind::parse(&r.get_str("acquisition", d.acquisition.name()))?,
        ucb_alpha: r.get("ucb_alpha", d.ucb_alpha)?,
        rounds: r.get("rounds", d.rounds)?,
        n_init: r.get("n_init", d.n_init)?,
        acq_optimizer: optimizer,
        noise: parse_noise(&r.get_str("noise", &noise_str(d.noise)))?,
        fit_starts: r.get("fit_starts", d.fit_starts)?,
        seed: r.get("seed", d.seed)?,
    };
    r.finish()?;
    Ok(cfg)
}

/// Fully resolved manifest for a single optimization run.
pub fn bo_manifest(cfg: &BoConfig, command: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!("command = {command}\n"));
    s.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("benchmark = {}\n", cfg.benchmark));
    if let Some(d) = cfg.bench_dim {
        s.push_str(&format!("dim = {d}\n"));
    }
    s.push_str(&format!("kernel = {}\n", cfg.kernel_family.name()));
    s.push_str(&format!("acquisition = {}\n", cfg.acquisition.name()));
    s.push_str(&format!("ucb_alpha = {}\n", cfg.ucb_alpha));
    s.push_str(&format!("rounds = {}\n", cfg.rounds));
    s.push_str(&format!("n_init = {}\n", cfg.n_init));
    match &cfg.acq_optimizer {
        AcqOptimizer::Direct(dc) => {
            s.push_str("optimizer = direct\n");
            s.push_str(&format!("direct_max_evals = {}\n", dc.max_evals));
            s.push_str(&format!("direct_max_depth = {}\n", dc.max_depth));
            s.push_str(&format!("direct_epsilon_po = {}\n", dc.epsilon_po));
        }
        AcqOptimizer::MultiLocal(n, lc) => {
            s.push_str(&format!("optimizer = local:{n}\n"));
            s.push_str(&format!("eps_opt = {}\n", lc.eps_opt));
            s.push_str(&format!("max_iters = {}\n", lc.max_iters));
            s.push_str(&format!("memory = {}\n", lc.memory));
            s.push_str(&format!("wolfe_c1 = {}\n", lc.wolfe_c1));
            s.push_str(&format!("wolfe_c2 = {}\n", lc.wolfe_c2));
        }
    }
    s.push_str(&format!("noise = {}\n", noise_str(cfg.noise)));
    s.push_str(&format!("fit_starts = {}\n", cfg.fit_starts));
    s.push_str(&format!("seed = {}\n", cfg.seed));
    s
}
