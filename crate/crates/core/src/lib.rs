//! Bayesian optimization with interchangeable acquisition maximizers.
//!
//! The library provides a Gaussian-process surrogate with analytic posterior
//! gradients ([`gp`]), gradient-equipped PI/EI/GP-UCB acquisitions
//! ([`acquisition`]), three maximization strategies (deterministic DIRECT,
//! single-start quasi-Newton, multi-started quasi-Newton, in [`opt`]), a
//! registry of standard test objectives ([`benchmarks`]), the sequential
//! optimization loop ([`bo`]), and an experiment harness that measures the
//! per-round regret differences between the global and multi-started local
//! maximizers on synchronized histories ([`regret`]).
//!
//! Everything is deterministic given a seed: parallel workers derive their
//! own ChaCha streams, and reductions never depend on scheduling order.

pub mod acquisition;
pub mod benchmarks;
pub mod bo;
pub mod config;
pub mod domain;
pub mod error;
pub mod gp;
pub mod kernel;
pub mod normal;
pub mod opt;
pub mod regret;
pub mod rng;

pub use acquisition::{acq_grad, acq_value, AcqSurface, AcquisitionKind, AcquisitionSpec};
pub use benchmarks::{get_benchmark, Benchmark};
pub use bo::{run_bo, AcqOptimizer, BoConfig, History, NoisePolicy};
pub use domain::Domain;
pub use error::{Error, Result};
pub use gp::{fit_gp, fit_gp_with, FitConfig, GpModel, Hyperparams, NoiseMode};
pub use kernel::{Kernel, KernelFamily};
pub use opt::{
    direct_maximize, local_maximize, multi_start_maximize, Differentiable, DirectConfig,
    LocalSearchConfig, Objective, OptResult, Strategy,
};
pub use regret::{
    estimate_basins, moving_average, run_regret_experiment, BasinStats, ExperimentConfig,
    ExperimentOutput, RegretRecord,
};
