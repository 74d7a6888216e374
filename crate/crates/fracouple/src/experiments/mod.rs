//! Replica orchestration, survival curves of the merge time and the validation
//! suite.

mod dyadic;
mod tail;
mod validate;

pub use dyadic::{dyadic_statistics, DyadicLevel, DyadicStats};
pub use tail::{log_nodes, rate_fit, tv_bound, wilson, Consistency, RateFit, TailEstimate, TailOpts, TvBound, SURVIVAL_HEADER};
pub use validate::{
    fou_exact, schedule_violations, step1_marginals, validate_suite, Step1Stats, ValidateOpts, ValidationItem, ValidationReport, REPORT_HEADER,
};

use crate::coupling_engine::{measure_ck, run_coupling, CkEstimate, CouplingConfig, CouplingRun, CouplingSetup};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::sde_models::{model_by_name, ModelSpec};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Stream id reserved for the `C_K` pilot; replicas use `0..n_replicas`.
pub const CK_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: String,
    pub d: usize,
    /// Rotation speed of `planar_rotation`.
    pub rho_rot: f64,
    pub coupling: CouplingConfig,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub n_replicas: usize,
    pub t_max: f64,
    pub seed: u64,
    /// Worker threads; `0` uses every available core.
    pub workers: usize,
    /// Pilot Step-1 couplings used to measure `C_K` when it is not given.
    pub ck_runs: usize,
    /// Fixed `C_K`; measured if `None`.
    pub ck: Option<f64>,
    pub tail: TailOpts,
    /// `ε` of the `t^{-(1/8-ε)}` envelope.
    pub eps_rate: f64,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// `H = 0.7`, `θ = 0.6`, starts `±1` in every coordinate, 500 replicas up
    /// to `t = 1000`.
    pub fn new(model: &str, d: usize) -> Self {
        let mut coupling = CouplingConfig::new(0.7);
        coupling.theta = 0.6;
        coupling.c3 = 4.0;
        Self {
            model: model.into(),
            d,
            rho_rot: 1.0,
            coupling,
            x1: vec![1.0; d],
            x2: vec![-1.0; d],
            n_replicas: 500,
            t_max: 1000.0,
            seed: 42,
            workers: 0,
            ck_runs: 200,
            ck: None,
            tail: TailOpts::default(),
            eps_rate: 0.01,
            out_dir: PathBuf::from("out"),
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        model_by_name(&self.model, self.d, self.rho_rot)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.coupling.validate()?;
        let m = self.model_spec()?;
        if self.n_replicas == 0 {
            return bad("n_replicas must be at least 1".into());
        }
        if !(self.t_max > 0.0) {
            return bad("t_max must be positive".into());
        }
        if self.x1.len() != m.dim() || self.x2.len() != m.dim() {
            return bad(format!("x1 and x2 must have {} coordinates", m.dim()));
        }
        if !(self.eps_rate > 0.0 && self.eps_rate < 0.125) {
            return bad("eps_rate must lie in (0, 1/8)".into());
        }
        let (lo, hi) = self.tail.window;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return bad("fit window must satisfy 0 < lo < hi < 1".into());
        }
        if let Some(ck) = self.ck {
            if !(ck >= 1.0) {
                return bad("C_K must be at least 1".into());
            }
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
    }
}

/// Measures `C_K` (unless fixed) and builds the coupling setup with
/// `c2 = C_K^{1/(2α)}`.
pub fn prepare_setup(config: &ExperimentConfig) -> Result<(CouplingSetup, Option<CkEstimate>)> {
    config.validate()?;
    let model = config.model_spec()?;
    if let Some(ck) = config.ck {
        return Ok((CouplingSetup::new(model, config.coupling.clone().with_ck(ck))?, None));
    }
    let pilot = CouplingSetup::new(model.clone(), config.coupling.clone())?;
    let est = measure_ck(&pilot, config.ck_runs, Some((&config.x1, &config.x2)), &mut stream(config.seed, CK_STREAM))?;
    Ok((CouplingSetup::new(model, config.coupling.clone().with_ck(est.ck))?, Some(est)))
}

/// Per-replica summary kept after the trial logs are dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub tau_inf: Option<f64>,
    pub tau0: u64,
    pub trials: usize,
    pub step1_successes: usize,
    pub budget_violations: usize,
    pub schedule_violations: usize,
}

impl ReplicaSummary {
    pub fn of(setup: &CouplingSetup, run: &CouplingRun) -> Self {
        Self {
            tau_inf: run.tau_inf,
            tau0: run.tau0,
            trials: run.trials.len(),
            step1_successes: run.trials.iter().filter(|t| t.step1_success).count(),
            budget_violations: run.trials.iter().map(|t| t.budget_violations()).sum(),
            schedule_violations: schedule_violations(setup, run),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailRun {
    pub tail: TailEstimate,
    pub rate: RateFit,
    pub ck: f64,
    pub ck_estimate: Option<CkEstimate>,
    pub c2: f64,
    pub replicas: Vec<ReplicaSummary>,
}

/// Runs every replica of `config` on the worker pool; replica `r` draws from
/// `stream(seed, r)` and results are collected in replica order.
pub fn run_replicas(config: &ExperimentConfig, setup: &CouplingSetup) -> Result<Vec<ReplicaSummary>> {
    let pool = config.pool()?;
    let results: Vec<Result<ReplicaSummary>> = pool.install(|| {
        (0..config.n_replicas as u64)
            .into_par_iter()
            .map(|r| {
                let run = run_coupling(setup, &config.x1, &config.x2, config.t_max, &mut stream(config.seed, r))?;
                Ok(ReplicaSummary::of(setup, &run))
            })
            .collect()
    });
    results.into_iter().collect()
}

/// Survival curve of the merge time over `n_replicas` independent couplings.
pub fn estimate_coupling_tail(config: &ExperimentConfig) -> Result<TailRun> {
    let (setup, ck_estimate) = prepare_setup(config)?;
    let replicas = run_replicas(config, &setup)?;
    let times = replicas.iter().map(|r| r.tau_inf).collect();
    let tail = TailEstimate::from_times(times, config.t_max, &config.tail);
    let rate = rate_fit(&tail, config.eps_rate);
    Ok(TailRun { tail, rate, ck: setup.config.ck, ck_estimate, c2: setup.config.c2, replicas })
}

/// Upper confidence bound of `Ŝ(t)` on `grid` as a bound on the total-variation
/// distance.
pub fn estimate_tv_bound(config: &ExperimentConfig, grid: &[f64]) -> Result<TvBound> {
    let run = estimate_coupling_tail(config)?;
    Ok(tv_bound(&run.tail, grid))
}

/// Pareto merge times `τ = U^{-1/γ}` with survival `t^{-γ}` on `t ≥ 1`, censored
/// at `t_max`.
pub fn synthetic_pareto(n: usize, gamma: f64, t_max: f64, seed: u64) -> Vec<Option<f64>> {
    (0..n as u64)
        .map(|r| {
            let u: f64 = 1.0 - stream(seed, r).random::<f64>();
            let t = u.powf(-1.0 / gamma);
            (t <= t_max).then_some(t)
        })
        .collect()
}

/// Exponential merge times with rate `lambda`, censored at `t_max`.
pub fn synthetic_exponential(n: usize, lambda: f64, t_max: f64, seed: u64) -> Vec<Option<f64>> {
    (0..n as u64)
        .map(|r| {
            let u: f64 = 1.0 - stream(seed, r).random::<f64>();
            let t = -u.ln() / lambda;
            (t <= t_max).then_some(t)
        })
        .collect()
}
