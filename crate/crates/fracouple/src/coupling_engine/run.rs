use super::admissibility::{check_admissibility, AdmissibilityReport};
use super::state::{fresh, CouplingSetup, CouplingState, Phase};
use super::step1::{step1_attempt, Branch};
use super::step2::{step2_attempt, step2_lazy, Step2Outcome};
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Everything logged about trial `k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub k: u32,
    pub attempted: bool,
    pub step1_success: bool,
    /// `Some(0)`: Step 1 failed; `Some(ℓ)`: dyadic trial `ℓ` failed; `None`:
    /// every trial up to `ℓ_max` succeeded.
    pub ell_star: Option<u32>,
    pub tau_prev: f64,
    /// `τ_k`, infinite after a full success.
    pub tau_k: f64,
    /// Grid steps since time 0 at `τ_{k-1}`.
    pub tau_prev_step: u64,
    pub step1_steps: u64,
    /// `s_{k,ℓ}` for every dyadic trial run, in steps since time 0.
    pub interval_starts: Vec<u64>,
    pub interval_steps: Vec<u64>,
    /// First dyadic index resolved from the closed-form norm.
    pub lazy_from: Option<u32>,
    /// `τ_k³` in steps.
    pub tau3_step: u64,
    /// `c3 ς^k 2^{βℓ*}` in time units and in steps (saturating).
    pub wait_len: f64,
    pub wait_steps: u64,
    pub c3: f64,
    pub girsanov_l2: f64,
    pub branch: Branch,
    pub admissibility: AdmissibilityReport,
    pub a1: f64,
    pub a2: f64,
    pub step2: Vec<Step2Outcome>,
    pub merge_time: Option<f64>,
    pub local: bool,
    pub rho_fallback: bool,
}

impl TrialRecord {
    pub fn budget_violations(&self) -> usize {
        self.step2.iter().filter(|o| o.budget_violation).count()
    }

    /// Worst Step-2 exactness over the simulated successful intervals.
    pub fn max_exactness(&self) -> f64 {
        self.step2.iter().filter(|o| o.success && !o.lazy).map(|o| o.exactness).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingRun {
    pub tau0: u64,
    /// Merge time; `None` if censored.
    pub tau_inf: Option<f64>,
    pub censored: bool,
    pub t_max: f64,
    pub ell_max: u32,
    pub eps_horizon: f64,
    pub trials: Vec<TrialRecord>,
}

pub const TRIAL_HEADER: &str = "k,attempted,step1_success,ell_star,tau_prev,tau_k,girsanov_l2,branch,adm_sup_T,adm_phi1,adm_phi2,adm_pass";

impl CouplingRun {
    pub fn write_trials(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{TRIAL_HEADER}")?;
        for t in &self.trials {
            let ell = t.ell_star.map_or("inf".to_string(), |l| l.to_string());
            let a = &t.admissibility;
            writeln!(
                out,
                "{},{},{},{},{:?},{:?},{:?},{},{:?},{:?},{:?},{}",
                t.k,
                t.attempted,
                t.step1_success,
                ell,
                t.tau_prev,
                t.tau_k,
                t.girsanov_l2,
                t.branch.as_str(),
                a.sup_t_integral,
                a.phi1,
                a.phi2,
                a.pass()
            )?;
        }
        Ok(())
    }
}

/// `Δ₃(ℓ, k)` of the setup in time units and grid steps.
pub fn wait_duration(setup: &CouplingSetup, ell: u32, k: u32) -> (f64, u64) {
    let len = setup.config.wait_len(setup.c3_eff, ell, k);
    let steps = (len / setup.dt()).round();
    (len, if steps >= u64::MAX as f64 { u64::MAX } else { steps as u64 })
}

/// Step 3: both systems on shared innovations with `g_w = 0` for `Δ₃(ℓ, k)`.
pub fn step3_wait(setup: &CouplingSetup, state: &mut CouplingState, ell: u32, k: u32, rng: &mut impl Rng) -> Result<u64> {
    let (_, n) = wait_duration(setup, ell, k);
    state.phase = Phase::Step3;
    advance_plain(setup, state, n, rng)?;
    Ok(n)
}

const CHUNK: u64 = 1 << 14;

fn advance_plain(setup: &CouplingSetup, state: &mut CouplingState, n: u64, rng: &mut impl Rng) -> Result<()> {
    let mut left = n;
    while left > 0 {
        let m = left.min(CHUNK);
        let w = fresh(setup.dim(), m as usize, setup.dt(), rng);
        state.advance(setup, w, None)?;
        left -= m;
    }
    Ok(())
}

fn dump_state(state: &CouplingState) -> Option<std::path::PathBuf> {
    let text = toml::to_string(state).ok()?;
    let path = std::env::temp_dir().join(format!("fracouple-state-k{}-t{}.toml", state.k, state.steps()));
    std::fs::write(&path, text).ok()?;
    Some(path)
}

/// Runs the coupling from `(x₁, x₂)` with the configured shared past until the
/// merge is declared or the clock passes `t_max`.
pub fn run_coupling(setup: &CouplingSetup, x1: &[f64], x2: &[f64], t_max: f64, rng: &mut impl Rng) -> Result<CouplingRun> {
    let state = CouplingState::new(setup, x1, x2, setup.config.past, rng)?;
    run_from(setup, state, t_max, rng)
}

/// Continues a run from a state in `WaitTau0` or at a Step-1 boundary.
pub fn run_from(setup: &CouplingSetup, mut state: CouplingState, t_max: f64, rng: &mut impl Rng) -> Result<CouplingRun> {
    let tau0 = setup.tau0(&state.x1, &state.x2);
    let mut run = CouplingRun {
        tau0,
        tau_inf: None,
        censored: true,
        t_max,
        ell_max: setup.ell_max,
        eps_horizon: setup.config.eps_horizon,
        trials: Vec::new(),
    };
    match drive(setup, &mut state, &mut run, t_max, rng) {
        Ok(()) => Ok(run),
        Err(e) => Err(Error::Run {
            context: format!("trial {} at t = {} in phase {:?}", state.k, state.time(), state.phase),
            dump: dump_state(&state),
            source: Box::new(e),
        }),
    }
}

fn drive(setup: &CouplingSetup, state: &mut CouplingState, run: &mut CouplingRun, t_max: f64, rng: &mut impl Rng) -> Result<()> {
    let cfg = &setup.config;
    let t_max_steps = cfg.steps(t_max);
    if state.phase == Phase::WaitTau0 {
        let n = cfg.steps(run.tau0 as f64);
        if n > t_max_steps {
            state.phase = Phase::Censored;
            return Ok(());
        }
        advance_plain(setup, state, n, rng)?;
        state.phase = Phase::Step1;
    }
    while state.steps() <= t_max_steps {
        state.k += 1;
        let k = state.k;
        state.phase = Phase::Step1;
        state.tau_prev = state.time();
        state.clocks = vec![state.tau_prev];
        let tau_prev_step = state.steps();
        let adm = check_admissibility(setup, state)?;
        let s1 = step1_attempt(setup, state, adm.pass(), rng)?;
        state.clocks.push(state.time());
        let mut rec = TrialRecord {
            k,
            attempted: s1.attempted,
            step1_success: s1.success,
            ell_star: Some(0),
            tau_prev: state.tau_prev,
            tau_k: f64::INFINITY,
            tau_prev_step,
            step1_steps: state.steps() - tau_prev_step,
            interval_starts: Vec::new(),
            interval_steps: Vec::new(),
            lazy_from: None,
            tau3_step: state.steps(),
            wait_len: 0.0,
            wait_steps: 0,
            c3: setup.c3_eff,
            girsanov_l2: s1.girsanov_l2,
            branch: s1.branch,
            admissibility: adm,
            a1: s1.a1,
            a2: s1.a2,
            step2: Vec::new(),
            merge_time: s1.merge_time,
            local: s1.local,
            rho_fallback: s1.rho_fallback,
        };
        let mut lazy = false;
        if s1.success {
            let t1_index = state.len();
            let mut s = state.steps();
            rec.ell_star = None;
            for ell in 1..=setup.ell_max {
                let n = cfg.interval_steps(ell);
                rec.interval_starts.push(s);
                rec.interval_steps.push(n);
                state.phase = Phase::Step2(ell);
                if !lazy && s + n > t_max_steps {
                    lazy = true;
                    rec.lazy_from = Some(ell);
                }
                let o = if lazy {
                    step2_lazy(setup, state, t1_index, ell, s, rng)?
                } else {
                    step2_attempt(setup, state, ell, rng)?
                };
                s += n;
                let ok = o.success;
                rec.step2.push(o);
                if !ok {
                    rec.ell_star = Some(ell);
                    break;
                }
            }
            rec.tau3_step = s;
        }
        match rec.ell_star {
            None => {
                let merge = s1.merge_time.expect("Step-1 success records a merge time");
                state.phase = Phase::Coupled;
                state.coupled_since = Some(merge);
                run.trials.push(rec);
                if merge <= t_max {
                    run.tau_inf = Some(merge);
                    run.censored = false;
                } else {
                    state.phase = Phase::Censored;
                }
                return Ok(());
            }
            Some(ell) => {
                let (len, n) = wait_duration(setup, ell, k);
                rec.wait_len = len;
                rec.wait_steps = n;
                rec.tau_k = rec.tau3_step as f64 * cfg.dt + len;
                state.clocks.push(rec.tau3_step as f64 * cfg.dt);
                let next = rec.tau3_step.saturating_add(n);
                run.trials.push(rec);
                if lazy || next > t_max_steps {
                    break;
                }
                step3_wait(setup, state, ell, k, rng)?;
                state.clocks.push(state.time());
            }
        }
    }
    state.phase = Phase::Censored;
    Ok(())
}
