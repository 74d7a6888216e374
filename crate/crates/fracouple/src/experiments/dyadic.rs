use super::{ExperimentConfig, CK_STREAM};
use crate::coupling_engine::{measure_ck, step1_coupled_pilot, step2_attempt, step2_lazy, CouplingSetup, CouplingState};
use crate::error::Result;
use crate::rng::stream;
use serde::{Deserialize, Serialize};

/// Failure statistics of dyadic trial `ℓ`, conditional on reaching it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicLevel {
    pub ell: u32,
    pub draws: usize,
    pub failures: usize,
    pub rate: f64,
    /// Standard error from the per-history failure fractions.
    pub se: f64,
    /// `[2^{-αℓ-1}, 2^{-αℓ}]`.
    pub band: (f64, f64),
    pub budget_violations: usize,
}

impl DyadicLevel {
    pub fn within_band(&self, n_se: f64) -> bool {
        self.rate >= self.band.0 - n_se * self.se && self.rate <= self.band.1 + n_se * self.se
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicStats {
    pub ck: f64,
    pub c2: f64,
    pub pilots: usize,
    /// Pilots whose coupled Step 1 stuck.
    pub stuck: usize,
    pub levels: Vec<DyadicLevel>,
    /// Simulated Step-2 successes checked for exactness.
    pub exact_checked: usize,
    pub max_exactness: f64,
}

/// Runs the coupled Step-1 branch from `(x1, x2)` on `pilots` histories with
/// `C_K` measured first (or taken from the config). For each one that sticks,
/// Step 2 is simulated on a copy for the exactness check, and `draws` lazy
/// trials are drawn at each level in `levels`. The lazy trials use the same
/// post-Step-1 history because the continuation is deterministic given it.
pub fn dyadic_statistics(config: &ExperimentConfig, pilots: usize, draws: usize, levels: &[u32]) -> Result<DyadicStats> {
    config.validate()?;
    let model = config.model_spec()?;
    let base = CouplingSetup::new(model.clone(), config.coupling.clone())?;
    let ck = match config.ck {
        Some(ck) => ck,
        None => measure_ck(&base, config.ck_runs, Some((&config.x1, &config.x2)), &mut stream(config.seed, CK_STREAM))?.ck,
    };
    let setup = CouplingSetup::new(model, config.coupling.clone().with_ck(ck))?;
    let cfg = &setup.config;
    let max_ell = levels.iter().copied().max().unwrap_or(0);
    let mut per: Vec<Vec<f64>> = vec![Vec::new(); levels.len()];
    let mut out: Vec<DyadicLevel> = levels
        .iter()
        .map(|&ell| DyadicLevel {
            ell,
            draws: 0,
            failures: 0,
            rate: 0.0,
            se: 0.0,
            band: (2f64.powf(-cfg.alpha * ell as f64 - 1.0), 2f64.powf(-cfg.alpha * ell as f64)),
            budget_violations: 0,
        })
        .collect();
    let (mut stuck, mut exact_checked, mut max_exactness) = (0, 0, 0.0f64);
    for r in 0..pilots as u64 {
        let mut rng = stream(config.seed, r);
        let mut state = CouplingState::new(&setup, &config.x1, &config.x2, cfg.past, &mut rng)?;
        if step1_coupled_pilot(&setup, &mut state, &mut rng)?.is_none() {
            continue;
        }
        stuck += 1;
        let t1 = state.len();
        let s0 = state.steps();

        let mut sim = state.clone();
        for ell in 1..=max_ell {
            let o = step2_attempt(&setup, &mut sim, ell, &mut rng)?;
            if !o.success {
                break;
            }
            if o.norm > 0.0 {
                exact_checked += 1;
                max_exactness = max_exactness.max(o.exactness);
            }
        }

        let mut s = s0;
        for ell in 1..=max_ell {
            if let Some(i) = levels.iter().position(|&l| l == ell) {
                let mut fails = 0;
                for _ in 0..draws {
                    let o = step2_lazy(&setup, &state, t1, ell, s, &mut rng)?;
                    fails += !o.success as usize;
                    out[i].budget_violations += o.budget_violation as usize;
                }
                out[i].draws += draws;
                out[i].failures += fails;
                per[i].push(fails as f64 / draws.max(1) as f64);
            }
            s += cfg.interval_steps(ell);
        }
    }
    for (lv, xs) in out.iter_mut().zip(&per) {
        let n = xs.len() as f64;
        if n > 1.0 {
            let m = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
            lv.rate = m;
            lv.se = (var / n).sqrt();
        }
    }
    Ok(DyadicStats { ck, c2: cfg.c2, pilots, stuck, levels: out, exact_checked, max_exactness })
}
