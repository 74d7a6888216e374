use super::rsum::weighted_integral;
use super::state::{norm, CouplingSetup, CouplingState};
use crate::error::Result;
use crate::fractional_kernels::{phi_functional, Block, ROperator};
use serde::{Deserialize, Serialize};

/// The two halves of `(K, α)`-admissibility at a trial boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// `max_T ∫₀^∞ (1+t)^{2α} |R_T g_w^τ(t)|² dt` over the `T` grid, tail
    /// surplus included.
    pub sup_t_integral: f64,
    /// The surplus part of `sup_t_integral` at the maximising `T`.
    pub surplus: f64,
    pub x1_norm: f64,
    pub x2_norm: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub pass_omega1: bool,
    pub pass_omega2: bool,
    pub t_grid: Vec<f64>,
}

impl AdmissibilityReport {
    pub fn pass(&self) -> bool {
        self.pass_omega1 && self.pass_omega2
    }
}

/// `{0} ∪ {2^j dt}` up to `4 T_hist`.
pub fn t_grid(dt: f64, t_hist: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    let mut t = dt;
    while t <= 4.0 * t_hist * (1.0 + 1e-12) {
        g.push(t);
        t *= 2.0;
    }
    g
}

/// `max_T` of the weighted memory integral for a drift history given as
/// blocks (per coordinate) in time relative to the trial boundary.
pub fn memory_sup(hurst: f64, alpha: f64, blocks: &[Vec<Block>], grid: &[f64]) -> (f64, f64) {
    let op = ROperator::new(hurst);
    let mut best = (0.0, 0.0);
    for &big_t in grid {
        let w = weighted_integral(&op, hurst, blocks, big_t, alpha, 1.0);
        if w.total() > best.0 {
            best = (w.total(), w.surplus);
        }
    }
    best
}

pub fn check_admissibility(setup: &CouplingSetup, state: &CouplingState) -> Result<AdmissibilityReport> {
    let cfg = &setup.config;
    let now = state.len();
    let grid = t_grid(cfg.dt, cfg.t_hist);
    let (sup, surplus) = if state.has_drift() {
        let blocks: Vec<Vec<Block>> = (0..setup.dim()).map(|c| state.history_blocks(c, now)).collect();
        memory_sup(cfg.hurst, cfg.alpha, &blocks, &grid)
    } else {
        (0.0, 0.0)
    };
    let from = now.saturating_sub(((cfg.t_hist + 1.0) / cfg.dt).ceil() as usize);
    let tau = state.time();
    let eps = setup.params.eps_theta;
    let w1 = state.wiener(1, from, now);
    let phi1 = phi_functional(&w1, tau, eps, &setup.params)?;
    let phi2 = if state.drift.gw.iter().all(|g| g[from..now].iter().all(|&v| v == 0.0)) {
        phi1
    } else {
        phi_functional(&state.wiener(2, from, now), tau, eps, &setup.params)?
    };
    let x1_norm = norm(&state.x1);
    let x2_norm = norm(&state.x2);
    let k = cfg.k;
    Ok(AdmissibilityReport {
        sup_t_integral: sup,
        surplus,
        x1_norm,
        x2_norm,
        phi1,
        phi2,
        pass_omega1: sup <= 1.0,
        pass_omega2: x1_norm <= k && x2_norm <= k && phi1 <= k && phi2 <= k,
        t_grid: grid,
    })
}
