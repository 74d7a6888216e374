use super::rsum::{interval_l2, RSum};
use super::scalar::ScalarCoupling;
use super::state::{CouplingSetup, CouplingState};
use crate::error::Result;
use crate::fractional_kernels::{continuation_constant, Block, ROperator};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Cell values of the drift that keeps `g_B ≡ 0` on the next `n` cells given
/// the stored `g_w` history: the exact discrete continuation.
pub fn discrete_gs(setup: &CouplingSetup, state: &CouplingState, n: usize) -> Vec<Vec<f64>> {
    let zeros = vec![0.0; n];
    (0..setup.dim()).map(|c| setup.kern.solve(&zeros, &state.drift.gw[c])).collect()
}

/// Closed-form continuation `g_S(t) = C (R₀ g_w^{T₁})(t - T₁)` of the history
/// stored before cell `t1_index`, at the absolute times `ts > T₁`.
pub fn compute_gs(setup: &CouplingSetup, state: &CouplingState, t1_index: usize, ts: &[f64]) -> Vec<Vec<f64>> {
    let h = setup.config.hurst;
    let op = ROperator::new(h);
    let c = continuation_constant(h);
    let t1 = (t1_index as f64 - state.origin as f64) * state.dt;
    (0..setup.dim())
        .map(|k| {
            let blocks = state.history_blocks(k, t1_index);
            let s = RSum::new(&op, h, &blocks, 0.0);
            ts.iter().map(|&t| c * s.eval(t - t1)).collect()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Step2Outcome {
    pub ell: u32,
    pub success: bool,
    /// `‖g_S‖₂` on the interval.
    pub norm: f64,
    pub budget: f64,
    /// `‖g_S‖₂` exceeded the budget, which was raised to match.
    pub budget_violation: bool,
    /// Resolved from the closed-form norm without simulating paths.
    pub lazy: bool,
    pub u1: f64,
    pub u2: f64,
    /// `max_t |(W² - W¹)(t) - ∫g_S|` over the interval, on success.
    pub exactness: f64,
}

fn coupling(norm: f64, budget: f64) -> Result<(ScalarCoupling, bool)> {
    let violation = norm > budget;
    Ok((ScalarCoupling::new(norm, budget.max(norm))?, violation))
}

/// Dyadic trial `ℓ` on the next `c2 2^ℓ` time units: the scalar shift
/// coupling of the component along `g_S` lifted to whole Wiener increments,
/// `W^i = (U^i + V) G/‖g‖ + W̃` with `W̃ = ξ^⊥ - V G/‖g‖`.
pub fn step2_attempt(setup: &CouplingSetup, state: &mut CouplingState, ell: u32, rng: &mut impl Rng) -> Result<Step2Outcome> {
    let d = setup.dim();
    let dt = setup.dt();
    let n = setup.config.interval_steps(ell) as usize;
    let g = discrete_gs(setup, state, n);
    let norm = (g.iter().flatten().map(|v| v * v).sum::<f64>() * dt).sqrt();
    let budget = setup.config.budget(ell);
    let mut out = Step2Outcome { ell, success: true, norm, budget, budget_violation: false, lazy: false, u1: 0.0, u2: 0.0, exactness: 0.0 };
    if norm == 0.0 {
        let w = super::state::fresh(d, n, dt, rng);
        state.advance(setup, w, None)?;
        state.x2 = state.x1.clone();
        return Ok(out);
    }
    let (sc, violation) = coupling(norm, budget)?;
    out.budget_violation = violation;
    let draw = sc.draw(rng);
    out.u1 = draw.u1;
    out.u2 = draw.u2;
    let v: f64 = rng.sample(StandardNormal);
    let sdt = dt.sqrt();
    let mut xi: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect();
    // unit direction e_j = g_j √dt / ‖g‖; remove the component of ξ along it
    let proj: f64 = xi.iter().zip(&g).map(|(x, g)| x.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>() * sdt / norm;
    for (x, gc) in xi.iter_mut().zip(&g) {
        for (a, b) in x.iter_mut().zip(gc) {
            *a -= proj * b * sdt / norm;
        }
    }
    let dir = |c: usize, i: usize| g[c][i] * dt / norm;
    let tilde = |c: usize, i: usize| sdt * xi[c][i] - v * dir(c, i);
    let w1: Vec<Vec<f64>> = (0..d).map(|c| (0..n).map(|i| (draw.u1 + v) * dir(c, i) + tilde(c, i)).collect()).collect();
    let w2: Vec<Vec<f64>> = (0..d).map(|c| (0..n).map(|i| (draw.u2 + v) * dir(c, i) + tilde(c, i)).collect()).collect();
    let gw: Vec<Vec<f64>> = (0..d).map(|c| (0..n).map(|i| (w2[c][i] - w1[c][i]) / dt).collect()).collect();
    if draw.success {
        let mut worst = 0.0f64;
        for c in 0..d {
            let mut acc = 0.0;
            for i in 0..n {
                acc += (gw[c][i] - g[c][i]) * dt;
                worst = worst.max(acc.abs());
            }
        }
        out.exactness = worst;
    }
    let seg = state.advance(setup, w1, Some(gw))?;
    let stuck = *seg.dist.last().unwrap() <= setup.tol_stick(&state.x1);
    out.success = draw.success && stuck;
    if out.success {
        state.x2 = state.x1.clone();
    }
    Ok(out)
}

/// Dyadic trial `ℓ` on `[s, s + c2 2^ℓ]` (steps since time 0) resolved without
/// simulation, using the closed-form norm of the continuation of the history
/// up to `T₁` (cell `t1_index`).
pub fn step2_lazy(
    setup: &CouplingSetup,
    state: &CouplingState,
    t1_index: usize,
    ell: u32,
    s_step: u64,
    rng: &mut impl Rng,
) -> Result<Step2Outcome> {
    let h = setup.config.hurst;
    let op = ROperator::new(h);
    let blocks: Vec<Vec<Block>> = (0..setup.dim()).map(|c| state.history_blocks(c, t1_index)).collect();
    let lo = (s_step as f64 + state.origin as f64 - t1_index as f64) * state.dt;
    let hi = lo + setup.config.interval_len(ell);
    let norm = interval_l2(&op, h, &blocks, lo, hi, continuation_constant(h)).sqrt();
    let budget = setup.config.budget(ell);
    let mut out = Step2Outcome { ell, success: true, norm, budget, budget_violation: false, lazy: true, u1: 0.0, u2: 0.0, exactness: 0.0 };
    if norm > 0.0 {
        let (sc, violation) = coupling(norm, budget)?;
        out.budget_violation = violation;
        let draw = sc.draw(rng);
        out.u1 = draw.u1;
        out.u2 = draw.u2;
        out.success = draw.success;
    }
    Ok(out)
}
