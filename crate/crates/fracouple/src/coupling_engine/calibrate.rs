use super::rsum::weighted_integral;
use super::state::{CouplingSetup, CouplingState};
use super::step1::step1_coupled_pilot;
use crate::error::Result;
use crate::fractional_kernels::{continuation_constant, Block, ROperator};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub const CK_SAFETY: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CkEstimate {
    pub ck: f64,
    /// Largest `∫₀^∞ (1+t)^{2α} |g_S(τ+1+t)|² dt` seen.
    pub max_integral: f64,
    pub n_success: usize,
    pub n_runs: usize,
    /// `C_K^{1/(2α)}`.
    pub c2: f64,
}

/// Weighted `L²` mass of the continuation `g_S` of the drift history stored
/// in `state` (as seen from its current time).
pub fn continuation_weight(setup: &CouplingSetup, state: &CouplingState) -> f64 {
    let h = setup.config.hurst;
    let op = ROperator::new(h);
    let end = state.len();
    let blocks: Vec<Vec<Block>> = (0..setup.dim()).map(|c| state.history_blocks(c, end)).collect();
    weighted_integral(&op, h, &blocks, 0.0, setup.config.alpha, continuation_constant(h)).total()
}

/// `C_K` from `n_runs` pilot Step-1 couplings started from independent
/// standard normal pairs restricted to the `K`-ball (or from `start` if given).
pub fn measure_ck(
    setup: &CouplingSetup,
    n_runs: usize,
    start: Option<(&[f64], &[f64])>,
    rng: &mut impl Rng,
) -> Result<CkEstimate> {
    let d = setup.dim();
    let k = setup.config.k;
    let draw = |rng: &mut dyn rand::RngCore| -> Vec<f64> {
        let mut x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let r = super::state::norm(&x);
        if r > k {
            x.iter_mut().for_each(|v| *v *= k / r);
        }
        x
    };
    let mut max_integral = 0.0f64;
    let mut n_success = 0;
    for _ in 0..n_runs {
        let (x1, x2) = match start {
            Some((a, b)) => (a.to_vec(), b.to_vec()),
            None => (draw(rng), draw(rng)),
        };
        let mut state = CouplingState::new(setup, &x1, &x2, setup.config.past, rng)?;
        if step1_coupled_pilot(setup, &mut state, rng)?.is_some() {
            n_success += 1;
            max_integral = max_integral.max(continuation_weight(setup, &state));
        }
    }
    let ck = (CK_SAFETY * max_integral).max(1.0);
    Ok(CkEstimate { ck, max_integral, n_success, n_runs, c2: ck.powf(1.0 / (2.0 * setup.config.alpha)) })
}
