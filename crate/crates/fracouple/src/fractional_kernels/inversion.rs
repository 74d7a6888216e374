//! The linear maps between the Wiener-level drift `g_w` and the fBm-level drift
//! `g_B`.
//!
//! `g_B = α_H Γ(H+1/2) I^{H-1/2} g_w` (Weyl fractional integral). On a uniform
//! grid with `g_w` constant on cells, the cell averages of `g_B` are given exactly
//! by the discrete Mandelbrot–Van Ness coefficients, so that the fBm built from
//! `W + ∫g_w` differs from the fBm built from `W` by `∫g_B` with no quadrature
//! error. The inverse map solves that lower-triangular Toeplitz system.

use super::conv::CausalKernel;
use super::grid::{DriftRecord, KernelParams};
use super::mvn::mvn_kernel;
use super::roperator::{blocks_of, ROperator};
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Constant `C` such that continuing a drift history `g` by `C·R_0 g` keeps
/// `g_B ≡ 0` afterwards.
pub fn continuation_constant(hurst: f64) -> f64 {
    -(PI * (hurst - 0.5)).sin() / PI
}

fn check(window: &[Vec<f64>], hist: &DriftRecord) -> Result<()> {
    if window.len() != hist.d {
        return Err(Error::Invalid(format!("window has {} coordinates, history {}", window.len(), hist.d)));
    }
    Ok(())
}

/// Cell averages of `g_B` on the window that follows `hist`.
pub fn gw_to_gb(g: &[Vec<f64>], hist: &DriftRecord, params: &KernelParams) -> Result<Vec<Vec<f64>>> {
    check(g, hist)?;
    let kern = mvn_kernel(params, hist.grid.dt);
    Ok(forward_with(&kern, g, hist))
}

pub(crate) fn forward_with(kern: &CausalKernel, g: &[Vec<f64>], hist: &DriftRecord) -> Vec<Vec<f64>> {
    g.iter()
        .zip(&hist.gw)
        .map(|(w, h)| {
            let keep = h.len().min(kern.len());
            let mut z = h[h.len() - keep..].to_vec();
            z.extend_from_slice(w);
            kern.apply(&z, keep)
        })
        .collect()
}

/// Cell values of `g_w` on the window that follows `hist` whose image under
/// [`gw_to_gb`] is `f`.
pub fn gb_to_gw(f: &[Vec<f64>], hist: &DriftRecord, params: &KernelParams) -> Result<Vec<Vec<f64>>> {
    check(f, hist)?;
    let kern = mvn_kernel(params, hist.grid.dt);
    Ok(f.iter().zip(&hist.gw).map(|(fc, h)| kern.solve(fc, h)).collect())
}

/// Closed-form continuation `g_S(t) = C (R_0 g)(t - end)` of the history in
/// `hist` at the times `ts > end`.
pub fn continuation(hist: &DriftRecord, end: f64, ts: &[f64], params: &KernelParams) -> Vec<Vec<f64>> {
    let op = ROperator::new(params.hurst);
    let c = continuation_constant(params.hurst);
    (0..hist.d)
        .map(|k| {
            let blocks = blocks_of(hist, k, end);
            ts.iter().map(|&t| c * op.eval(&blocks, 0.0, t - end)).collect()
        })
        .collect()
}

/// Least-squares fit of the continuation constant: for the unit bump history on
/// `[-1, 0]` the discrete drift keeping `g_B ≡ 0` on `[0, span]` is compared with
/// `R_0` of the bump at cell midpoints away from the junction.
/// Returns `(fitted, closed form)`.
pub fn fit_continuation_constant(params: &KernelParams, dt: f64, span: f64) -> (f64, f64) {
    use super::grid::UniformGrid;
    let n_hist = (1.0 / dt).round() as usize;
    let grid = UniformGrid { t0: -1.0, dt, n: n_hist };
    let mut hist = DriftRecord::zeros(grid, 1, params.t_hist);
    hist.gw[0].iter_mut().for_each(|v| *v = 1.0);
    let n = (span / dt).round() as usize;
    let kern = mvn_kernel(params, dt);
    let gs = kern.solve(&vec![0.0; n], &hist.gw[0]);
    let op = ROperator::new(params.hurst);
    let blocks = blocks_of(&hist, 0, 0.0);
    let (mut num, mut den) = (0.0, 0.0);
    for (i, g) in gs.iter().enumerate() {
        let t = (i as f64 + 0.5) * dt;
        if t < 1.0 {
            continue;
        }
        let r = op.eval(&blocks, 0.0, t);
        num += g * r;
        den += r * r;
    }
    (num / den, continuation_constant(params.hurst))
}
