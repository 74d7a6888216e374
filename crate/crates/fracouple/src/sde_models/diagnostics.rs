use super::integrate::Trajectory;
use crate::error::{Error, Result};
use crate::fractional_kernels::{holder_norm, FbmPath};

/// Constants of the one-window bound
/// `sup F(X_t) ≤ C (F(X_τ) + β̃ (1 + ‖B‖_θ^{τ,τ+1})^{4/(2θ-1)})`, `F = 1 + |x|²`.
#[derive(Debug, Clone, Copy)]
pub struct PathBoundInputs {
    pub c_diag: f64,
    pub beta_tilde: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathBoundDiagnostic {
    pub lhs: f64,
    pub rhs: f64,
    pub violated: bool,
}

fn f_of(x: &[f64]) -> f64 {
    1.0 + x.iter().map(|v| v * v).sum::<f64>()
}

fn parts(traj: &Trajectory, fbm: &FbmPath, theta: f64) -> Result<(f64, f64, f64)> {
    if traj.grid != fbm.grid || traj.d != fbm.d {
        return Err(Error::Invalid("trajectory and noise must share grid and dimension".into()));
    }
    let lhs = (0..=traj.grid.n).map(|i| f_of(traj.state(i))).fold(0.0f64, f64::max);
    let values: Vec<Vec<f64>> = (0..fbm.d).map(|c| fbm.values(c)).collect();
    let (a, b) = (traj.grid.t0, traj.grid.t_end());
    let noise = (1.0 + holder_norm(&values, &traj.grid, theta, a, b)?).powf(4.0 / (2.0 * theta - 1.0));
    Ok((lhs, f_of(traj.state(0)), noise))
}

pub fn path_bound_check(traj: &Trajectory, fbm: &FbmPath, k: &PathBoundInputs) -> Result<PathBoundDiagnostic> {
    let (lhs, f0, noise) = parts(traj, fbm, k.theta)?;
    let rhs = k.c_diag * (f0 + k.beta_tilde * noise);
    Ok(PathBoundDiagnostic { lhs, rhs, violated: lhs > rhs })
}

/// Smallest `C` making every pilot window satisfy the bound, times `safety`.
pub fn fit_path_bound_constant(
    pilot: &[(Trajectory, FbmPath)],
    beta_tilde: f64,
    theta: f64,
    safety: f64,
) -> Result<f64> {
    let mut c = 1.0f64;
    for (traj, fbm) in pilot {
        let (lhs, f0, noise) = parts(traj, fbm, theta)?;
        c = c.max(lhs / (f0 + beta_tilde * noise));
    }
    Ok(c * safety)
}
