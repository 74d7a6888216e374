use super::checks::Probe;
use super::integrate::integrate;
use super::model::SdeModel;
use crate::error::{Error, Result};
use crate::fractional_kernels::{holder_norm, sample_fgn, KernelParams, UniformGrid};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct ContractionOpts {
    pub dt: f64,
    /// Initial points are probed in `B̄(0, radius)`.
    pub radius: f64,
    pub n_points: usize,
    pub rho_grid: usize,
}

impl Default for ContractionOpts {
    fn default() -> Self {
        Self { dt: 1.0 / 128.0, radius: 10.0, n_points: 20, rho_grid: 1000 }
    }
}

/// Fitted pair for `Ψ(X_1) ≤ ρ Ψ(x) + C (1 + ‖B‖_θ^{0,1})`, `Ψ = V^{(2θ-1)/4}`.
#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub rho: f64,
    pub c: f64,
    /// Share of samples within 1e-9 (relative) of the fitted bound.
    pub active_fraction: f64,
    pub n_samples: usize,
    /// `false` when no `ρ < 1` gives a finite stationary level `C/(1-ρ)`.
    pub fitted: bool,
}

pub(crate) struct Sample {
    psi_x: f64,
    psi_x1: f64,
    noise: f64,
}

pub fn contraction_estimate<M: SdeModel + ?Sized>(
    model: &M,
    params: &KernelParams,
    n_paths: usize,
    rng: &mut impl Rng,
) -> Result<ContractionReport> {
    contraction_estimate_with(model, params, n_paths, rng, &ContractionOpts::default())
}

pub fn contraction_estimate_with<M: SdeModel + ?Sized>(
    model: &M,
    params: &KernelParams,
    n_paths: usize,
    rng: &mut impl Rng,
    opts: &ContractionOpts,
) -> Result<ContractionReport> {
    if n_paths == 0 || opts.n_points == 0 {
        return Err(Error::Invalid("contraction estimate needs at least one sample".into()));
    }
    let d = model.dim();
    let gamma = (2.0 * params.theta - 1.0) / 4.0;
    let psi = |x: &[f64]| model.lyapunov(x).powf(gamma);
    let grid = UniformGrid::span(0.0, 1.0, opts.dt)?;
    let xs = Probe::ball(opts.radius, opts.n_points).points(d);
    let mut samples = Vec::with_capacity(n_paths * xs.len());
    for _ in 0..n_paths {
        let fbm = sample_fgn(params, grid, d, rng)?;
        let values: Vec<Vec<f64>> = (0..d).map(|c| fbm.values(c)).collect();
        let noise = 1.0 + holder_norm(&values, &grid, params.theta, 0.0, 1.0)?;
        for x in &xs {
            let traj = integrate(model, x, &fbm)?;
            samples.push(Sample { psi_x: psi(x), psi_x1: psi(traj.last()), noise });
        }
    }
    Ok(fit(&samples, opts.rho_grid))
}

/// `C(ρ) = max (Ψ(X_1) - ρΨ(x))_+ / (1+‖B‖)`; `ρ̂` is the smallest grid
/// value whose stationary level `C(ρ)/(1-ρ)` is within 1% of the minimum.
pub(crate) fn fit(samples: &[Sample], n_grid: usize) -> ContractionReport {
    let c_of = |rho: f64| {
        samples
            .iter()
            .map(|s| ((s.psi_x1 - rho * s.psi_x) / s.noise).max(0.0))
            .fold(0.0f64, f64::max)
    };
    let rhos: Vec<f64> = (0..n_grid).map(|i| i as f64 / n_grid as f64).collect();
    let levels: Vec<f64> = rhos.iter().map(|&r| c_of(r) / (1.0 - r)).collect();
    let (imin, lmin) = levels
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc });
    let fitted = lmin.is_finite() && imin + 1 < n_grid;
    let pick = levels.iter().position(|&l| l <= 1.01 * lmin).unwrap_or(imin);
    let rho = rhos[pick];
    let c = c_of(rho);
    let active = samples
        .iter()
        .filter(|s| {
            let rhs = rho * s.psi_x + c * s.noise;
            (rhs - s.psi_x1).abs() <= 1e-9 * rhs.abs().max(1e-300)
        })
        .count();
    ContractionReport {
        rho,
        c,
        active_fraction: active as f64 / samples.len().max(1) as f64,
        n_samples: samples.len(),
        fitted,
    }
}
