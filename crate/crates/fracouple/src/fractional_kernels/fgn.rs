use super::grid::{check_hurst, FbmPath, KernelParams, UniformGrid};
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Autocovariance of fractional Gaussian noise at lag `k` on a step-`dt` grid.
pub fn fgn_autocov(hurst: f64, k: usize, dt: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) + (k - 1.0).abs().powf(h2) - 2.0 * k.powf(h2)) * dt.powf(h2)
}

/// Davies–Harte sampler: circulant embedding of size `2n`; each transform yields
/// two independent increment vectors (real and imaginary parts).
#[derive(Clone)]
pub struct FgnSampler {
    n: usize,
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FgnSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FgnSampler").field("n", &self.n).finish()
    }
}

impl FgnSampler {
    pub fn new(hurst: f64, dt: f64, n: usize) -> Result<Self> {
        check_hurst(hurst)?;
        if n == 0 || !(dt > 0.0) {
            return Err(Error::Invalid("fGn sampler needs n >= 1 and dt > 0".into()));
        }
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let k = if j <= n { j } else { m - j };
                Complex::new(fgn_autocov(hurst, k, dt), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);
        let max = row.iter().map(|z| z.re).fold(f64::MIN, f64::max);
        let mut scale = Vec::with_capacity(m);
        for z in &row {
            let lam = z.re;
            if lam < -1e-10 * max {
                return Err(Error::Embedding { value: lam, max });
            }
            scale.push((lam.max(0.0) / m as f64).sqrt());
        }
        Ok(Self { n, scale, fft })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sample_pair(&self, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex<f64>> = self
            .scale
            .iter()
            .map(|s| {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                Complex::new(s * a, s * b)
            })
            .collect();
        self.fft.process(&mut buf);
        (buf[..self.n].iter().map(|z| z.re).collect(), buf[..self.n].iter().map(|z| z.im).collect())
    }
}

/// Exact stationary fGn increments on `grid`, `d` independent coordinates.
pub fn sample_fgn(params: &KernelParams, grid: UniformGrid, d: usize, rng: &mut impl Rng) -> Result<FbmPath> {
    if d == 0 {
        return Err(Error::Invalid("dimension must be at least 1".into()));
    }
    let sampler = FgnSampler::new(params.hurst, grid.dt, grid.n)?;
    let mut rows = Vec::with_capacity(d);
    while rows.len() < d {
        let (a, b) = sampler.sample_pair(rng);
        rows.push(a);
        if rows.len() < d {
            rows.push(b);
        }
    }
    FbmPath::new(grid, params.hurst, rows)
}
