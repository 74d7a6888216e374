use crate::error::{Error, Result};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Uniform time grid with nodes `t0 + i*dt`, `i = 0..=n`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UniformGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl UniformGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Invalid(format!("grid step must be positive, got {dt}")));
        }
        if n == 0 {
            return Err(Error::Invalid("grid needs at least one step".into()));
        }
        Ok(Self { t0, dt, n })
    }

    /// Grid covering `[a, b]` with `round((b-a)/dt)` steps.
    pub fn span(a: f64, b: f64, dt: f64) -> Result<Self> {
        Self::new(a, dt, ((b - a) / dt).round() as usize)
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.time(i)).collect()
    }

    /// Index of the node closest to `t`, if `t` lies on the grid within a
    /// relative tolerance of one part in 1e9 of a step.
    pub fn node_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt;
        let i = x.round();
        if (x - i).abs() < 1e-9 && i >= 0.0 && i as usize <= self.n {
            Some(i as usize)
        } else {
            None
        }
    }
}

/// Piecewise-linear Wiener path given by its increments, one row per coordinate.
#[derive(Clone, Debug)]
pub struct WienerPath {
    pub grid: UniformGrid,
    pub d: usize,
    pub increments: Vec<Vec<f64>>,
}

impl WienerPath {
    pub fn new(grid: UniformGrid, increments: Vec<Vec<f64>>) -> Result<Self> {
        check_rows(&grid, &increments)?;
        Ok(Self { grid, d: increments.len(), increments })
    }

    pub fn zeros(grid: UniformGrid, d: usize) -> Self {
        Self { grid, d, increments: vec![vec![0.0; grid.n]; d] }
    }

    pub fn sample(grid: UniformGrid, d: usize, rng: &mut impl rand::Rng) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let s = grid.dt.sqrt();
        let increments = (0..d)
            .map(|_| (0..grid.n).map(|_| { let z: f64 = StandardNormal.sample(rng); s * z }).collect::<Vec<f64>>())
            .collect();
        Self { grid, d, increments }
    }

    /// Node values, starting from 0 at `t0`.
    pub fn values(&self, coord: usize) -> Vec<f64> {
        prefix_sum(&self.increments[coord])
    }
}

/// Fractional Brownian path given by its increments.
#[derive(Clone, Debug)]
pub struct FbmPath {
    pub grid: UniformGrid,
    pub d: usize,
    pub hurst: f64,
    pub increments: Vec<Vec<f64>>,
}

impl FbmPath {
    pub fn new(grid: UniformGrid, hurst: f64, increments: Vec<Vec<f64>>) -> Result<Self> {
        check_hurst(hurst)?;
        check_rows(&grid, &increments)?;
        Ok(Self { grid, d: increments.len(), hurst, increments })
    }

    pub fn values(&self, coord: usize) -> Vec<f64> {
        prefix_sum(&self.increments[coord])
    }
}

/// Coupling drift history: `gw[c][i]` and `gb[c][i]` are the values on the cell
/// `[t_i, t_{i+1})`.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct DriftRecord {
    pub grid: UniformGrid,
    pub d: usize,
    pub gw: Vec<Vec<f64>>,
    pub gb: Vec<Vec<f64>>,
    pub horizon: f64,
}

impl DriftRecord {
    pub fn zeros(grid: UniformGrid, d: usize, horizon: f64) -> Self {
        Self { grid, d, gw: vec![vec![0.0; grid.n]; d], gb: vec![vec![0.0; grid.n]; d], horizon }
    }

    /// An empty history ending at `t_end`.
    pub fn empty(t_end: f64, dt: f64, d: usize, horizon: f64) -> Self {
        Self {
            grid: UniformGrid { t0: t_end, dt, n: 0 },
            d,
            gw: vec![Vec::new(); d],
            gb: vec![Vec::new(); d],
            horizon,
        }
    }
}

pub(crate) fn prefix_sum(inc: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(inc.len() + 1);
    let mut s = 0.0;
    v.push(0.0);
    for x in inc {
        s += x;
        v.push(s);
    }
    v
}

fn check_rows(grid: &UniformGrid, rows: &[Vec<f64>]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Invalid("dimension must be at least 1".into()));
    }
    for r in rows {
        if r.len() != grid.n {
            return Err(Error::Invalid(format!("expected {} increments, got {}", grid.n, r.len())));
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite increment".into()));
        }
    }
    Ok(())
}

pub fn check_hurst(h: f64) -> Result<()> {
    if h > 0.5 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::Hurst(h))
    }
}

/// Normalisation of the Mandelbrot–Van Ness kernel giving `Var(B_1) = 1`:
/// `1/α_H² = ∫₀^∞ ((1+s)^{H-1/2} - s^{H-1/2})² ds + 1/(2H)`, which equals
/// `Γ(H+1/2)² / (Γ(2H+1) sin(πH))`.
pub fn alpha_h(h: f64) -> f64 {
    (gamma(2.0 * h + 1.0) * (PI * h).sin()).sqrt() / gamma(h + 0.5)
}

/// Direct quadrature of the defining integral of `α_H`; used to cross-check the
/// closed form.
pub fn alpha_h_by_quadrature(h: f64) -> f64 {
    let p = h - 0.5;
    let f = |s: f64| {
        let d = if s > 8.0 { s.powf(p) * (p * (1.0 / s).ln_1p()).exp_m1() } else { (1.0 + s).powf(p) - s.powf(p) };
        d * d
    };
    let upper = 1e12;
    let body = super::quad::geometric_panels(upper, 1e-13, f);
    // ((1+s)^p - s^p)^2 ~ p^2 s^{2p-2} (1 - (1-p) / s + ...) beyond `upper`
    let tail = p * p * upper.powf(2.0 * p - 1.0) / (1.0 - 2.0 * p);
    1.0 / (body + tail + 1.0 / (2.0 * h)).sqrt()
}

/// Kernel parameters shared by every fractional operator.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelParams {
    pub hurst: f64,
    pub alpha_h: f64,
    pub theta: f64,
    pub eps_theta: f64,
    pub quad_nodes: usize,
    pub t_hist: f64,
    /// Weight exponent of the path space norm; carried for completeness, no
    /// computed functional uses it.
    pub delta: f64,
}

impl KernelParams {
    pub fn new(hurst: f64, theta: f64, t_hist: f64) -> Result<Self> {
        check_hurst(hurst)?;
        if !(theta > 0.5 && theta < hurst) {
            return Err(Error::Invalid(format!("theta must lie in (1/2, H), got {theta}")));
        }
        if !(t_hist > 0.0) {
            return Err(Error::Invalid("T_hist must be positive".into()));
        }
        Ok(Self {
            hurst,
            alpha_h: alpha_h(hurst),
            theta,
            eps_theta: (hurst - theta) / 2.0,
            quad_nodes: 8,
            t_hist,
            delta: 0.0,
        })
    }

    /// Parameters with `theta` at the midpoint of `(1/2, H)`.
    pub fn with_hurst(hurst: f64, t_hist: f64) -> Result<Self> {
        check_hurst(hurst)?;
        Self::new(hurst, 0.5 * (0.5 + hurst), t_hist)
    }

    pub fn p(&self) -> f64 {
        self.hurst - 0.5
    }

    /// Number of lags kept by the truncated kernel at step `dt`.
    pub fn lags(&self, dt: f64) -> usize {
        (self.t_hist / dt).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_not_accumulated() {
        let g = UniformGrid::new(-1.0, 0.1, 30).unwrap();
        assert_eq!(g.time(30), -1.0 + 30.0 * 0.1);
        assert_eq!(g.node_of(0.0), Some(10));
        assert_eq!(g.node_of(0.05), None);
    }

    #[test]
    fn alpha_closed_form_matches_quadrature() {
        for h in [0.55, 0.6, 0.7, 0.8, 0.9, 0.95] {
            let a = alpha_h(h);
            let b = alpha_h_by_quadrature(h);
            assert!((a - b).abs() < 1e-9 * a, "H={h}: {a} vs {b}");
        }
        assert!((alpha_h(0.5 + 1e-12) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn params_reject_bad_theta() {
        assert!(KernelParams::new(0.7, 0.75, 10.0).is_err());
        assert!(KernelParams::new(0.4, 0.45, 10.0).is_err());
        let k = KernelParams::new(0.7, 0.6, 10.0).unwrap();
        assert_eq!(k.eps_theta, (0.7 - 0.6) / 2.0);
    }
}
