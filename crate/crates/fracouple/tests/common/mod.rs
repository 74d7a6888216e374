#![allow(dead_code)]

use fracouple::fractional_kernels::{FbmPath, UniformGrid};

/// Sums consecutive blocks of `factor` increments.
pub fn coarsen(fbm: &FbmPath, factor: usize) -> FbmPath {
    let grid = UniformGrid::new(fbm.grid.t0, fbm.grid.dt * factor as f64, fbm.grid.n / factor).unwrap();
    let inc = fbm
        .increments
        .iter()
        .map(|row| row.chunks(factor).map(|c| c.iter().sum()).collect())
        .collect();
    FbmPath::new(grid, fbm.hurst, inc).unwrap()
}

/// `X_t = e^{-t} x0 + B_t - ∫_0^t e^{-(t-s)} B_s ds` for `dX = -X dt + dB`,
/// with `B` linear between the nodes of the (fine) noise grid. Returns node values.
pub fn fou_exact(x0: f64, fbm: &FbmPath) -> Vec<f64> {
    let h = fbm.grid.dt;
    let e = (-h).exp();
    let w = (h - 1.0 + e) / h;
    let mut b = 0.0;
    let mut conv = 0.0;
    let mut decay = 1.0;
    let mut out = vec![x0];
    for &db in &fbm.increments[0] {
        conv = e * conv + b * (1.0 - e) + db * w;
        b += db;
        decay *= e;
        out.push(decay * x0 + b - conv);
    }
    out
}

/// Least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// One-sample Kolmogorov–Smirnov statistic against `N(0, 1)`.
pub fn ks_normal(sample: &[f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let n01 = Normal::new(0.0, 1.0).unwrap();
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = n01.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` for sample size `n`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lam = (sn + 0.12 + 0.11 / sn) * d;
    if lam < 0.2 {
        return 1.0;
    }
    let mut q = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lam * lam).exp();
        q += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    q.clamp(0.0, 1.0)
}

/// Standard error of a binomial proportion.
pub fn binom_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
