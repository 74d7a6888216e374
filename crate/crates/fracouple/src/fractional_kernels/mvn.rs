use super::conv::CausalKernel;
use super::grid::{FbmPath, KernelParams, UniformGrid, WienerPath};
use crate::error::{Error, Result};

/// `(m+1)^q - 2m^q + (m-1)^q`, evaluated by its binomial series for large `m`
/// where the direct form cancels catastrophically.
pub fn second_difference(m: usize, q: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let mf = m as f64;
    if m < 8 {
        return (mf + 1.0).powf(q) - 2.0 * mf.powf(q) + (mf - 1.0).powf(q);
    }
    let inv2 = 1.0 / (mf * mf);
    let mut binom = q * (q - 1.0) / 2.0;
    let mut pow = inv2;
    let mut s = 0.0;
    let mut k = 2.0;
    loop {
        let term = binom * pow;
        s += term;
        if term.abs() < 1e-18 * s.abs() || k > 40.0 {
            break;
        }
        binom *= (q - k) * (q - k - 1.0) / ((k + 1.0) * (k + 2.0));
        pow *= inv2;
        k += 2.0;
    }
    2.0 * mf.powf(q) * s
}

/// Coefficients of the discrete Mandelbrot–Van Ness map on a grid of step `dt`:
/// with a piecewise-linear Wiener path, `ΔB_i = Σ_m k_m ΔW_{i-m}` exactly, where
/// `k_m = α_H dt^{H-1/2} ((m+1)^q - 2m^q + (m-1)^q) / q`, `q = H + 1/2`,
/// truncated after `T_hist/dt` lags.
///
/// The same coefficients map cell values of `g_w` to cell averages of `g_B`.
pub fn mvn_coefficients(params: &KernelParams, dt: f64) -> Vec<f64> {
    let p = params.p();
    let q = params.hurst + 0.5;
    let scale = params.alpha_h * dt.powf(p) / q;
    (0..=params.lags(dt)).map(|m| scale * second_difference(m, q)).collect()
}

pub fn mvn_kernel(params: &KernelParams, dt: f64) -> CausalKernel {
    CausalKernel::new(mvn_coefficients(params, dt))
}

/// Maps a two-sided Wiener path to fBm increments on the window that starts
/// `T_hist` after the start of `w`.
pub fn mvn_map(w: &WienerPath, params: &KernelParams) -> Result<FbmPath> {
    let dt = w.grid.dt;
    let m = params.lags(dt);
    if w.grid.n <= m {
        return Err(Error::Coverage {
            needed: params.t_hist,
            have: w.grid.n as f64 * dt,
            at: w.grid.t_end(),
        });
    }
    let kern = mvn_kernel(params, dt);
    let mut out = Vec::with_capacity(w.d);
    let mut c = 0;
    while c < w.d {
        if c + 1 < w.d {
            let (a, b) = kern.apply_pair(&w.increments[c], Some(&w.increments[c + 1]), m);
            out.push(a);
            out.push(b);
            c += 2;
        } else {
            out.push(kern.apply(&w.increments[c], m));
            c += 1;
        }
    }
    let grid = UniformGrid::new(w.grid.time(m), dt, w.grid.n - m)?;
    FbmPath::new(grid, params.hurst, out)
}

/// Variance lost by truncating the kernel at `T_hist`:
/// `α_H² ∫_{T_hist}^∞ ((1+s)^{H-1/2} - s^{H-1/2})² ds`.
pub fn truncation_deficit(params: &KernelParams) -> f64 {
    let p = params.p();
    let f = |s: f64| {
        let d = s.powf(p) * (p * (1.0 / s).ln_1p()).exp_m1();
        d * d
    };
    let mut total = 0.0;
    let mut a = params.t_hist;
    let upper = 1e12_f64.max(params.t_hist * 1e6);
    while a < upper {
        let b = 2.0 * a;
        total += super::quad::adaptive(a, b, 1e-12, 50, f).0;
        a = b;
    }
    total += p * p * a.powf(2.0 * p - 1.0) / (1.0 - 2.0 * p);
    params.alpha_h * params.alpha_h * total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_direct_second_difference() {
        for q in [1.1, 1.2, 1.4] {
            for m in [8usize, 9, 20, 100] {
                let mf = m as f64;
                let direct = (mf + 1.0).powf(q) - 2.0 * mf.powf(q) + (mf - 1.0).powf(q);
                let s = second_difference(m, q);
                assert!((s - direct).abs() < 1e-10 * direct.abs().max(1e-3), "{q} {m} {s} {direct}");
            }
        }
    }

    #[test]
    fn coefficients_telescope() {
        let params = KernelParams::new(0.7, 0.6, 4.0).unwrap();
        let dt = 1.0 / 16.0;
        let k = mvn_coefficients(&params, dt);
        let q = 1.2;
        let m = k.len() - 1;
        let total: f64 = k.iter().sum();
        let expect = params.alpha_h * dt.powf(0.2) / q * ((m as f64 + 1.0).powf(q) - (m as f64).powf(q));
        assert!((total - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn deficit_matches_reference() {
        let params = KernelParams::new(0.7, 0.6, 200.0).unwrap();
        assert!((truncation_deficit(&params) - 0.0033031923037438).abs() < 1e-12);
    }

    #[test]
    fn constant_unit_slope_gives_power_law() {
        // W(t) = t: every increment sees the last T_hist + dt of slope 1, so
        // ΔB_i = α_H ((T_hist + dt)^q - T_hist^q) / q
        let params = KernelParams::new(0.7, 0.6, 8.0).unwrap();
        let dt = 1.0 / 32.0;
        let grid = UniformGrid::new(-8.0, dt, 8 * 32 + 32).unwrap();
        let w = WienerPath::new(grid, vec![vec![dt; grid.n]]).unwrap();
        let b = mvn_map(&w, &params).unwrap();
        let total: f64 = b.increments[0].iter().sum();
        let q = 1.2;
        let each = params.alpha_h * ((8.0 + dt).powf(q) - 8.0f64.powf(q)) / q;
        for x in &b.increments[0] {
            assert!((x - each).abs() < 1e-12);
        }
        assert!((total - 32.0 * each).abs() < 1e-10);
    }
}
