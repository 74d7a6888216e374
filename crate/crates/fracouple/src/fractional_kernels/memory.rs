use super::grid::{KernelParams, WienerPath};
use super::holder::kernel_cell;
use crate::error::{Error, Result};

/// Local (`Γ_1, Γ_2, Γ_3`) and memory (`Λ_{0..k}`) parts of an fBm increment.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryParts {
    pub gamma: [f64; 3],
    pub lambda: Vec<f64>,
}

impl MemoryParts {
    /// `α_H (ΣΛ + Γ_1 - Γ_2 + Γ_3)`, which equals `B_t - B_s`.
    pub fn reconstruct(&self, alpha_h: f64) -> f64 {
        alpha_h * (self.lambda.iter().sum::<f64>() + self.gamma[0] - self.gamma[1] + self.gamma[2])
    }
}

/// Splits `B_t - B_s` (coordinate `coord`, `s < t ≤ ⌊s⌋+1`) along the past times
/// `breakpoints = [τ_0, …, τ_{k-1}]`. The infinite past starts at the beginning
/// of `w`'s grid.
pub fn memory_decomposition(
    w: &WienerPath,
    coord: usize,
    s: f64,
    t: f64,
    breakpoints: &[f64],
    params: &KernelParams,
) -> Result<MemoryParts> {
    if breakpoints.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Invalid("breakpoints must be increasing".into()));
    }
    if !(s < t && t <= s.floor() + 1.0 + 1e-12) {
        return Err(Error::Invalid(format!("need s < t ≤ ⌊s⌋+1, got s={s}, t={t}")));
    }
    if breakpoints.last().is_some_and(|&b| b > s) {
        return Err(Error::Invalid("breakpoints must not exceed s".into()));
    }
    let g = &w.grid;
    let q = params.hurst + 0.5;
    let inc = &w.increments[coord];
    let node = |x: f64| -> Result<usize> {
        if x <= g.t0 {
            return Ok(0);
        }
        g.node_of(x).ok_or(Error::Coverage { needed: 0.0, have: g.t_end() - g.t0, at: x })
    };
    // ∫_a^b (a_t (t-r)_+^p - a_s (s-r)_+^p) dW_r
    let integral = |a: f64, b: f64, ct: f64, cs: f64| -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let (i, j) = (node(a)?, node(b)?);
        Ok((i..j)
            .map(|c| {
                let (ra, rb) = (g.time(c), g.time(c + 1));
                inc[c] / g.dt * (ct * kernel_cell(t, ra, rb, q) - cs * kernel_cell(s, ra, rb, q))
            })
            .sum())
    };
    let h = t - s;
    let fs = s.floor();
    let gamma = [
        integral(fs - 1.0, s - h, 1.0, 1.0)?,
        integral(s - h, s, 0.0, -1.0)?,
        integral(s - h, t, 1.0, 0.0)?,
    ];
    let k = breakpoints.len();
    let mut lambda = Vec::with_capacity(k + 1);
    if k == 0 {
        lambda.push(integral(g.t0, fs - 1.0, 1.0, 1.0)?);
    } else {
        let last = breakpoints[k - 1] - 1.0;
        for m in 0..k {
            let lo = if m == 0 { g.t0 } else { breakpoints[m - 1] };
            let hi = breakpoints[m].min(last);
            lambda.push(integral(lo, hi, 1.0, 1.0)?);
        }
        lambda.push(integral(last, fs - 1.0, 1.0, 1.0)?);
    }
    Ok(MemoryParts { gamma, lambda })
}
