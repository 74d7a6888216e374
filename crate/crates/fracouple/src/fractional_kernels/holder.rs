use super::grid::{KernelParams, UniformGrid, WienerPath};
use crate::error::{Error, Result};

fn window(grid: &UniformGrid, a: f64, b: f64) -> Result<(usize, usize)> {
    match (grid.node_of(a), grid.node_of(b)) {
        (Some(i), Some(j)) if i < j => Ok((i, j)),
        _ => Err(Error::Coverage { needed: b - a, have: grid.t_end() - grid.t0, at: a }),
    }
}

/// `sup_{a≤s<t≤b} |f(t)-f(s)| / (t-s)^θ` over all grid node pairs; `values`
/// holds node values per coordinate and the Euclidean norm is used.
pub fn holder_norm(values: &[Vec<f64>], grid: &UniformGrid, theta: f64, a: f64, b: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Invalid(format!("Hölder exponent must lie in (0,1), got {theta}")));
    }
    let (i0, i1) = window(grid, a, b)?;
    let dt = grid.dt;
    let mut best = 0.0f64;
    for i in i0..i1 {
        for j in i + 1..=i1 {
            let mut d2 = 0.0;
            for v in values {
                let d = v[j] - v[i];
                d2 += d * d;
            }
            if d2 > 0.0 {
                let q = d2.sqrt() / (((j - i) as f64) * dt).powf(theta);
                best = best.max(q);
            }
        }
    }
    Ok(best)
}

/// `∫_a^b (t - r)_+^p dr`.
#[inline]
pub(crate) fn kernel_cell(t: f64, a: f64, b: f64, q: f64) -> f64 {
    ((t - a).max(0.0).powf(q) - (t - b).max(0.0).powf(q)) / q
}

/// `φ_{τ,ε}(w)`: the sup over grid pairs `τ ≤ s < t ≤ τ+1` of
/// `|∫_{-∞}^{τ-1} ((t-r)^{H-1/2} - (s-r)^{H-1/2}) dw_r| / (t-s)`, truncated
/// `T_hist` before `τ-1`, plus `‖w‖_{1/2-ε}` on `[τ-1, τ]`.
pub fn phi_functional(w: &WienerPath, tau: f64, eps: f64, params: &KernelParams) -> Result<f64> {
    let g = &w.grid;
    let start = tau - 1.0 - params.t_hist;
    if g.t0 > start + 1e-9 * g.dt {
        return Err(Error::Coverage { needed: params.t_hist, have: tau - 1.0 - g.t0, at: tau - 1.0 });
    }
    let (_, i_end) = window(g, tau - 1.0, tau)?;
    let i_start = g.node_of(start).unwrap_or_else(|| ((start - g.t0) / g.dt).ceil() as usize);
    let i_mem = g.node_of(tau - 1.0).unwrap();
    let dt = g.dt;
    let m = (1.0 / dt).round() as usize;
    let q = params.hurst + 0.5;
    let f: Vec<Vec<f64>> = (0..=m)
        .map(|i| {
            let t = tau + i as f64 * dt;
            w.increments
                .iter()
                .map(|inc| {
                    (i_start..i_mem)
                        .map(|j| inc[j] / dt * kernel_cell(t, g.time(j), g.time(j + 1), q))
                        .sum::<f64>()
                })
                .collect()
        })
        .collect();
    let mut memory = 0.0f64;
    for i in 0..m {
        for j in i + 1..=m {
            let d2: f64 = f[j].iter().zip(&f[i]).map(|(a, b)| (a - b) * (a - b)).sum();
            memory = memory.max(d2.sqrt() / ((j - i) as f64 * dt));
        }
    }
    let values: Vec<Vec<f64>> = (0..w.d).map(|c| w.values(c)[..=i_end].to_vec()).collect();
    let sub = UniformGrid { t0: g.t0, dt, n: i_end };
    Ok(memory + holder_norm(&values, &sub, 0.5 - eps, tau - 1.0, tau)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_path() {
        let g = UniformGrid::new(0.0, 0.01, 100).unwrap();
        let v: Vec<f64> = g.times().iter().map(|t| 3.0 * t).collect();
        let h = holder_norm(&[v], &g, 0.6, 0.0, 1.0).unwrap();
        assert!((h - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_past_leaves_only_holder_term() {
        let params = KernelParams::new(0.7, 0.6, 2.0).unwrap();
        let dt = 1.0 / 32.0;
        let g = UniformGrid::new(-4.0, dt, 4 * 32 + 32).unwrap();
        let mut w = WienerPath::sample(g, 1, &mut crate::rng::stream(1, 0));
        for j in 0..(3 * 32) {
            w.increments[0][j] = 0.0;
        }
        let phi = phi_functional(&w, 0.0, 0.05, &params).unwrap();
        let vals = vec![w.values(0)];
        let h = holder_norm(&vals, &g, 0.45, -1.0, 0.0).unwrap();
        assert!((phi - h).abs() < 1e-12);
    }
}
