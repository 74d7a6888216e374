use super::localize::Localized;
use crate::error::{Error, Result};

/// Which path of the pair is known while solving for `ρ = y² - y¹`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    /// `y¹` is given; `Δβ = β(y¹ + ρ) - β(y¹)`.
    First,
    /// `y²` is given; `Δβ = β(y²) - β(y² - ρ)` (the inverse construction).
    Second,
}

#[derive(Clone, Copy, Debug)]
pub struct RhoOpts {
    pub kappa1: f64,
    pub kappa2: f64,
    pub tol_mono: f64,
    pub max_refine: u32,
}

#[derive(Clone, Debug)]
pub struct RhoSolution {
    /// `ρ` at the nodes, `(n+1) × d`.
    pub rho: Vec<Vec<f64>>,
    /// Cell values of the realised drift `f`, `d × n`: with this drift the
    /// Euler companions satisfy `y²_{i+1} - y¹_{i+1} = ρ_{i+1}` exactly.
    pub f_cells: Vec<Vec<f64>>,
    /// `-κ₁ρ - κ₂ρ/√|ρ|` at the nodes, `(n+1) × d`.
    pub f_nodes: Vec<Vec<f64>>,
    /// First node from which `ρ ≡ 0`.
    pub extinction: Option<usize>,
    pub max_substeps: usize,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Exact flow of `dρ/dt = -κ₂ ρ/√|ρ|` over time `h`: `√|ρ|` decreases linearly.
fn sqrt_flow(v: &mut [f64], kappa2: f64, h: f64) {
    let n = norm(v);
    if n == 0.0 {
        return;
    }
    let s = n.sqrt() - 0.5 * kappa2 * h;
    if s <= 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
    } else {
        let f = s * s / n;
        v.iter_mut().for_each(|x| *x *= f);
    }
}

fn delta_beta(beta: &dyn Fn(&[f64], &mut [f64]) -> Result<()>, y: &[f64], rho: &[f64], anchor: Anchor, out: &mut [f64]) -> Result<()> {
    let d = y.len();
    if rho.iter().all(|&r| r == 0.0) {
        out.iter_mut().for_each(|v| *v = 0.0);
        return Ok(());
    }
    let mut b1 = vec![0.0; d];
    let mut b2 = vec![0.0; d];
    let mut z = vec![0.0; d];
    match anchor {
        Anchor::First => {
            beta(y, &mut b1)?;
            z.iter_mut().zip(y.iter().zip(rho)).for_each(|(z, (y, r))| *z = y + r);
            beta(&z, &mut b2)?;
        }
        Anchor::Second => {
            z.iter_mut().zip(y.iter().zip(rho)).for_each(|(z, (y, r))| *z = y - r);
            beta(&z, &mut b1)?;
            beta(y, &mut b2)?;
        }
    }
    out.iter_mut().zip(b2.iter().zip(&b1)).for_each(|(o, (a, b))| *o = a - b);
    Ok(())
}

/// Solves `dρ/dt = β(y²) - β(y¹) - κ₁ρ - κ₂ρ/√|ρ|` on the nodes of
/// `anchor_path` (`(n+1) × d`, step `dt`) by Lie splitting: an Euler step of
/// the Lipschitz part followed by the exact square-root flow, with enough
/// sub-steps per cell that `κ₁ h ≤ 1/2`. The anchor path is linearly
/// interpolated between nodes. Sub-steps are halved up to `max_refine` times if
/// `|ρ|` grows.
pub fn rho_ode_solve(
    rho0: &[f64],
    anchor_path: &[Vec<f64>],
    beta: &dyn Fn(&[f64], &mut [f64]) -> Result<()>,
    anchor: Anchor,
    dt: f64,
    opts: RhoOpts,
) -> Result<RhoSolution> {
    let d = rho0.len();
    let n = anchor_path.len().saturating_sub(1);
    let base = ((opts.kappa1 * dt / 0.5).ceil() as usize).max(1);
    let mut rho = Vec::with_capacity(n + 1);
    rho.push(rho0.to_vec());
    let mut f_cells = vec![vec![0.0; n]; d];
    let mut db = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut max_substeps = base;
    for i in 0..n {
        let start = rho[i].clone();
        let mut refine = 0;
        let next = 'solve: loop {
            let m = base << refine;
            let h = dt / m as f64;
            let mut r = start.clone();
            let mut ok = true;
            for j in 0..m {
                if r.iter().all(|&v| v == 0.0) {
                    break;
                }
                let s = j as f64 / m as f64;
                y.iter_mut()
                    .enumerate()
                    .for_each(|(c, v)| *v = (1.0 - s) * anchor_path[i][c] + s * anchor_path[i + 1][c]);
                delta_beta(beta, &y, &r, anchor, &mut db)?;
                let before = norm(&r);
                let mut v: Vec<f64> = (0..d).map(|c| r[c] + (db[c] - opts.kappa1 * r[c]) * h).collect();
                let after = norm(&v);
                if after > before * (1.0 + opts.tol_mono) {
                    ok = false;
                    if refine >= opts.max_refine {
                        return Err(Error::RhoNotMonotone { step: i, before, after });
                    }
                    break;
                }
                sqrt_flow(&mut v, opts.kappa2, h);
                r = v;
            }
            if ok {
                max_substeps = max_substeps.max(m);
                break 'solve r;
            }
            refine += 1;
        };
        delta_beta(beta, &anchor_path[i], &start, anchor, &mut db)?;
        for c in 0..d {
            f_cells[c][i] = (next[c] - start[c]) / dt - db[c];
        }
        rho.push(next);
    }
    let f_nodes = rho
        .iter()
        .map(|r| {
            let nr = norm(r);
            if nr == 0.0 {
                vec![0.0; d]
            } else {
                r.iter().map(|v| -opts.kappa1 * v - opts.kappa2 * v / nr.sqrt()).collect()
            }
        })
        .collect();
    let extinction = (0..=n).find(|&i| rho[i..].iter().all(|r| r.iter().all(|&v| v == 0.0)));
    Ok(RhoSolution { rho, f_cells, f_nodes, extinction, max_substeps })
}

/// [`rho_ode_solve`] driven by the companion drift of a localised model.
pub fn rho_ode_solve_localized(
    rho0: &[f64],
    anchor_path: &[Vec<f64>],
    loc: &Localized,
    anchor: Anchor,
    dt: f64,
    opts: RhoOpts,
) -> Result<RhoSolution> {
    let beta = |y: &[f64], out: &mut [f64]| loc.chart_drift(y, out);
    rho_ode_solve(rho0, anchor_path, &beta, anchor, dt, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(k1: f64, k2: f64) -> RhoOpts {
        RhoOpts { kappa1: k1, kappa2: k2, tol_mono: 1e-12, max_refine: 8 }
    }

    #[test]
    fn zero_is_absorbing() {
        let path = vec![vec![0.3]; 33];
        let beta = |y: &[f64], o: &mut [f64]| {
            o[0] = -y[0].sin();
            Ok(())
        };
        let s = rho_ode_solve(&[0.0], &path, &beta, Anchor::First, 1.0 / 32.0, opts(1.2, 4.0)).unwrap();
        assert!(s.rho.iter().all(|r| r[0] == 0.0));
        assert!(s.f_cells[0].iter().all(|&f| f == 0.0));
        assert_eq!(s.extinction, Some(0));
    }

    #[test]
    fn pure_square_root_term() {
        let dt = 1.0 / 64.0;
        let path = vec![vec![0.0]; 65];
        let beta = |_: &[f64], o: &mut [f64]| {
            o[0] = 0.0;
            Ok(())
        };
        let s = rho_ode_solve(&[1.0], &path, &beta, Anchor::First, dt, opts(0.0, 4.0)).unwrap();
        // hits zero at t = 2√1/4 = 1/2
        assert_eq!(s.extinction, Some(32));
        assert!(s.rho[16][0] <= 0.25 + 1e-15);
        assert!((s.rho[16][0] - 0.25).abs() < 1e-12);
    }
}
