use super::model::{chart_drift_at, SdeModel};
use crate::error::{Error, Result};
use crate::fractional_kernels::{FbmPath, UniformGrid};

/// States `X_0..X_n` on a grid, row-major `(n+1) × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: UniformGrid,
    pub d: usize,
    pub states: Vec<f64>,
}

impl Trajectory {
    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.d..(i + 1) * self.d]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.grid.n)
    }

    pub fn coord(&self, c: usize) -> Vec<f64> {
        self.states.iter().skip(c).step_by(self.d).copied().collect()
    }
}

/// Euler scheme `X_{i+1} = X_i + b(X_i) dt + σ(X_i) ΔB_i`.
pub fn integrate<M: SdeModel + ?Sized>(model: &M, x0: &[f64], fbm: &FbmPath) -> Result<Trajectory> {
    let d = model.dim();
    if fbm.d != d || x0.len() != d {
        return Err(Error::Invalid(format!(
            "dimension mismatch: model {d}, x0 {}, noise {}",
            x0.len(),
            fbm.d
        )));
    }
    let n = fbm.grid.n;
    let dt = fbm.grid.dt;
    let mut states = Vec::with_capacity((n + 1) * d);
    states.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut b = vec![0.0; d];
    let mut s = vec![0.0; d * d];
    for i in 0..n {
        model.drift(&x, &mut b);
        model.sigma(&x, &mut s);
        for r in 0..d {
            let mut dx = b[r] * dt;
            for c in 0..d {
                dx += s[r * d + c] * fbm.increments[c][i];
            }
            x[r] += dx;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: i + 1 });
        }
        states.extend_from_slice(&x);
    }
    Ok(Trajectory { grid: fbm.grid, d, states })
}

/// Euler scheme in the chart `Y = h(X)`, where the noise is additive:
/// `Y_{i+1} = Y_i + (∇h b)(h⁻¹(Y_i)) dt + ΔB_i`. Returns the trajectory
/// mapped back to `X`. `increments` is `d × n`.
pub fn integrate_chart<M: SdeModel + ?Sized>(
    model: &M,
    x0: &[f64],
    grid: UniformGrid,
    increments: &[Vec<f64>],
) -> Result<Trajectory> {
    let d = model.dim();
    if increments.len() != d || x0.len() != d {
        return Err(Error::Invalid("dimension mismatch in chart integration".into()));
    }
    let mut y = vec![0.0; d];
    model.h(x0, &mut y);
    let mut states = Vec::with_capacity((grid.n + 1) * d);
    states.extend_from_slice(x0);
    let mut beta = vec![0.0; d];
    let mut x = x0.to_vec();
    for i in 0..grid.n {
        chart_drift_at(model, &x, &mut beta);
        for r in 0..d {
            y[r] += beta[r] * grid.dt + increments[r][i];
        }
        model.h_inv(&y, &mut x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: i + 1 });
        }
        states.extend_from_slice(&x);
    }
    Ok(Trajectory { grid, d, states })
}
