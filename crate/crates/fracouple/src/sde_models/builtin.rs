use super::model::{identity, CustomModel, ModelSpec, SdeModel};
use crate::error::{Error, Result};
use std::sync::Arc;

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `σ(x) = 1/(1 + sin(x)/2)`, `h(x) = x - cos(x)/2`, `b(x) = -x`, `V = 1 + x²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarSin;

impl SdeModel for ScalarSin {
    fn name(&self) -> &str {
        "scalar_sin"
    }
    fn dim(&self) -> usize {
        1
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -x[0];
    }
    fn sigma(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 1.0 / (1.0 + 0.5 * x[0].sin());
    }
    fn h(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[0] - 0.5 * x[0].cos();
    }
    fn grad_h(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 1.0 + 0.5 * x[0].sin();
    }
    fn lyapunov(&self, x: &[f64]) -> f64 {
        1.0 + x[0] * x[0]
    }
    fn grad_lyapunov(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 2.0 * x[0];
    }
    fn beta0(&self) -> f64 {
        2.0
    }
    fn kappa0(&self) -> f64 {
        2.0
    }
    fn sigma_bound(&self) -> Option<f64> {
        Some(2.0)
    }
    fn lipschitz_hint(&self, _r: f64) -> Option<f64> {
        Some(1.0)
    }
    fn h_inv(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        // h' ∈ [1/2, 3/2]: safeguarded Newton inside the bracket [y - 1/2, y + 1/2]
        let (mut lo, mut hi) = (y[0] - 0.5, y[0] + 0.5);
        let mut x = y[0];
        for _ in 0..100 {
            let f = x - 0.5 * x.cos() - y[0];
            if f.abs() <= 1e-15 * (1.0 + y[0].abs()) {
                break;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let nx = x - f / (1.0 + 0.5 * x.sin());
            x = if nx > lo && nx < hi { nx } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        if !x.is_finite() {
            return Err(Error::HInverse(y.to_vec()));
        }
        out[0] = x;
        Ok(())
    }
}

/// `b(z) = -z - ρ cos(θ_z) z⊥` in the plane, identity diffusion.
#[derive(Debug, Clone, Copy)]
pub struct PlanarRotation {
    pub rho_rot: f64,
}

impl SdeModel for PlanarRotation {
    fn name(&self) -> &str {
        "planar_rotation"
    }
    fn dim(&self) -> usize {
        2
    }
    fn drift(&self, z: &[f64], out: &mut [f64]) {
        let r = norm2(z).sqrt();
        let c = if r > 0.0 { z[0] / r } else { 1.0 };
        // z⊥ = (-z₂, z₁)
        out[0] = -z[0] + self.rho_rot * c * z[1];
        out[1] = -z[1] - self.rho_rot * c * z[0];
    }
    fn sigma(&self, z: &[f64], out: &mut [f64]) {
        identity(z, out)
    }
    fn h(&self, z: &[f64], out: &mut [f64]) {
        out.copy_from_slice(z)
    }
    fn grad_h(&self, z: &[f64], out: &mut [f64]) {
        identity(z, out)
    }
    fn lyapunov(&self, z: &[f64]) -> f64 {
        1.0 + norm2(z)
    }
    fn grad_lyapunov(&self, z: &[f64], out: &mut [f64]) {
        out[0] = 2.0 * z[0];
        out[1] = 2.0 * z[1];
    }
    fn beta0(&self) -> f64 {
        2.0
    }
    fn kappa0(&self) -> f64 {
        2.0
    }
    fn sigma_bound(&self) -> Option<f64> {
        Some(1.0)
    }
    fn h_inv(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(y);
        Ok(())
    }
}

/// `b(x) = -x`, identity diffusion, any dimension.
#[derive(Debug, Clone, Copy)]
pub struct AdditiveBaseline {
    pub d: usize,
}

impl SdeModel for AdditiveBaseline {
    fn name(&self) -> &str {
        "additive_baseline"
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().zip(x).for_each(|(o, x)| *o = -x);
    }
    fn sigma(&self, x: &[f64], out: &mut [f64]) {
        identity(x, out)
    }
    fn h(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x)
    }
    fn grad_h(&self, x: &[f64], out: &mut [f64]) {
        identity(x, out)
    }
    fn lyapunov(&self, x: &[f64]) -> f64 {
        1.0 + norm2(x)
    }
    fn grad_lyapunov(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().zip(x).for_each(|(o, x)| *o = 2.0 * x);
    }
    fn beta0(&self) -> f64 {
        2.0
    }
    fn kappa0(&self) -> f64 {
        2.0
    }
    fn sigma_bound(&self) -> Option<f64> {
        Some(1.0)
    }
    fn h_inv(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(y);
        Ok(())
    }
}

pub const MODEL_NAMES: [&str; 3] = ["scalar_sin", "planar_rotation", "additive_baseline"];

/// Looks up a builtin model. `d` is used by `additive_baseline` only and
/// `rho_rot` by `planar_rotation` only.
pub fn model_by_name(name: &str, d: usize, rho_rot: f64) -> Result<ModelSpec> {
    match name {
        "scalar_sin" => Ok(Arc::new(ScalarSin)),
        "planar_rotation" => Ok(Arc::new(PlanarRotation { rho_rot })),
        "additive_baseline" if d >= 1 => Ok(Arc::new(AdditiveBaseline { d })),
        "additive_baseline" => Err(Error::Config("additive_baseline needs dimension >= 1".into())),
        other => Err(Error::Config(format!("unknown model '{other}' (known: {})", MODEL_NAMES.join(", ")))),
    }
}

/// A two-dimensional model whose `σ⁻¹ = [[1, 0], [x₂, 1]]` is not a Jacobian
/// (`∂₂(σ⁻¹)₂₁ = 1 ≠ 0 = ∂₁(σ⁻¹)₂₂`), so no chart `h` exists. Not registered.
pub fn non_integrable_example() -> CustomModel {
    let mut m = CustomModel::additive("non_integrable", 2, |x, o| o.iter_mut().zip(x).for_each(|(o, x)| *o = -x));
    m.sigma = Arc::new(|x, o| o.copy_from_slice(&[1.0, 0.0, -x[1], 1.0]));
    m
}
