//! Fit the one-step Lyapunov contraction of the additive baseline.

use fracouple::fractional_kernels::KernelParams;
use fracouple::rng::stream;
use fracouple::sde_models::{contraction_estimate, model_by_name};

fn main() -> fracouple::Result<()> {
    let model = model_by_name("additive_baseline", 1, 0.0)?;
    let params = KernelParams::new(0.7, 0.6, 20.0)?;
    let r = contraction_estimate(model.as_ref(), &params, 50, &mut stream(5, 0))?;
    println!("rho = {:.4}, C = {:.4}, fitted = {}, samples = {}", r.rho, r.c, r.fitted, r.n_samples);
    Ok(())
}
