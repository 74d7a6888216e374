//! Define a model with a custom drift and integrate it with zero and random noise.

use fracouple::fractional_kernels::{sample_fgn, FbmPath, KernelParams, UniformGrid};
use fracouple::rng::stream;
use fracouple::sde_models::{check_h1, integrate, CustomModel, Probe};

fn main() -> fracouple::Result<()> {
    // Double-well drift x - x³ with additive noise.
    let mut model = CustomModel::additive("double_well", 1, |x, out| out[0] = x[0] - x[0].powi(3));
    // With V = 1 + x², (V'|b) - β₀ + κ₀V = -2(x² - 1)² once β₀ = 4.
    model.beta0 = 4.0;
    println!("dissipative: {}", check_h1(&model, &Probe::ball(5.0, 100)).pass);

    let grid = UniformGrid::new(0.0, 1.0 / 64.0, 64 * 5)?;
    let still = FbmPath::new(grid, 0.7, vec![vec![0.0; grid.n]])?;
    let params = KernelParams::new(0.7, 0.6, 20.0)?;
    let noisy = sample_fgn(&params, grid, 1, &mut stream(11, 0))?;
    for (label, b) in [("zero noise", &still), ("fBm noise ", &noisy)] {
        let traj = integrate(&model, &[0.1], b)?;
        println!("{label}: x(5) = {:+.4}", traj.state(traj.grid.n)[0]);
    }
    Ok(())
}
