//! Integrate the scalar sine model along one fractional path.

use fracouple::fractional_kernels::{sample_fgn, KernelParams, UniformGrid};
use fracouple::rng::stream;
use fracouple::sde_models::{integrate, model_by_name};

fn main() -> fracouple::Result<()> {
    let model = model_by_name("scalar_sin", 1, 0.0)?;
    let params = KernelParams::new(0.7, 0.6, 20.0)?;
    let noise = sample_fgn(&params, UniformGrid::new(0.0, 1.0 / 64.0, 640)?, 1, &mut stream(3, 0))?;
    let traj = integrate(model.as_ref(), &[2.0], &noise)?;
    for i in (0..=traj.grid.n).step_by(64) {
        println!("t = {:>5.2}  x = {:+.5}", traj.grid.time(i), traj.state(i)[0]);
    }
    Ok(())
}
