//! Sample fractional noise two ways and compare the variance at t = 1.

use fracouple::fractional_kernels::{mvn_map, sample_fgn, truncation_deficit, KernelParams, UniformGrid, WienerPath};
use fracouple::rng::stream;

fn main() -> fracouple::Result<()> {
    let params = KernelParams::new(0.7, 0.6, 20.0)?;
    let dt = 1.0 / 32.0;
    let n_paths = 2000;
    let (mut exact, mut mvn) = (0.0, 0.0);
    for r in 0..n_paths {
        let mut rng = stream(7, r);
        let b = sample_fgn(&params, UniformGrid::new(0.0, dt, 32)?, 1, &mut rng)?;
        exact += b.values(0)[32].powi(2);

        let m = params.lags(dt);
        let w = WienerPath::sample(UniformGrid::new(-(m as f64) * dt, dt, m + 32)?, 1, &mut rng);
        let b = mvn_map(&w, &params)?;
        mvn += b.values(0)[32].powi(2);
    }
    let n = n_paths as f64;
    println!("Var B(1), circulant embedding : {:.4}", exact / n);
    println!("Var B(1), truncated MVN       : {:.4}", mvn / n);
    println!("MVN truncation deficit        : {:.4}", truncation_deficit(&params));
    Ok(())
}
