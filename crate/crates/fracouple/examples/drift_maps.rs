//! Map a Wiener-frame drift to the fractional frame and back, and evaluate the
//! memory operator of a unit drift block.

use fracouple::fractional_kernels::{gb_to_gw, gw_to_gb, r_operator, DriftRecord, KernelParams, UniformGrid};

fn main() -> fracouple::Result<()> {
    let params = KernelParams::new(0.7, 0.6, 4.0)?;
    let dt = 1.0 / 32.0;
    let hist = DriftRecord::zeros(UniformGrid::new(-1.0, dt, 32)?, 1, 4.0);

    let g = vec![(0..64).map(|i| ((i as f64 + 0.5) * dt * 3.0).sin()).collect::<Vec<_>>()];
    let gb = gw_to_gb(&g, &hist, &params)?;
    let back = gb_to_gw(&gb, &hist, &params)?;
    let err = g[0].iter().zip(&back[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("g_w -> g_B -> g_w max error: {err:.2e}");

    let mut block = DriftRecord::zeros(UniformGrid::new(-1.0, 1.0 / 8.0, 8)?, 1, 10.0);
    block.gw[0].fill(1.0);
    let ts = [0.25, 1.0, 3.0, 10.0];
    let r = r_operator(&block, 0.0, &ts, &params)?;
    for (t, v) in ts.iter().zip(&r[0]) {
        println!("R_0 g({t:>5}) = {v:.6}");
    }
    Ok(())
}
