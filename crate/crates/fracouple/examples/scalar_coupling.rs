//! Maximal-type coupling of N(0,1) with N(a,1) under a budget b.

use fracouple::coupling_engine::ScalarCoupling;
use fracouple::rng::stream;

fn main() -> fracouple::Result<()> {
    let mut rng = stream(1, 0);
    for (a, b) in [(0.1, 0.5), (0.5, 0.5), (1.0, 2.0), (2.0, 4.0)] {
        let sc = ScalarCoupling::new(a, b)?;
        let n = 100_000;
        let hits = (0..n).filter(|_| sc.draw(&mut rng).success).count();
        println!(
            "a = {a:.1}, b = {b:.1}: success {:.4} (exact {:.4}), window M_b = {:.2}",
            hits as f64 / n as f64,
            sc.success_probability(),
            sc.m_b
        );
    }
    Ok(())
}
