//! Conditional failure rates of the dyadic Step-2 trials and their exactness.

use fracouple::experiments::{dyadic_statistics, ExperimentConfig};

fn main() -> fracouple::Result<()> {
    let mut cfg = ExperimentConfig::new("additive_baseline", 1);
    cfg.coupling.k = 1.0;
    cfg.coupling.delta1 = 0.0;
    let pilots: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let t = std::time::Instant::now();
    let stats = dyadic_statistics(&cfg, pilots, 20, &[2, 3, 4])?;
    println!("C_K = {:.3}, c2 = {:.3}, {} of {} pilots stuck", stats.ck, stats.c2, stats.stuck, stats.pilots);
    for l in &stats.levels {
        println!(
            "ell = {}: failure rate {:.4} ± {:.4}, band [{:.4}, {:.4}], budget violations {}",
            l.ell, l.rate, l.se, l.band.0, l.band.1, l.budget_violations
        );
    }
    println!("max |(W2-W1) - int g_S| over {} successes: {:.2e}", stats.exact_checked, stats.max_exactness);
    eprintln!("{:?}", t.elapsed());
    Ok(())
}
