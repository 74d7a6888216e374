//! Estimate the survival curve of the merge time over independent replicas.

use fracouple::experiments::{estimate_coupling_tail, ExperimentConfig};

fn main() -> fracouple::Result<()> {
    let mut cfg = ExperimentConfig::new("additive_baseline", 1);
    cfg.n_replicas = 100;
    cfg.t_max = 300.0;
    cfg.ck_runs = 50;
    let run = estimate_coupling_tail(&cfg)?;
    println!("C_K = {:.3}, c2 = {:.3}", run.ck, run.c2);
    for t in [10.0, 30.0, 100.0, 300.0] {
        let (s, lo, hi) = run.tail.survival_at(t);
        println!("S({t:>5}) = {s:.3}  [{lo:.3}, {hi:.3}]");
    }
    println!("log-log slope {:?}, {:?}", run.rate.slope, run.rate.consistency);
    Ok(())
}
