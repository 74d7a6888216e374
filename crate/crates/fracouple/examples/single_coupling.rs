//! Run one coupling of the additive baseline and print its trial log.

use fracouple::coupling_engine::{run_coupling, CouplingConfig, CouplingSetup};
use fracouple::rng::stream;
use fracouple::sde_models::model_by_name;

fn main() -> fracouple::Result<()> {
    let mut cfg = CouplingConfig::new(0.7);
    cfg.theta = 0.6;
    cfg.c3 = 4.0;
    let setup = CouplingSetup::new(model_by_name("additive_baseline", 1, 0.0)?, cfg)?;
    let run = run_coupling(&setup, &[1.0], &[-1.0], 500.0, &mut stream(42, 0))?;
    run.write_trials(&mut std::io::stdout().lock())?;
    match run.tau_inf {
        Some(t) => println!("merged at t = {t}"),
        None => println!("still apart at t = {}", run.t_max),
    }
    Ok(())
}
