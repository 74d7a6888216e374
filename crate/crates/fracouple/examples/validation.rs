//! Run the reduced validation suite and print the report. The reduced Step-1
//! attempt count is usually too small to observe a coupled attempt, so
//! `step1_coupled_frequency` typically fails here; `fracouple validate` runs the
//! full sizes.

use fracouple::experiments::{validate_suite, ExperimentConfig, ValidateOpts};

fn main() -> fracouple::Result<()> {
    let cfg = ExperimentConfig::new("additive_baseline", 1);
    let report = validate_suite(&cfg, &ValidateOpts::quick())?;
    report.write(&mut std::io::stdout().lock())?;
    println!("all pass: {}", report.all_pass());
    Ok(())
}
