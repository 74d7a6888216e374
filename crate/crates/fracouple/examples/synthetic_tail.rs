//! Check the tail estimator on merge times with a known power law.

use fracouple::experiments::{rate_fit, synthetic_pareto, TailEstimate, TailOpts};

fn main() {
    for gamma in [0.125, 0.5, 1.0] {
        let times = synthetic_pareto(10_000, gamma, 1e4, 3);
        let tail = TailEstimate::from_times(times, 1e4, &TailOpts::default());
        let fit = rate_fit(&tail, 0.01);
        println!("gamma = {gamma}: slope {:?}, 95% CI {:?}, {:?}", fit.slope, fit.slope_ci, fit.consistency);
    }
}
