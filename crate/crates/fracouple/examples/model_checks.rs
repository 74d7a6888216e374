//! Run the dissipativity and noise-structure checks on every built-in model and
//! on a model whose inverse diffusion is not a gradient.

use fracouple::sde_models::{check_h1, check_h2, model_by_name, non_integrable_example, Probe, MODEL_NAMES};

fn main() -> fracouple::Result<()> {
    for name in MODEL_NAMES {
        let m = model_by_name(name, 2, 1.0)?;
        let probe = Probe::ball(10.0, 200);
        let h1 = check_h1(m.as_ref(), &probe);
        let h2 = check_h2(m.as_ref(), &probe);
        println!(
            "{name:<18} dissipative: {} (max violation {:+.2e})  gradient noise: {} (inverse err {:.1e})",
            h1.pass, h1.max_violation, h2.pass, h2.max_inverse_err
        );
    }
    let bad = non_integrable_example();
    let h2 = check_h2(&bad, &Probe::ball(2.0, 200));
    println!("non-integrable      gradient noise: {} (integrability err {:.2})", h2.pass, h2.max_integrability_err);
    Ok(())
}
