use crate::error::{Error, Result};

/// Guard on `|log D|`.
pub const LOG_DENSITY_GUARD: f64 = 700.0;

/// `Σ_i g_i·Δw_i - ½ Σ_i |g_i|² dt` for a drift constant on cells (`d × n`).
pub fn girsanov_log_density(g: &[Vec<f64>], dw: &[Vec<f64>], dt: f64) -> f64 {
    let mut s = 0.0;
    for (gc, wc) in g.iter().zip(dw) {
        for (a, b) in gc.iter().zip(wc) {
            s += a * b - 0.5 * a * a * dt;
        }
    }
    s
}

/// `∫|g|²` for a drift constant on cells.
pub fn energy(g: &[Vec<f64>], dt: f64) -> f64 {
    g.iter().flatten().map(|v| v * v).sum::<f64>() * dt
}

/// `D(w) = exp(∫ g dw - ½∫|g|²)`.
pub fn girsanov_density(g: &[Vec<f64>], dw: &[Vec<f64>], dt: f64) -> Result<f64> {
    let l = girsanov_log_density(g, dw, dt);
    if !(l.abs() <= LOG_DENSITY_GUARD) {
        return Err(Error::DensityOverflow(l));
    }
    Ok(l.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let g = vec![vec![0.0; 8]];
        let w = vec![vec![0.3; 8]];
        assert_eq!(girsanov_density(&g, &w, 0.125).unwrap(), 1.0);
        let g = vec![vec![1.5; 8]];
        let w = vec![vec![0.0; 8]];
        let d = girsanov_density(&g, &w, 0.125).unwrap();
        assert!((d - (-1.125f64).exp()).abs() < 1e-15);
        assert!(girsanov_density(&[vec![100.0; 10]], &[vec![0.0; 10]], 1.0).is_err());
    }
}
