use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// How the shared past `W|(-∞,0]` is initialised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Past {
    /// `W ≡ 0` before time 0.
    Zero,
    /// A fresh Wiener path over the retained memory window.
    #[default]
    Sampled,
}

/// Parameters of the three-step coupling scheme.
///
/// `c2` is tied to the measured `C_K` through `c2 = C_K^{1/(2α)}`; see
/// [`CouplingConfig::with_ck`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub hurst: f64,
    pub theta: f64,
    pub alpha: f64,
    /// Admissibility level `K`.
    pub k: f64,
    pub c2: f64,
    pub c3: f64,
    pub beta: f64,
    pub varsigma: f64,
    pub dt: f64,
    pub t_hist: f64,
    /// Step-1 attempts are thinned to probability `1 - delta1`.
    pub delta1: f64,
    /// Relative sticking tolerance: success iff `|X¹-X²| ≤ tol_stick (1 + |X¹|)`.
    pub tol_stick: f64,
    /// Allowed relative growth of `|ρ|` over one sub-step before refinement.
    pub tol_mono: f64,
    /// Residual dyadic failure mass accepted when declaring full success.
    pub eps_horizon: f64,
    /// Bound `C̄` on `∫₀¹|g_h|²`.
    pub c_bar: f64,
    /// Radius `M` of the set on which Step 1 must stick; `2K` if unset.
    pub m_radius: Option<f64>,
    pub kappa_safety: f64,
    pub n_probe: usize,
    pub max_refine: u32,
    /// `C_K` of the Step-2 budget.
    pub ck: f64,
    /// Contraction rate `ρ̂` of the Lyapunov structure, used for `τ₀` and the
    /// floor on `c3`; `None` means "estimate at setup".
    pub rho_hat: Option<f64>,
    pub past: Past,
}

impl CouplingConfig {
    /// Defaults: `θ` at the midpoint of `(1/2, H)`, `α = 1/4`, `K = 10`,
    /// `c2 = 1`, `c3 = 2`, `β = 2.5`, `ς = 1.25`, `dt = 1/32`, `T_hist = 20`.
    pub fn new(hurst: f64) -> Self {
        Self {
            hurst,
            theta: 0.5 * (0.5 + hurst),
            alpha: 0.25,
            k: 10.0,
            c2: 1.0,
            c3: 2.0,
            beta: 2.5,
            varsigma: 1.25,
            dt: 1.0 / 32.0,
            t_hist: 20.0,
            delta1: 0.9,
            tol_stick: 1e-8,
            tol_mono: 1e-12,
            eps_horizon: 1e-3,
            c_bar: 1e5,
            m_radius: None,
            kappa_safety: 1.2,
            n_probe: 400,
            max_refine: 8,
            ck: 1.0,
            rho_hat: None,
            past: Past::Sampled,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.hurst > 0.5 && self.hurst < 1.0) {
            return bad("H must lie in (1/2, 1)");
        }
        if !(self.theta > 0.5 && self.theta < self.hurst) {
            return bad("theta must lie in (1/2, H)");
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return bad("alpha must lie in (0, 1/2)");
        }
        if !(self.beta > 1.0 / (1.0 - 2.0 * self.alpha)) {
            return bad("beta must exceed 1/(1-2*alpha) per schedule condition");
        }
        if !(self.k > 0.0) {
            return bad("K must be positive");
        }
        if !(self.c2 >= 1.0) {
            return bad("c2 must be at least 1");
        }
        if !(self.c3 >= 2.0 * self.c2) {
            return bad("c3 must be at least 2*c2");
        }
        if !(self.varsigma > 1.0) {
            return bad("varsigma must exceed 1");
        }
        if !(self.dt > 0.0) || ((1.0 / self.dt) - (1.0 / self.dt).round()).abs() > 1e-9 {
            return bad("dt must be positive with 1/dt an integer");
        }
        if !(self.t_hist > 0.0) {
            return bad("T_hist must be positive");
        }
        if !(0.0..1.0).contains(&self.delta1) {
            return bad("delta1 must lie in [0, 1)");
        }
        if !(self.ck >= 1.0) {
            return bad("C_K must be at least 1");
        }
        if !(self.eps_horizon > 0.0 && self.eps_horizon < 1.0) {
            return bad("eps_horizon must lie in (0, 1)");
        }
        if !(self.tol_stick > 0.0) || !(self.tol_mono >= 0.0) || !(self.c_bar > 0.0) {
            return bad("tolerances and C_bar must be positive");
        }
        if let Some(r) = self.rho_hat {
            if !(r > 0.0 && r < 1.0) {
                return bad("rho_hat must lie in (0, 1)");
            }
        }
        if let Some(m) = self.m_radius {
            if !(m > 0.0) {
                return bad("M must be positive");
            }
        }
        Ok(())
    }

    /// Fixes `C_K` and `c2 = C_K^{1/(2α)}`, raising `c3` to `2·c2` if needed.
    pub fn with_ck(mut self, ck: f64) -> Self {
        self.ck = ck.max(1.0);
        self.c2 = self.ck.powf(1.0 / (2.0 * self.alpha));
        self.c3 = self.c3.max(2.0 * self.c2);
        self
    }

    pub fn cells_per_unit(&self) -> usize {
        (1.0 / self.dt).round() as usize
    }

    /// Number of grid steps in a duration, rounded to the nearest step.
    pub fn steps(&self, duration: f64) -> u64 {
        (duration / self.dt).round() as u64
    }

    /// `|I_ℓ| = c2 2^ℓ`.
    pub fn interval_len(&self, ell: u32) -> f64 {
        self.c2 * 2f64.powi(ell as i32)
    }

    pub fn interval_steps(&self, ell: u32) -> u64 {
        self.steps(self.interval_len(ell))
    }

    /// `Δ₃(ℓ, k) = c3 ς^k 2^{βℓ}` for a given `c3`.
    pub fn wait_len(&self, c3: f64, ell: u32, k: u32) -> f64 {
        c3 * self.varsigma.powi(k as i32) * 2f64.powf(self.beta * ell as f64)
    }

    /// Step-2 budget: `√C_K` for `ℓ = 1`, `c2^{-α} √C_K 2^{-αℓ}` after.
    pub fn budget(&self, ell: u32) -> f64 {
        let s = self.ck.sqrt();
        if ell <= 1 {
            s
        } else {
            self.c2.powf(-self.alpha) * s * 2f64.powf(-self.alpha * ell as f64)
        }
    }

    /// Smallest `L` with `Σ_{ℓ>L} 2^{-αℓ} < eps_horizon`.
    pub fn ell_max(&self) -> u32 {
        let r = 2f64.powf(-self.alpha);
        let mut l = 1u32;
        while r.powi(l as i32 + 1) / (1.0 - r) >= self.eps_horizon {
            l += 1;
        }
        l
    }
}
