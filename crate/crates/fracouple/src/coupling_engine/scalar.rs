//! Coupling of two standard normals `U₁, U₂` that hits `U₂ = U₁ + a` with
//! probability in `[1-b, 1-b/2]` while `|U₂ - U₁| ≤ M_b` surely.
//!
//! Success pairs `(x, x+a)` are drawn with sub-density `λ min(p(x), p(x+a))`
//! restricted to both points lying in `[-M_b/2, M_b/2]`; `λ ≤ 1` thins the
//! overlap down to mass `1 - b/2`. The residual masses of the two marginals
//! agree outside the window, so the monotone (quantile) coupling of the
//! residuals is the identity there and stays inside the window otherwise.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;
use std::f64::consts::SQRT_2;

fn phi_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `M_b = max{4b, -2 log(b/8)}`.
pub fn window_width(b: f64) -> f64 {
    (4.0 * b).max(-2.0 * (b / 8.0).ln())
}

#[derive(Clone, Copy, Debug)]
pub struct ScalarDraw {
    pub u1: f64,
    pub u2: f64,
    pub success: bool,
}

/// Precomputed coupling for a fixed `(a, b)`.
#[derive(Clone, Copy, Debug)]
pub struct ScalarCoupling {
    /// `|a|`; negative shifts are handled by reflection.
    shift: f64,
    negative: bool,
    pub m_b: f64,
    /// Thinning factor on the overlap.
    pub lambda: f64,
    /// Overlap mass before thinning.
    pub overlap: f64,
    lo: f64,
    hi: f64,
}

impl ScalarCoupling {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0) || !a.is_finite() {
            return Err(Error::Invalid(format!("scalar coupling needs b > 0 and finite a, got a={a}, b={b}")));
        }
        let m_b = window_width(b);
        let shift = a.abs();
        let lo = -0.5 * m_b;
        let hi = 0.5 * m_b - shift;
        let mut s = Self { shift, negative: a < 0.0, m_b, lambda: 1.0, overlap: 0.0, lo, hi };
        s.overlap = s.g(hi);
        if b < 1.0 && s.overlap > 0.0 {
            s.lambda = ((1.0 - 0.5 * b) / s.overlap).min(1.0);
        }
        Ok(s)
    }

    /// Success probability `λ m`.
    pub fn success_probability(&self) -> f64 {
        self.lambda * self.overlap
    }

    /// `∫_{lo}^{u} min(p(x), p(x+a)) dx` over the success window.
    fn g(&self, u: f64) -> f64 {
        if self.hi <= self.lo || u <= self.lo {
            return 0.0;
        }
        let u = u.min(self.hi);
        // min is p(x) left of -a/2, p(x+a) right of it
        let c = (-0.5 * self.shift).clamp(self.lo, self.hi);
        let mut v = phi_cdf(u.min(c)) - phi_cdf(self.lo);
        if u > c {
            v += phi_cdf(u + self.shift) - phi_cdf(c + self.shift);
        }
        v.max(0.0)
    }

    fn residual1(&self, u: f64) -> f64 {
        phi_cdf(u) - self.lambda * self.g(u)
    }

    fn residual2(&self, v: f64) -> f64 {
        phi_cdf(v) - self.lambda * self.g(v - self.shift)
    }

    pub fn draw(&self, rng: &mut impl Rng) -> ScalarDraw {
        let x: f64 = rng.sample(StandardNormal);
        let accept: f64 = rng.random();
        let (u1, u2, success) = self.couple(x, accept);
        if self.negative {
            ScalarDraw { u1: -u1, u2: -u2, success }
        } else {
            ScalarDraw { u1, u2, success }
        }
    }

    fn couple(&self, x: f64, accept: f64) -> (f64, f64, bool) {
        let a = self.shift;
        if self.hi > self.lo && x >= self.lo && x <= self.hi {
            let ratio = (-a * x - 0.5 * a * a).exp().min(1.0);
            if accept < self.lambda * ratio {
                return (x, x + a, true);
            }
        }
        let half = 0.5 * self.m_b;
        if x <= -half || x >= half {
            return (x, x, false);
        }
        let target = self.residual1(x);
        let (mut lo, mut hi) = (-half, half);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.residual2(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        (x, 0.5 * (lo + hi), false)
    }
}

/// One draw of the shift coupling.
pub fn scalar_shift_coupling(a: f64, b: f64, rng: &mut impl Rng) -> Result<ScalarDraw> {
    Ok(ScalarCoupling::new(a, b)?.draw(rng))
}
