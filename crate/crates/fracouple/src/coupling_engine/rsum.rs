//! Repeated evaluation of `(R_T g)(t)` for a fixed history and `T`, and the
//! weighted `L²` integrals built from it.

use crate::fractional_kernels::quad::{gauss_legendre, GaussRule};
use crate::fractional_kernels::{Block, ROperator};

/// `(R_T g)(t) = t^{-p} ∫ (T-s)^p / (t+T-s) g(s) ds` with the `s`-quadrature
/// frozen: blocks far from `s = T` (relative width ≤ 1/4) use a fixed 4-point
/// rule whose `u^p` factors are precomputed; the rest go through
/// [`ROperator::cell`].
pub struct RSum<'a> {
    p: f64,
    op: &'a ROperator,
    nodes: Vec<(f64, f64)>,
    near: Vec<(f64, f64, f64)>,
}

impl<'a> RSum<'a> {
    pub fn new(op: &'a ROperator, hurst: f64, blocks: &[Block], big_t: f64) -> Self {
        let p = hurst - 0.5;
        let (x4, w4) = gauss_legendre(4);
        let mut nodes = Vec::new();
        let mut near = Vec::new();
        for b in blocks {
            if b.v == 0.0 {
                continue;
            }
            let (lo, hi) = (big_t - b.b, big_t - b.a);
            if lo > 0.0 && hi <= 1.25 * lo {
                let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                for (x, w) in x4.iter().zip(&w4) {
                    let u = c + h * x;
                    nodes.push((u, b.v * w * h * u.powf(p)));
                }
            } else {
                near.push((lo, hi, b.v));
            }
        }
        Self { p, op, nodes, near }
    }

    pub fn is_zero(&self) -> bool {
        self.nodes.is_empty() && self.near.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut s: f64 = self.nodes.iter().map(|(u, c)| c / (t + u)).sum();
        for &(lo, hi, v) in &self.near {
            s += v * self.op.cell(lo, hi, t);
        }
        if s == 0.0 {
            0.0
        } else {
            t.powf(-self.p) * s
        }
    }
}

const T_SMALL: f64 = 1.0 / 1048576.0;
const T_CUT: f64 = 1048576.0;

/// `∫_{lo}^{hi} f` with an 8-point rule on panels whose endpoints grow by
/// factors of two; `[0, T_SMALL]` is handled by `head` when `lo = 0`.
fn panels(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = GaussRule::new(8);
    let mut a = lo.max(T_SMALL);
    let mut s = 0.0;
    while a < hi {
        let b = (2.0 * a).min(hi);
        s += rule.integrate(a, b, &mut f);
        a = b;
    }
    s
}

/// Result of a weighted memory integral: quadrature value plus the rigorous
/// tail surplus beyond the truncation point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Weighted {
    pub value: f64,
    pub surplus: f64,
}

impl Weighted {
    pub fn total(&self) -> f64 {
        self.value + self.surplus
    }
}

/// `∫₀^∞ (1+t)^{2α} Σ_c |scale·(R_T g_c)(t)|² dt`.
///
/// Near `t = 0`, `R_T g(t) ~ c t^{-p}`, so `[0, T_SMALL]` contributes
/// `|R_T g(T_SMALL)|² T_SMALL/(1-2p)`. Beyond `T_CUT` the envelope
/// `|R_T g(t)| ≤ C_T t^{-p-1}` and `(1+t)^{2α} ≤ (2t)^{2α}` give the surplus.
pub fn weighted_integral(
    op: &ROperator,
    hurst: f64,
    blocks: &[Vec<Block>],
    big_t: f64,
    alpha: f64,
    scale: f64,
) -> Weighted {
    let p = hurst - 0.5;
    let sums: Vec<RSum> = blocks.iter().map(|b| RSum::new(op, hurst, b, big_t)).collect();
    if sums.iter().all(|s| s.is_zero()) {
        return Weighted::default();
    }
    let sq = |t: f64| sums.iter().map(|s| s.eval(t).powi(2)).sum::<f64>() * scale * scale;
    let head = sq(T_SMALL) * T_SMALL / (1.0 - 2.0 * p);
    let body = panels(T_SMALL, T_CUT, |t| (1.0 + t).powf(2.0 * alpha) * sq(t));
    let c2: f64 = blocks.iter().map(|b| op.tail_constant(b, big_t).powi(2)).sum::<f64>() * scale * scale;
    let e = 2.0 * alpha - 2.0 * p - 1.0;
    let surplus = c2 * 4f64.powf(alpha) * T_CUT.powf(e) / -e;
    Weighted { value: head + body, surplus }
}

/// `∫_{lo}^{hi} Σ_c |scale·(R_0 g_c)(t)|² dt`.
pub fn interval_l2(op: &ROperator, hurst: f64, blocks: &[Vec<Block>], lo: f64, hi: f64, scale: f64) -> f64 {
    let p = hurst - 0.5;
    let sums: Vec<RSum> = blocks.iter().map(|b| RSum::new(op, hurst, b, 0.0)).collect();
    if sums.iter().all(|s| s.is_zero()) || hi <= lo {
        return 0.0;
    }
    let sq = |t: f64| sums.iter().map(|s| s.eval(t).powi(2)).sum::<f64>() * scale * scale;
    let mut v = panels(lo, hi, sq);
    if lo < T_SMALL {
        v += sq(T_SMALL) * T_SMALL / (1.0 - 2.0 * p);
    }
    v
}
