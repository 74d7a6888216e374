use crate::error::Result;
use crate::sde_models::{chart_drift_at, ModelSpec, Probe};

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A model localised to the ball of radius `a` by the radial retraction
/// `ϖ_a(x) = x` for `|x| ≤ a` and `(x/|x|)(a + 1 - e^{-(|x|-a)})` beyond.
#[derive(Clone, Debug)]
pub struct Localized {
    pub model: ModelSpec,
    pub a: f64,
}

pub fn localize(model: ModelSpec, a: f64) -> Localized {
    assert!(a > 0.0, "localisation radius must be positive");
    Localized { model, a }
}

impl Localized {
    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn retract(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        if r <= self.a {
            out.copy_from_slice(x);
        } else {
            let s = (self.a + 1.0 - (-(r - self.a)).exp()) / r;
            out.iter_mut().zip(x).for_each(|(o, v)| *o = s * v);
        }
    }

    /// Jacobian of `ϖ_a`, row-major: radial factor `e^{-(r-a)}`, tangential
    /// factor `|ϖ_a(x)|/r`.
    pub fn retract_jacobian(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        let r = norm(x);
        out.iter_mut().for_each(|v| *v = 0.0);
        if r <= self.a {
            for i in 0..d {
                out[i * d + i] = 1.0;
            }
            return;
        }
        let radial = (-(r - self.a)).exp();
        let tangential = (self.a + 1.0 - radial) / r;
        for i in 0..d {
            for j in 0..d {
                let uu = x[i] * x[j] / (r * r);
                let delta = if i == j { 1.0 } else { 0.0 };
                out[i * d + j] = tangential * (delta - uu) + radial * uu;
            }
        }
    }

    pub fn drift(&self, x: &[f64], out: &mut [f64]) {
        let mut p = vec![0.0; x.len()];
        self.retract(x, &mut p);
        self.model.drift(&p, out);
    }

    pub fn h(&self, x: &[f64], out: &mut [f64]) {
        let mut p = vec![0.0; x.len()];
        self.retract(x, &mut p);
        self.model.h(&p, out);
    }

    /// `(∇h_a b_a)(x)` with `h_a = h∘ϖ_a`, `b_a = b∘ϖ_a`.
    pub fn chart_drift_at(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        if norm(x) <= self.a {
            chart_drift_at(self.model.as_ref(), x, out);
            return;
        }
        let mut p = vec![0.0; d];
        self.retract(x, &mut p);
        let mut b = vec![0.0; d];
        self.model.drift(&p, &mut b);
        let mut jw = vec![0.0; d * d];
        self.retract_jacobian(x, &mut jw);
        let mut jh = vec![0.0; d * d];
        self.model.grad_h(&p, &mut jh);
        let v: Vec<f64> = (0..d).map(|i| (0..d).map(|k| jw[i * d + k] * b[k]).sum()).collect();
        for i in 0..d {
            out[i] = (0..d).map(|k| jh[i * d + k] * v[k]).sum();
        }
    }

    /// `(∇h_a b_a)(h⁻¹(y))`, the drift of the companion system.
    pub fn chart_drift(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let mut x = vec![0.0; y.len()];
        self.model.h_inv(y, &mut x)?;
        self.chart_drift_at(&x, out);
        Ok(())
    }
}

/// `K̄ = sup_{|x₁|,|x₂| ≤ K} |h(x₂) - h(x₁)|` over probe pairs.
pub fn kbar_estimate(model: &ModelSpec, k: f64, n_probe: usize) -> f64 {
    let d = model.dim();
    let pts = Probe::ball(k, n_probe).points(d);
    let hs: Vec<Vec<f64>> = pts
        .iter()
        .map(|x| {
            let mut y = vec![0.0; d];
            model.h(x, &mut y);
            y
        })
        .collect();
    let mut best = 0.0f64;
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            let d2: f64 = hs[i].iter().zip(&hs[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.max(d2.sqrt());
        }
    }
    best
}

/// `a = max{M, Ĉ(M, K)} + 1` with `Ĉ = sup{|x| : |h(x)| ≤ sup_{|z|≤M}|h(z)| + K̄}`,
/// found by radial scans along probe directions.
pub fn local_radius(model: &ModelSpec, m: f64, kbar: f64, n_probe: usize) -> f64 {
    let d = model.dim();
    let mut y = vec![0.0; d];
    let hbar = Probe::ball(m, n_probe)
        .points(d)
        .iter()
        .map(|x| {
            model.h(x, &mut y);
            norm(&y)
        })
        .fold(0.0f64, f64::max);
    let bound = hbar + kbar;
    let mut dirs: Vec<Vec<f64>> = Probe::ball(1.0, n_probe.min(200))
        .points(d)
        .into_iter()
        .filter(|u| norm(u) > 1e-3)
        .map(|u| {
            let n = norm(&u);
            u.iter().map(|v| v / n).collect()
        })
        .collect();
    if dirs.is_empty() {
        dirs.push(vec![1.0; d]);
    }
    let r_max = 10.0 * (bound + m + 1.0);
    let dr = r_max / 4000.0;
    let mut c_hat = 0.0f64;
    let mut inside = |u: &[f64], r: f64| {
        let x: Vec<f64> = u.iter().map(|v| v * r).collect();
        model.h(&x, &mut y);
        norm(&y) <= bound
    };
    for u in &dirs {
        let mut last = None;
        let mut r = 0.0;
        while r <= r_max {
            if inside(u, r) {
                last = Some(r);
            }
            r += dr;
        }
        if let Some(r0) = last {
            let (mut lo, mut hi) = (r0, r0 + dr);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if inside(u, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            c_hat = c_hat.max(lo);
        }
    }
    m.max(c_hat) + 1.0
}

/// Estimate of `κ₁^a = sup |β_a(y₂) - β_a(y₁)| / |y₂ - y₁|` over pairs in
/// `h(B̄(0, a))`, `β_a = ∇h_a b_a ∘ h⁻¹`.
#[derive(Clone, Copy, Debug)]
pub struct Kappa1 {
    /// Largest quotient seen.
    pub raw: f64,
    /// `raw` times the safety factor.
    pub kappa1: f64,
}

pub fn kappa1_estimate(loc: &Localized, n_probe: usize, safety: f64) -> Kappa1 {
    let d = loc.dim();
    let pts = Probe::ball(loc.a, n_probe).points(d);
    let eval = |x: &[f64]| {
        let mut y = vec![0.0; d];
        let mut b = vec![0.0; d];
        loc.h(x, &mut y);
        loc.chart_drift_at(x, &mut b);
        (y, b)
    };
    let vals: Vec<_> = pts.iter().map(|x| eval(x)).collect();
    let quotient = |p: &(Vec<f64>, Vec<f64>), q: &(Vec<f64>, Vec<f64>)| {
        let dy: f64 = p.0.iter().zip(&q.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dy <= 1e-12 {
            return 0.0;
        }
        let db: f64 = p.1.iter().zip(&q.1).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        db / dy
    };
    let mut best = 0.0f64;
    let n_pairs = vals.len().min(300);
    for i in 0..n_pairs {
        for j in i + 1..n_pairs {
            best = best.max(quotient(&vals[i], &vals[j]));
        }
    }
    // nearby pairs resolve the local Lipschitz constant
    let h = 1e-4 * (1.0 + loc.a);
    for (x, v) in pts.iter().zip(&vals) {
        for c in 0..d {
            for s in [-1.0, 1.0] {
                let mut z = x.clone();
                z[c] += s * h;
                if norm(&z) > loc.a {
                    continue;
                }
                best = best.max(quotient(v, &eval(&z)));
            }
        }
    }
    Kappa1 { raw: best, kappa1: safety * best }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde_models::model_by_name;

    #[test]
    fn retraction_is_identity_inside_and_bounded_outside() {
        let loc = localize(model_by_name("planar_rotation", 2, 1.0).unwrap(), 3.0);
        let mut out = [0.0; 2];
        loc.retract(&[1.0, -2.0], &mut out);
        assert_eq!(out, [1.0, -2.0]);
        let mut last = 0.0;
        // saturates at a + 1 once e^{-(r-a)} drops below the f64 resolution
        for r in [3.5, 5.0, 10.0, 50.0] {
            loc.retract(&[r, 0.0], &mut out);
            assert!(out[0] >= last && out[0] <= 4.0, "r={r}: {out:?} last={last}");
            assert!(r > 40.0 || out[0] > last);
            last = out[0];
        }
    }

    #[test]
    fn additive_kbar_and_radius() {
        let m = model_by_name("additive_baseline", 1, 0.0).unwrap();
        let kb = kbar_estimate(&m, 10.0, 100);
        assert!((kb - 20.0).abs() < 1e-12);
        let a = local_radius(&m, 20.0, kb, 100);
        assert!((a - 41.0).abs() < 0.1, "{a}");
    }
}
