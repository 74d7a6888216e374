use super::model::SdeModel;
use nalgebra::DMatrix;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut f = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f /= base as f64;
    }
    r
}

/// Deterministic low-discrepancy probe points in the ball `B̄(center, radius)`.
#[derive(Debug, Clone)]
pub struct Probe {
    pub radius: f64,
    pub count: usize,
    pub center: Option<Vec<f64>>,
}

impl Probe {
    pub fn ball(radius: f64, count: usize) -> Self {
        Self { radius, count, center: None }
    }

    /// Halton points mapped to the cube `[-r, r]^d` and radially squeezed
    /// into the ball; the origin and `±r e_i` are included.
    pub fn points(&self, d: usize) -> Vec<Vec<f64>> {
        assert!(d <= PRIMES.len(), "probe dimension above {}", PRIMES.len());
        let mut pts = vec![vec![0.0; d]];
        for i in 0..d {
            for s in [-1.0, 1.0] {
                let mut e = vec![0.0; d];
                e[i] = s * self.radius;
                pts.push(e);
            }
        }
        let mut k = 1u64;
        while pts.len() < self.count.max(1) {
            let u: Vec<f64> = (0..d).map(|j| 2.0 * radical_inverse(k, PRIMES[j]) - 1.0).collect();
            let inf = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let eu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = if eu > 0.0 { inf / eu } else { 0.0 };
            pts.push(u.iter().map(|v| v * scale * self.radius).collect());
            k += 1;
        }
        pts.truncate(self.count.max(1));
        if let Some(c) = &self.center {
            for p in &mut pts {
                p.iter_mut().zip(c).for_each(|(v, c)| *v += c);
            }
        }
        pts
    }
}

#[derive(Debug, Clone)]
pub struct H1Report {
    pub pass: bool,
    /// `max (∇V|b) - β₀ + κ₀V`; `≤ 0` means the inequality holds everywhere.
    pub max_violation: f64,
    pub argmax: Vec<f64>,
    pub min_v: f64,
    pub n_probe: usize,
}

pub fn check_h1<M: SdeModel + ?Sized>(model: &M, probe: &Probe) -> H1Report {
    let d = model.dim();
    let mut b = vec![0.0; d];
    let mut g = vec![0.0; d];
    let (b0, k0) = (model.beta0(), model.kappa0());
    let mut worst = f64::NEG_INFINITY;
    let mut arg = vec![0.0; d];
    let mut min_v = f64::INFINITY;
    let pts = probe.points(d);
    for x in &pts {
        model.drift(x, &mut b);
        model.grad_lyapunov(x, &mut g);
        let v = model.lyapunov(x);
        min_v = min_v.min(v);
        let lhs: f64 = g.iter().zip(&b).map(|(a, b)| a * b).sum();
        let m = lhs - b0 + k0 * v;
        if m > worst {
            worst = m;
            arg = x.clone();
        }
    }
    let tol = 1e-12 * (1.0 + b0.abs());
    H1Report {
        pass: worst <= tol && min_v > 0.0 && b0 > 0.0 && k0 > 0.0,
        max_violation: worst,
        argmax: arg,
        min_v,
        n_probe: pts.len(),
    }
}

#[derive(Debug, Clone)]
pub struct H2Report {
    pub pass: bool,
    pub invertible: bool,
    pub max_cond: f64,
    /// `max ‖∇h σ - I‖`.
    pub max_inverse_err: f64,
    /// `max |∂_j h_i (finite difference) - (σ⁻¹)_ij|`.
    pub max_fd_err: f64,
    /// `max |∂_k(σ⁻¹)_ij - ∂_j(σ⁻¹)_ik|`.
    pub max_integrability_err: f64,
    pub worst_point: Vec<f64>,
    pub n_probe: usize,
}

pub const TOL_H2: f64 = 1e-8;
pub const TOL_FD: f64 = 1e-5;

fn sigma_inv<M: SdeModel + ?Sized>(m: &M, x: &[f64]) -> Option<(DMatrix<f64>, f64)> {
    let d = m.dim();
    let mut s = vec![0.0; d * d];
    m.sigma(x, &mut s);
    let sm = DMatrix::from_row_slice(d, d, &s);
    let sv = sm.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 0.0) || !(smax / smin < 1e12) {
        return None;
    }
    sm.try_inverse().map(|inv| (inv, smax / smin))
}

pub fn check_h2<M: SdeModel + ?Sized>(model: &M, probe: &Probe) -> H2Report {
    let d = model.dim();
    let pts = probe.points(d);
    let mut rep = H2Report {
        pass: true,
        invertible: true,
        max_cond: 0.0,
        max_inverse_err: 0.0,
        max_fd_err: 0.0,
        max_integrability_err: 0.0,
        worst_point: vec![],
        n_probe: pts.len(),
    };
    let mut j = vec![0.0; d * d];
    let mut s = vec![0.0; d * d];
    let (mut hp, mut hm) = (vec![0.0; d], vec![0.0; d]);
    let mut worst = 0.0f64;
    for x in &pts {
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let Some((inv, cond)) = sigma_inv(model, x) else {
            rep.invertible = false;
            rep.worst_point = x.clone();
            continue;
        };
        rep.max_cond = rep.max_cond.max(cond);
        model.grad_h(x, &mut j);
        model.sigma(x, &mut s);
        let jm = DMatrix::from_row_slice(d, d, &j);
        let sm = DMatrix::from_row_slice(d, d, &s);
        let e_inv = (&jm * &sm - DMatrix::identity(d, d)).abs().max();

        let step = 1e-5 * scale;
        let mut e_fd = 0.0f64;
        let mut xp = x.clone();
        let mut xm = x.clone();
        for c in 0..d {
            xp[c] = x[c] + step;
            xm[c] = x[c] - step;
            model.h(&xp, &mut hp);
            model.h(&xm, &mut hm);
            for r in 0..d {
                let fd = (hp[r] - hm[r]) / (2.0 * step);
                e_fd = e_fd.max((fd - inv[(r, c)]).abs());
            }
            xp[c] = x[c];
            xm[c] = x[c];
        }

        // ∂_k (σ⁻¹) by central differences
        let mut dinv = Vec::with_capacity(d);
        for k in 0..d {
            xp[k] = x[k] + step;
            xm[k] = x[k] - step;
            let dk = match (sigma_inv(model, &xp), sigma_inv(model, &xm)) {
                (Some((a, _)), Some((b, _))) => (a - b) / (2.0 * step),
                _ => DMatrix::from_element(d, d, f64::NAN),
            };
            dinv.push(dk);
            xp[k] = x[k];
            xm[k] = x[k];
        }
        let mut e_int = 0.0f64;
        for i in 0..d {
            for jj in 0..d {
                for k in 0..d {
                    let e = (dinv[k][(i, jj)] - dinv[jj][(i, k)]).abs();
                    e_int = if e.is_nan() { f64::INFINITY } else { e_int.max(e) };
                }
            }
        }
        rep.max_inverse_err = rep.max_inverse_err.max(e_inv);
        rep.max_fd_err = rep.max_fd_err.max(e_fd);
        rep.max_integrability_err = rep.max_integrability_err.max(e_int);
        let score = (e_inv / TOL_H2).max(e_fd / TOL_FD).max(e_int / TOL_FD);
        if score > worst || rep.worst_point.is_empty() {
            worst = score;
            rep.worst_point = x.clone();
        }
    }
    rep.pass = rep.invertible
        && rep.max_inverse_err <= TOL_H2
        && rep.max_fd_err <= TOL_FD
        && rep.max_integrability_err <= TOL_FD;
    rep
}

/// Growth probe for sublinearity: `max |b(x)| / (1 + |x|)` on spheres of
/// increasing radius must stay bounded.
pub fn check_sublinear<M: SdeModel + ?Sized>(model: &M) -> bool {
    let d = model.dim();
    let mut b = vec![0.0; d];
    let ratio = |r: f64, b: &mut Vec<f64>| {
        Probe::ball(r, 64)
            .points(d)
            .iter()
            .map(|x| {
                model.drift(x, b);
                let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                nb / (1.0 + nx)
            })
            .fold(0.0f64, f64::max)
    };
    let near = ratio(10.0, &mut b);
    let far = ratio(1e4, &mut b);
    far.is_finite() && far <= 10.0 * near.max(1.0)
}
