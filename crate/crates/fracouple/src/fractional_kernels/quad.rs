//! Quadrature rules shared by the kernel operators.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed-order rule mapped onto arbitrary intervals.
#[derive(Clone, Debug)]
pub struct GaussRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self { x, w }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.x.iter().zip(&self.w) {
            s += w * f(c + h * x);
        }
        s * h
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) with global error control.
/// Returns `(value, error estimate)`.
pub fn adaptive(a: f64, b: f64, tol: f64, max_intervals: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let (v, e) = gk15(a, b, &mut f);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= tol * total.abs().max(1e-300) || err < 1e-15 || pieces.len() >= max_intervals {
            return (total, err);
        }
        let (i, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (a, b, _, _) = pieces.swap_remove(i);
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15(a, m, &mut f);
        let (v2, e2) = gk15(m, b, &mut f);
        pieces.push((a, m, v1, e1));
        pieces.push((m, b, v2, e2));
    }
}

/// ∫₀^∞ f over geometrically growing panels [0,1], [1,2], [2,4], ... up to `upper`,
/// each integrated adaptively.
pub fn geometric_panels(upper: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut total = adaptive(0.0, 1.0, tol, 200, &mut f).0;
    let mut a = 1.0;
    while a < upper {
        let b = (2.0 * a).min(upper);
        total += adaptive(a, b, tol, 200, &mut f).0;
        a = b;
    }
    total
}
