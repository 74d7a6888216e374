//! Causal (lower-triangular Toeplitz) convolution `y_i = Σ_m k_m x_{i-m}` with a
//! direct/FFT switch, and the matching triangular solver.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Clone)]
pub struct CausalKernel {
    k: Arc<Vec<f64>>,
    cache: Arc<Mutex<Cache>>,
}

struct Cache {
    planner: FftPlanner<f64>,
    spectra: HashMap<usize, Arc<Vec<Complex<f64>>>>,
}

impl std::fmt::Debug for CausalKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CausalKernel").field("len", &self.k.len()).finish()
    }
}

const BASE: usize = 48;

impl CausalKernel {
    pub fn new(k: Vec<f64>) -> Self {
        assert!(!k.is_empty() && k[0] != 0.0, "kernel needs a nonzero leading coefficient");
        Self { k: Arc::new(k), cache: Arc::new(Mutex::new(Cache { planner: FftPlanner::new(), spectra: HashMap::new() })) }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.k
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `y_i` for `i in start..x.len()`.
    pub fn apply(&self, x: &[f64], start: usize) -> Vec<f64> {
        self.apply_pair(x, None, start).0
    }

    /// Two real sequences of equal length convolved in one complex transform.
    pub fn apply_pair(&self, a: &[f64], b: Option<&[f64]>, start: usize) -> (Vec<f64>, Vec<f64>) {
        let n = a.len();
        if let Some(b) = b {
            assert_eq!(b.len(), n);
        }
        if start >= n {
            return (Vec::new(), Vec::new());
        }
        let kl = self.k.len();
        let direct_cost = (n - start) as f64 * kl.min(n) as f64;
        let l = (n + kl.saturating_sub(1).saturating_sub(start)).next_power_of_two();
        let fft_cost = 40.0 * l as f64 * (l as f64).log2().max(1.0);
        if direct_cost <= fft_cost {
            let ya = self.direct(a, start);
            let yb = b.map(|b| self.direct(b, start)).unwrap_or_default();
            return (ya, yb);
        }
        let (fwd, inv, spec) = self.plans(l);
        let mut buf: Vec<Complex<f64>> = (0..l)
            .map(|i| {
                if i < n {
                    Complex::new(a[i], b.map_or(0.0, |b| b[i]))
                } else {
                    Complex::new(0.0, 0.0)
                }
            })
            .collect();
        fwd.process(&mut buf);
        for (z, s) in buf.iter_mut().zip(spec.iter()) {
            *z *= s;
        }
        inv.process(&mut buf);
        let scale = 1.0 / l as f64;
        let ya = buf[start..n].iter().map(|z| z.re * scale).collect();
        let yb = if b.is_some() { buf[start..n].iter().map(|z| z.im * scale).collect() } else { Vec::new() };
        (ya, yb)
    }

    fn direct(&self, x: &[f64], start: usize) -> Vec<f64> {
        let k = &self.k;
        (start..x.len())
            .map(|i| {
                let m_max = i.min(k.len() - 1);
                let mut s = 0.0;
                for m in 0..=m_max {
                    s += k[m] * x[i - m];
                }
                s
            })
            .collect()
    }

    #[allow(clippy::type_complexity)]
    fn plans(
        &self,
        l: usize,
    ) -> (Arc<dyn rustfft::Fft<f64>>, Arc<dyn rustfft::Fft<f64>>, Arc<Vec<Complex<f64>>>) {
        let mut c = self.cache.lock().unwrap();
        let fwd = c.planner.plan_fft_forward(l);
        let inv = c.planner.plan_fft_inverse(l);
        let spec = if let Some(s) = c.spectra.get(&l) {
            s.clone()
        } else {
            let mut s: Vec<Complex<f64>> =
                (0..l).map(|i| Complex::new(if i < self.k.len() { self.k[i] } else { 0.0 }, 0.0)).collect();
            fwd.process(&mut s);
            let s = Arc::new(s);
            if c.spectra.len() > 16 {
                c.spectra.clear();
            }
            c.spectra.insert(l, s.clone());
            s
        };
        (fwd, inv, spec)
    }

    /// Solves `Σ_m k_m z_{N+i-m} = rhs_i` for the `n = rhs.len()` unknowns that
    /// follow the known prefix `hist` (`z = hist ++ u`, `N = hist.len()`).
    pub fn solve(&self, rhs: &[f64], hist: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut r = rhs.to_vec();
        if hist.iter().any(|&x| x != 0.0) {
            let keep = hist.len().min(self.k.len());
            let mut z = hist[hist.len() - keep..].to_vec();
            z.resize(keep + n, 0.0);
            let past = self.apply(&z, keep);
            for (ri, pi) in r.iter_mut().zip(past) {
                *ri -= pi;
            }
        }
        let mut u = vec![0.0; n];
        self.solve_range(&mut u, &mut r, 0, n);
        u
    }

    fn solve_range(&self, u: &mut [f64], r: &mut [f64], lo: usize, hi: usize) {
        if hi - lo <= BASE {
            let k = &self.k;
            for i in lo..hi {
                let mut s = r[i];
                let m_max = (i - lo).min(k.len() - 1);
                for m in 1..=m_max {
                    s -= k[m] * u[i - m];
                }
                u[i] = s / k[0];
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        self.solve_range(u, r, lo, mid);
        let mut z = u[lo..mid].to_vec();
        z.resize(hi - lo, 0.0);
        let c = self.apply(&z, mid - lo);
        for (i, ci) in c.into_iter().enumerate() {
            r[mid + i] -= ci;
        }
        self.solve_range(u, r, mid, hi);
    }
}
