use crate::rng::stream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;
const BOOTSTRAP: usize = 200;
const BOOTSTRAP_SEED: u64 = 0x7a11;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// Survival-curve options: node placement and the fit window in `Ŝ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailOpts {
    pub n_nodes: usize,
    /// Smallest positive node.
    pub t_min: f64,
    pub window: (f64, f64),
    /// Replicas that must couple inside the fit window for a reliable slope.
    pub min_in_window: usize,
}

impl Default for TailOpts {
    fn default() -> Self {
        Self { n_nodes: 200, t_min: 1.0, window: (0.05, 0.8), min_in_window: 10 }
    }
}

/// `Ŝ(t) = P̂(τ∞ > t)` on a node grid, with every censored replica counted as
/// surviving up to the common horizon `t_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t: Vec<f64>,
    pub survival: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub n_at_risk: Vec<usize>,
    /// Least-squares slope of `log Ŝ` on `log t` over the fit window.
    pub slope: Option<f64>,
    /// Replica-bootstrap 95% interval of the slope.
    pub slope_ci: Option<(f64, f64)>,
    pub reliable: bool,
    pub n_in_window: usize,
    pub window: (f64, f64),
    pub n_replicas: usize,
    pub n_censored: usize,
    pub t_max: f64,
    /// Merge time per replica, `None` if censored.
    pub times: Vec<Option<f64>>,
}

pub const SURVIVAL_HEADER: &str = "t,survival,ci_lo,ci_hi,n_at_risk";

/// `0` followed by `n` log-spaced nodes in `[t_min, t_max]`.
pub fn log_nodes(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    let mut t = vec![0.0];
    if n == 0 || !(t_max > 0.0) {
        return t;
    }
    let lo = t_min.min(t_max);
    if n == 1 || lo == t_max {
        t.push(t_max);
        return t;
    }
    let r = (t_max / lo).ln() / (n - 1) as f64;
    t.extend((0..n).map(|i| if i == n - 1 { t_max } else { lo * (r * i as f64).exp() }));
    t
}

fn sorted_finite(times: &[Option<f64>]) -> Vec<f64> {
    let mut s: Vec<f64> = times.iter().flatten().copied().collect();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

/// `#{τ > t}` for sorted merge times plus `censored` replicas at infinity.
fn count_above(sorted: &[f64], censored: usize, t: f64) -> usize {
    sorted.len() - sorted.partition_point(|&x| x <= t) + censored
}

fn fit(t: &[f64], s: &[f64], window: (f64, f64)) -> Option<(f64, Vec<usize>)> {
    let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] > 0.0 && s[i] >= window.0 && s[i] <= window.1).collect();
    if idx.len() < 2 {
        return None;
    }
    let x: Vec<f64> = idx.iter().map(|&i| t[i].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| s[i].ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some((sxy / sxx, idx))
}

impl TailEstimate {
    /// Aggregates merge times (`None` = censored at `t_max`).
    pub fn from_times(times: Vec<Option<f64>>, t_max: f64, opts: &TailOpts) -> Self {
        let n = times.len();
        let sorted = sorted_finite(&times);
        let censored = n - sorted.len();
        let t = log_nodes(opts.t_min, t_max, opts.n_nodes);
        let mut survival = Vec::with_capacity(t.len());
        let mut ci_lo = Vec::with_capacity(t.len());
        let mut ci_hi = Vec::with_capacity(t.len());
        let mut n_at_risk = Vec::with_capacity(t.len());
        for &ti in &t {
            let k = count_above(&sorted, censored, ti);
            let p = if n == 0 { 1.0 } else { k as f64 / n as f64 };
            let (lo, hi) = wilson(k, n);
            survival.push(p);
            ci_lo.push(lo);
            ci_hi.push(hi);
            n_at_risk.push(k);
        }
        let fitted = fit(&t, &survival, opts.window);
        let (slope, n_in_window) = match &fitted {
            Some((s, idx)) => {
                let (a, b) = (t[idx[0]], t[*idx.last().unwrap()]);
                (Some(*s), sorted.iter().filter(|&&x| x >= a && x <= b).count())
            }
            None => (None, 0),
        };
        let slope_ci = slope.and_then(|_| bootstrap_ci(&times, &t, opts.window));
        Self {
            t,
            survival,
            ci_lo,
            ci_hi,
            n_at_risk,
            slope,
            slope_ci,
            reliable: slope.is_some() && n_in_window >= opts.min_in_window,
            n_in_window,
            window: opts.window,
            n_replicas: n,
            n_censored: censored,
            t_max,
            times,
        }
    }

    /// `Ŝ` and its Wilson interval at an arbitrary `t ≤ t_max`.
    pub fn survival_at(&self, t: f64) -> (f64, f64, f64) {
        let sorted = sorted_finite(&self.times);
        let k = count_above(&sorted, self.n_censored, t);
        let n = self.n_replicas;
        let (lo, hi) = wilson(k, n);
        (if n == 0 { 1.0 } else { k as f64 / n as f64 }, lo, hi)
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{SURVIVAL_HEADER}")?;
        for i in 0..self.t.len() {
            writeln!(out, "{:?},{:?},{:?},{:?},{}", self.t[i], self.survival[i], self.ci_lo[i], self.ci_hi[i], self.n_at_risk[i])?;
        }
        Ok(())
    }
}

fn bootstrap_ci(times: &[Option<f64>], t: &[f64], window: (f64, f64)) -> Option<(f64, f64)> {
    let n = times.len();
    let mut rng = stream(BOOTSTRAP_SEED, n as u64);
    let mut slopes = Vec::with_capacity(BOOTSTRAP);
    let mut resample = vec![None; n];
    for _ in 0..BOOTSTRAP {
        for r in resample.iter_mut() {
            *r = times[rng.random_range(0..n)];
        }
        let sorted = sorted_finite(&resample);
        let censored = n - sorted.len();
        let s: Vec<f64> = t.iter().map(|&ti| count_above(&sorted, censored, ti) as f64 / n as f64).collect();
        if let Some((b, _)) = fit(t, &s, window) {
            slopes.push(b);
        }
    }
    if slopes.len() < BOOTSTRAP / 2 {
        return None;
    }
    slopes.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| slopes[((p * (slopes.len() - 1) as f64).round()) as usize];
    Some((q(0.025), q(0.975)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Consistency {
    Consistent,
    Inconsistent,
    Undetermined,
}

/// Comparison of the observed decay with the `t^{-(1/8-ε)}` envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: Option<f64>,
    pub abs_slope: Option<f64>,
    pub slope_ci: Option<(f64, f64)>,
    pub exponent: f64,
    pub reliable: bool,
    pub consistency: Consistency,
    /// Node at which the upper confidence bound first rises above the envelope.
    pub violation_at: Option<f64>,
}

/// The envelope `C t^{-(1/8-ε)}` is anchored at the first node of the fit
/// window through the upper confidence bound there; the decay is consistent
/// with it unless some later node has its lower confidence bound above the
/// envelope. No slope means "undetermined" unless every replica coupled.
pub fn rate_fit(tail: &TailEstimate, eps: f64) -> RateFit {
    let exponent = 0.125 - eps;
    let mut out = RateFit {
        slope: tail.slope,
        abs_slope: tail.slope.map(f64::abs),
        slope_ci: tail.slope_ci,
        exponent,
        reliable: tail.reliable,
        consistency: Consistency::Undetermined,
        violation_at: None,
    };
    let all_coupled = tail.n_censored == 0 && tail.n_replicas > 0;
    let Some(start) = (0..tail.t.len())
        .find(|&i| tail.t[i] > 0.0 && tail.survival[i] >= tail.window.0 && tail.survival[i] <= tail.window.1)
    else {
        if all_coupled {
            out.consistency = Consistency::Consistent;
        }
        return out;
    };
    if !tail.reliable && !all_coupled {
        return out;
    }
    let (ta, ca) = (tail.t[start], tail.ci_hi[start]);
    out.consistency = Consistency::Consistent;
    for i in start..tail.t.len() {
        if tail.survival[i] < tail.window.0 {
            break;
        }
        let env = ca * (tail.t[i] / ta).powf(-exponent);
        if tail.ci_lo[i] > env {
            out.consistency = Consistency::Inconsistent;
            out.violation_at = Some(tail.t[i]);
            break;
        }
    }
    out
}

/// `Ŝ(t)` and its upper confidence bound as a bound on the total-variation
/// distance at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvBound {
    pub t: Vec<f64>,
    pub survival: Vec<f64>,
    pub bound: Vec<f64>,
}

pub fn tv_bound(tail: &TailEstimate, grid: &[f64]) -> TvBound {
    let mut out = TvBound { t: Vec::new(), survival: Vec::new(), bound: Vec::new() };
    for &t in grid.iter().filter(|&&t| t <= tail.t_max) {
        let (s, _, hi) = tail.survival_at(t);
        out.t.push(t);
        out.survival.push(s);
        out.bound.push(hi);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        for (k, n) in [(0, 10), (10, 10), (3, 7), (500, 1000)] {
            let (lo, hi) = wilson(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
        let (lo, hi) = wilson(500, 1000);
        assert!((hi - lo - 2.0 * Z95 * 0.5 / 1000f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn nodes_are_log_spaced() {
        let t = log_nodes(1.0, 1000.0, 4);
        assert_eq!(t.len(), 5);
        assert_eq!(t[0], 0.0);
        assert!((t[2] - 10.0).abs() < 1e-9 && t[4] == 1000.0);
    }
}
