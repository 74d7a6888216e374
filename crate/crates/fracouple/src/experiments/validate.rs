//! The validation suite: every oracle and invariant check, in a fixed order,
//! reported as `item,status,value,threshold` lines.

use super::{prepare_setup, ExperimentConfig};
use crate::coupling_engine::{
    girsanov_density, rho_ode_solve_localized, run_coupling, step1_attempt, window_width, Anchor, Branch, CouplingRun,
    CouplingSetup, CouplingState, Past, RhoOpts, ScalarCoupling,
};
use crate::error::Result;
use crate::fractional_kernels::{
    fgn_autocov, gb_to_gw, gw_to_gb, mvn_map, r_operator, truncation_deficit, DriftRecord, FbmPath, FgnSampler,
    KernelParams, UniformGrid, WienerPath,
};
use crate::rng::stream;
use crate::sde_models::{
    check_h1, check_h2, integrate, model_by_name, non_integrable_example, AdditiveBaseline, PlanarRotation, Probe,
    ScalarSin,
};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::io::Write;
use std::time::Instant;

pub const REPORT_HEADER: &str = "item,status,value,threshold";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationItem {
    pub item: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub items: Vec<ValidationItem>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn get(&self, item: &str) -> Option<&ValidationItem> {
        self.items.iter().find(|i| i.item == item)
    }

    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{REPORT_HEADER}")?;
        for i in &self.items {
            writeln!(out, "{},{},{:?},{}", i.item, if i.pass { "pass" } else { "fail" }, i.value, i.threshold)?;
        }
        Ok(())
    }
}

/// Sample sizes and deliberate perturbations of the suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidateOpts {
    pub fgn_paths: usize,
    pub fgn_hursts: Vec<f64>,
    pub variance_paths: usize,
    pub euler_paths: usize,
    pub rho_solves: usize,
    pub girsanov_draws: usize,
    pub scalar_ks_draws: usize,
    pub scalar_gap_draws: usize,
    pub step1_attempts: usize,
    pub schedule_runs: usize,
    /// Multiplies `α_H` in the Mandelbrot–Van Ness map.
    pub alpha_h_scale: f64,
}

impl Default for ValidateOpts {
    fn default() -> Self {
        Self {
            fgn_paths: 100_000,
            fgn_hursts: vec![0.6, 0.7, 0.9],
            variance_paths: 100_000,
            euler_paths: 100,
            rho_solves: 1000,
            girsanov_draws: 100_000,
            scalar_ks_draws: 100_000,
            scalar_gap_draws: 1_000_000,
            step1_attempts: 10_000,
            schedule_runs: 20,
            alpha_h_scale: 1.0,
        }
    }
}

impl ValidateOpts {
    /// Reduced sample sizes for smoke runs; thresholds scale with the sizes.
    pub fn quick() -> Self {
        Self {
            fgn_paths: 5000,
            variance_paths: 5000,
            euler_paths: 10,
            rho_solves: 100,
            girsanov_draws: 10_000,
            scalar_ks_draws: 5000,
            scalar_gap_draws: 20_000,
            step1_attempts: 500,
            schedule_runs: 3,
            ..Self::default()
        }
    }
}

fn item(name: &str, pass: bool, value: f64, threshold: impl Into<String>, t0: Instant) -> ValidationItem {
    ValidationItem { item: name.into(), pass, value, threshold: threshold.into(), seconds: t0.elapsed().as_secs_f64() }
}

fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(tag)
}

fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// One-sample Kolmogorov–Smirnov statistic against `N(0, 1)`.
pub(crate) fn ks_normal(sample: &[f64]) -> f64 {
    let n01 = Normal::new(0.0, 1.0).expect("standard normal");
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = n01.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
pub(crate) fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lam = (sn + 0.12 + 0.11 / sn) * d;
    if lam < 0.2 {
        return 1.0;
    }
    let mut q = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = 2.0 * if k as u64 % 2 == 1 { 1.0 } else { -1.0 } * (-2.0 * k * k * lam * lam).exp();
        q += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    q.clamp(0.0, 1.0)
}

fn ks_p(sample: &[f64]) -> f64 {
    ks_pvalue(ks_normal(sample), sample.len())
}

/// Lag-0..8 autocovariances of 256-point unit-grid fGn, as the worst
/// `|ĉ_k - γ(k)| / se` over all Hurst indices.
fn fgn_covariance(opts: &ValidateOpts, seed: u64) -> Result<ValidationItem> {
    let t0 = Instant::now();
    let n = 256;
    let dt = 1.0 / n as f64;
    let mut worst = 0.0f64;
    for (hi, &h) in opts.fgn_hursts.iter().enumerate() {
        let sampler = FgnSampler::new(h, dt, n)?;
        let mut rng = stream(sub_seed(seed, 1), hi as u64);
        let mut est = vec![Vec::with_capacity(opts.fgn_paths); 9];
        while est[0].len() < opts.fgn_paths {
            let (a, b) = sampler.sample_pair(&mut rng);
            for x in [a, b] {
                if est[0].len() == opts.fgn_paths {
                    break;
                }
                for (k, e) in est.iter_mut().enumerate() {
                    let c: f64 = (0..n - k).map(|i| x[i] * x[i + k]).sum::<f64>() / (n - k) as f64;
                    e.push(c);
                }
            }
        }
        for (k, e) in est.iter().enumerate() {
            let (m, se) = mean_se(e);
            worst = worst.max((m - fgn_autocov(h, k, dt)).abs() / se);
        }
    }
    Ok(item("fgn_covariance", worst <= 3.0, worst, "<=3 se", t0))
}

/// `Var(B₁) = 1` from exact fGn and from the truncated Mandelbrot–Van Ness map
/// (corrected by the truncation deficit); worst deviation in standard errors.
fn mvn_variance(config: &ExperimentConfig, opts: &ValidateOpts, seed: u64) -> Result<ValidationItem> {
    let t0 = Instant::now();
    let c = &config.coupling;
    let mut params = KernelParams::new(c.hurst, c.theta, c.t_hist)?;
    let deficit = truncation_deficit(&params);
    params.alpha_h *= opts.alpha_h_scale;
    let dt = c.dt;
    let n1 = c.cells_per_unit();
    let m = params.lags(dt);
    let n_paths = opts.variance_paths;

    let var_se = |x: &[f64]| {
        let nn = x.len() as f64;
        let v = x.iter().map(|a| a * a).sum::<f64>() / nn;
        (v, v * (2.0 / nn).sqrt())
    };

    let grid = UniformGrid::new(0.0, 1.0 / 256.0, 256)?;
    let sampler = FgnSampler::new(c.hurst, grid.dt, grid.n)?;
    let mut rng = stream(sub_seed(seed, 2), 0);
    let mut b1 = Vec::with_capacity(n_paths);
    while b1.len() < n_paths {
        let (a, b) = sampler.sample_pair(&mut rng);
        b1.push(a.iter().sum::<f64>());
        if b1.len() < n_paths {
            b1.push(b.iter().sum::<f64>());
        }
    }
    let (v_fgn, se_fgn) = var_se(&b1);

    let wgrid = UniformGrid::new(-(m as f64) * dt, dt, m + n1)?;
    let mut rng = stream(sub_seed(seed, 2), 1);
    let mut b1 = Vec::with_capacity(n_paths);
    while b1.len() < n_paths {
        let w = WienerPath::sample(wgrid, 2, &mut rng);
        let b = mvn_map(&w, &params)?;
        for row in &b.increments {
            if b1.len() < n_paths {
                b1.push(row.iter().sum::<f64>());
            }
        }
    }
    let (v_mvn, se_mvn) = var_se(&b1);
    let z = ((v_fgn - 1.0).abs() / se_fgn).max((v_mvn + deficit - 1.0).abs() / se_mvn);
    Ok(item("mvn_variance", z <= 3.0, z, "<=3 se", t0))
}

/// `(H, T, t, (R_T 1_{[-1,0]})(t))` from a 30-digit adaptive quadrature,
/// cross-checked by a 10⁶-node midpoint rule.
pub(crate) const R_OPERATOR_ORACLE: [(f64, f64, f64, f64); 16] = [
    (0.6, 0.0, 0.25, 1.6071012253383833956),
    (0.6, 0.0, 3.0, 0.2326700652386141265),
    (0.6, 2.0, 0.25, 0.46208453425821010784),
    (0.6, 2.0, 3.0, 0.17880919893948868736),
    (0.7, 0.0, 0.25, 1.625502433682591447),
    (0.7, 0.0, 3.0, 0.18986978227919720358),
    (0.7, 2.0, 0.25, 0.58073690000615215042),
    (0.7, 2.0, 3.0, 0.17538841638256400461),
    (0.8, 0.0, 0.25, 1.6622016103383885168),
    (0.8, 0.0, 3.0, 0.15611494557411999102),
    (0.8, 2.0, 0.25, 0.72995626400213617548),
    (0.8, 2.0, 3.0, 0.17205650641325856048),
    (0.9, 0.0, 0.25, 1.7158149497432034583),
    (0.9, 0.0, 3.0, 0.12918933463424094845),
    (0.9, 2.0, 0.25, 0.91764278234338528649),
    (0.9, 2.0, 3.0, 0.1688108516755338926),
];

fn r_operator_oracle() -> Result<ValidationItem> {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for &(h, big_t, t, want) in &R_OPERATOR_ORACLE {
        let params = KernelParams::with_hurst(h, 10.0)?;
        let grid = UniformGrid::new(-1.0, 1.0 / 8.0, 8)?;
        let mut g = DriftRecord::zeros(grid, 1, 10.0);
        g.gw[0].fill(1.0);
        let v = r_operator(&g, big_t, &[t], &params)?[0][0];
        worst = worst.max((v - want).abs() / want.abs());
    }
    Ok(item("r_operator_oracle", worst <= 1e-6, worst, "<=1e-6 rel", t0))
}

fn test_functions() -> Vec<fn(f64) -> f64> {
    vec![
        |_| 1.0,
        |t| t,
        |t| 1.0 - t * t,
        |t| (3.0 * t).sin(),
        |t| (-t).exp(),
        |t| 1.0 / (1.0 + t * t),
        |t| (2.0 * t).cos() * t,
        |t| (0.5 * t).tanh(),
    ]
}

/// `g_w → g_B → g_w` and `g_B → g_w → g_B` on eight smooth functions after a
/// nonzero history.
fn inversion_round_trip(config: &ExperimentConfig) -> Result<ValidationItem> {
    let t0 = Instant::now();
    let c = &config.coupling;
    let params = KernelParams::new(c.hurst, c.theta, 4.0)?;
    let dt = 1.0 / 32.0;
    let n = 64;
    let hgrid = UniformGrid::new(-1.0, dt, 32)?;
    let mut hist = DriftRecord::zeros(hgrid, 1, 4.0);
    for (i, v) in hist.gw[0].iter_mut().enumerate() {
        *v = 0.5 * (i as f64 * dt * 5.0).sin();
    }
    let mut worst = 0.0f64;
    for f in test_functions() {
        let g = vec![(0..n).map(|i| f((i as f64 + 0.5) * dt)).collect::<Vec<_>>()];
        let scale = g[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let fwd = gw_to_gb(&g, &hist, &params)?;
        let back = gb_to_gw(&fwd, &hist, &params)?;
        let inv = gb_to_gw(&g, &hist, &params)?;
        let again = gw_to_gb(&inv, &hist, &params)?;
        for i in 0..n {
            worst = worst.max((back[0][i] - g[0][i]).abs() / scale);
            worst = worst.max((again[0][i] - g[0][i]).abs() / scale);
        }
    }
    Ok(item("inversion_round_trip", worst <= 1e-6, worst, "<=1e-6 rel", t0))
}

/// Exact solution of `dX = -X dt + dB` for `B` linear between the nodes of
/// the noise grid: `X_t = e^{-t} x0 + B_t - ∫₀ᵗ e^{-(t-s)} B_s ds`.
pub fn fou_exact(x0: f64, fbm: &FbmPath) -> Vec<f64> {
    let h = fbm.grid.dt;
    let e = (-h).exp();
    let w = (h - 1.0 + e) / h;
    let mut b = 0.0;
    let mut conv = 0.0;
    let mut decay = 1.0;
    let mut out = vec![x0];
    for &db in &fbm.increments[0] {
        conv = e * conv + b * (1.0 - e) + db * w;
        b += db;
        decay *= e;
        out.push(decay * x0 + b - conv);
    }
    out
}

fn coarsen(fbm: &FbmPath, factor: usize) -> Result<FbmPath> {
    let grid = UniformGrid::new(fbm.grid.t0, fbm.grid.dt * factor as f64, fbm.grid.n / factor)?;
    let inc = fbm.increments.iter().map(|row| row.chunks(factor).map(|c| c.iter().sum()).collect()).collect();
    FbmPath::new(grid, fbm.hurst, inc)
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Pathwise sup-error of Euler against the exact fOU solution on the ladder
/// `dt/2, …, dt/32` over one time unit; slope of log error on log step.
fn euler_order(config: &ExperimentConfig, opts: &ValidateOpts, seed: u64) -> Result<ValidationItem> {
    let t0 = Instant::now();
    let c = &config.coupling;
    let params = KernelParams::new(c.hurst, c.theta, c.t_hist)?;
    let coarsest = (1.0 / (c.dt / 2.0)).round() as usize;
    let fine_n = coarsest * 16 * 16;
    let fine = UniformGrid::new(0.0, 1.0 / fine_n as f64, fine_n)?;
    let sampler = FgnSampler::new(c.hurst, fine.dt, fine.n)?;
    let model = AdditiveBaseline { d: 1 };
    let levels: Vec<usize> = (1..=5).map(|j| coarsest << (j - 1)).collect();
    let mut errs = vec![0.0; levels.len()];
    let mut rng = stream(sub_seed(seed, 5), 0);
    let mut done = 0;
    while done < opts.euler_paths {
        let (a, b) = sampler.sample_pair(&mut rng);
        for row in [a, b] {
            if done == opts.euler_paths {
                break;
            }
            let f = FbmPath::new(fine, params.hurst, vec![row])?;
            let exact = fou_exact(1.0, &f);
            for (k, &cells) in levels.iter().enumerate() {
                let fac = fine_n / cells;
                let cf = coarsen(&f, fac)?;
                let t = integrate(&model, &[1.0], &cf)?;
                errs[k] += (0..=cf.grid.n).map(|i| (t.states[i] - exact[i * fac]).abs()).fold(0.0, f64::max);
            }
            done += 1;
        }
    }
    let x: Vec<f64> = levels.iter().map(|&n| (1.0 / n as f64).ln()).collect();
    let y: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let s = ls_slope(&x, &y);
    Ok(item("euler_order", (0.8..=1.2).contains(&s), s, "in [0.8,1.2]", t0))
}

fn h1_checks() -> Vec<ValidationItem> {
    let t0 = Instant::now();
    let probe = Probe::ball(50.0, 2000);
    let mut worst = f64::NEG_INFINITY;
    let mut pass = true;
    for rho in [0.0, 1.0, 3.0] {
        let r = check_h1(&PlanarRotation { rho_rot: rho }, &probe);
        pass &= r.pass;
        worst = worst.max(r.max_violation);
    }
    for r in [check_h1(&ScalarSin, &probe), check_h1(&AdditiveBaseline { d: 2 }, &probe)] {
        pass &= r.pass;
        worst = worst.max(r.max_violation);
    }
    vec![item("h1_builtins", pass, worst, "<=0 up to 1e-12(1+beta0) round-off", t0)]
}

fn h2_checks() -> Vec<ValidationItem> {
    let t0 = Instant::now();
    let probe = Probe::ball(10.0, 500);
    let mut pass = true;
    let mut worst = 0.0f64;
    for r in [
        check_h2(&ScalarSin, &probe),
        check_h2(&PlanarRotation { rho_rot: 1.0 }, &probe),
        check_h2(&AdditiveBaseline { d: 2 }, &probe),
    ] {
        pass &= r.pass;
        worst = worst.max(r.max_integrability_err).max(r.max_inverse_err);
    }
    let builtins = item("h2_builtins", pass, worst, "<=1e-5", t0);
    let t0 = Instant::now();
    let r = check_h2(&non_integrable_example(), &Probe::ball(3.0, 200));
    let counter = item("h2_counterexample_rejected", !r.pass, r.max_integrability_err, "fails H2", t0);
    vec![builtins, counter]
}

/// Randomised `ρ` solves for `scalar_sin`: `|ρ|` stays under the
/// square-root envelope and dies out in time.
fn rho_bound(config: &ExperimentConfig, opts: &ValidateOpts, seed: u64) -> Result<ValidationItem> {
    let t0 = Instant::now();
    let mut cfg = config.coupling.clone();
    cfg.k = 1.0;
    let setup = CouplingSetup::new(model_by_name("scalar_sin", 1, 0.0)?, cfg)?;
    let dt = setup.dt();
    let n = setup.n1;
    let mut violations = 0usize;
    for i in 0..opts.rho_solves {
        let mut rng = stream(sub_seed(seed, 6), i as u64);
        let rho0 = rng.random_range(-3.0..3.0);
        let kappa2 = rng.random_range(1.0..8.0);
        let mut y: f64 = rng.random_range(-2.0..2.0);
        let path: Vec<Vec<f64>> = (0..=n)
            .map(|_| {
                let v = vec![y];
                y += 0.3 * rng.sample::<f64, _>(StandardNormal) * dt.sqrt();
                v
            })
            .collect();
        let o = RhoOpts { kappa1: setup.kappa1, kappa2, tol_mono: setup.config.tol_mono, max_refine: setup.config.max_refine };
        let s = match rho_ode_solve_localized(&[rho0], &path, &setup.loc, Anchor::First, dt, o) {
            Ok(s) => s,
            Err(_) => {
                violations += 1;
                continue;
            }
        };
        for (j, r) in s.rho.iter().enumerate() {
            let bound = (rho0.abs().sqrt() - kappa2 * j as f64 * dt / 2.0).max(0.0).powi(2);
            if r[0].abs() > bound + 1e-12 {
                violations += 1;
                break;
            }
        }
        let ext_bound = 2.0 * rho0.abs().sqrt() / kappa2 + 2.0 * dt;
        match s.extinction {
            Some(e) if e as f64 * dt > ext_bound + 1e-12 => violations += 1,
            None if ext_bound <= n as f64 * dt => violations += 1,
            _ => {}
        }
    }
    Ok(item("rho_bound", violations == 0, violations as f64, "==0", t0))
}

/// Mean of the Girsanov density over Wiener draws for four deterministic
/// drifts on one time unit; worst `|mean - 1| / se`.
fn girsanov_mean(opts: &ValidateOpts, seed: u64) -> ValidationItem {
    let t0 = Instant::now();
    let n = 32;
    let dt = 1.0 / n as f64;
    let drifts: [fn(f64) -> f64; 4] =
        [|_| 1.0, |t| (2.0 * std::f64::consts::PI * t).sin(), |t| 1.5 * t, |t| if t < 0.5 { 0.0 } else { -0.8 }];
    let mut worst = 0.0f64;
    for (k, f) in drifts.iter().enumerate() {
        let g = vec![(0..n).map(|i| f((i as f64 + 0.5) * dt)).collect::<Vec<_>>()];
        let mut rng = stream(sub_seed(seed, 7), k as u64);
        let d: Vec<f64> = (0..opts.girsanov_draws)
            .map(|_| {
                let dw = vec![(0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * dt.sqrt()).collect::<Vec<_>>()];
                girsanov_density(&g, &dw, dt).unwrap_or(f64::NAN)
            })
            .collect();
        let (m, se) = mean_se(&d);
        let z = (m - 1.0).abs() / se;
        worst = if z.is_nan() { f64::INFINITY } else { worst.max(z) };
    }
    item("girsanov_mean", worst <= 3.0, worst, "<=3 se", t0)
}

/// Marginal KS (Bonferroni over all cells), success rate inside
/// `[1-b, 1-b/2]` and the sure gap bound `|U₂-U₁| ≤ M_b`.
fn scalar_coupling_stats(opts: &ValidateOpts, seed: u64) -> Result<Vec<ValidationItem>> {
    let t0 = Instant::now();
    let cells: Vec<(f64, f64)> = [0.1, 0.5, 0.9]
        .iter()
        .flat_map(|&b| [0.0, 0.5 * b, -0.5 * b, b, -b].map(|a| (a, b)))
        .collect();
    let n_tests = 2 * cells.len();
    let mut min_p = 1.0f64;
    let mut worst_rate = f64::NEG_INFINITY;
    let mut gap_violations = 0usize;
    for (ci, &(a, b)) in cells.iter().enumerate() {
        let sc = ScalarCoupling::new(a, b)?;
        let mut rng = stream(sub_seed(seed, 8), ci as u64);
        let draws: Vec<_> = (0..opts.scalar_ks_draws).map(|_| sc.draw(&mut rng)).collect();
        let u1: Vec<f64> = draws.iter().map(|d| d.u1).collect();
        let u2: Vec<f64> = draws.iter().map(|d| d.u2).collect();
        min_p = min_p.min(ks_p(&u1)).min(ks_p(&u2));
        let n = draws.len() as f64;
        let p = draws.iter().filter(|d| d.success).count() as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt().max(1.0 / n);
        // distance outside the band in standard errors (negative inside)
        worst_rate = worst_rate.max(((1.0 - b) - p).max(p - (1.0 - 0.5 * b)) / se);
        let m = window_width(b);
        let mut rng = stream(sub_seed(seed, 9), ci as u64);
        gap_violations += (0..opts.scalar_gap_draws).filter(|_| {
            let d = sc.draw(&mut rng);
            (d.u2 - d.u1).abs() > m
        }).count();
    }
    let adj = (min_p * n_tests as f64).min(1.0);
    Ok(vec![
        item("scalar_coupling_ks", adj >= 0.01, adj, ">=0.01 (Bonferroni)", t0),
        item("scalar_coupling_rate", worst_rate <= 3.0, worst_rate, "<=3 se outside [1-b,1-b/2]", t0),
        item("scalar_coupling_gap", gap_violations == 0, gap_violations as f64, "==0", t0),
    ])
}

/// Step-1 marginal check on `scalar_sin` from `±1` with zero past:
/// per-cell KS of both innovation sequences and the coupled-branch count.
pub struct Step1Stats {
    pub adjusted_p: f64,
    pub coupled: usize,
    pub coupled_success: usize,
    pub swapped: usize,
    pub attempts: usize,
}

pub fn step1_marginals(config: &ExperimentConfig, attempts: usize, seed: u64) -> Result<Step1Stats> {
    let mut cfg = config.coupling.clone();
    cfg.k = 1.0;
    cfg.delta1 = 0.0;
    let setup = CouplingSetup::new(model_by_name("scalar_sin", 1, 0.0)?, cfg)?;
    let n = setup.n1;
    let sdt = setup.dt().sqrt();
    let mut w1 = vec![Vec::with_capacity(attempts); n];
    let mut w2 = vec![Vec::with_capacity(attempts); n];
    let (mut coupled, mut coupled_success, mut swapped) = (0, 0, 0);
    for i in 0..attempts {
        let mut rng = stream(sub_seed(seed, 10), i as u64);
        let mut st = CouplingState::new(&setup, &[1.0], &[-1.0], Past::Zero, &mut rng)?;
        let o = step1_attempt(&setup, &mut st, true, &mut rng)?;
        match o.branch {
            Branch::Coupled => {
                coupled += 1;
                coupled_success += o.success as usize;
            }
            Branch::Swapped => swapped += 1,
            _ => {}
        }
        for j in 0..n {
            w1[j].push(o.w1[0][j] / sdt);
            w2[j].push(o.w2[0][j] / sdt);
        }
    }
    let min_p = w1.iter().chain(&w2).map(|s| ks_p(s)).fold(1.0, f64::min);
    Ok(Step1Stats { adjusted_p: (min_p * 2.0 * n as f64).min(1.0), coupled, coupled_success, swapped, attempts })
}

fn step1_ks(config: &ExperimentConfig, opts: &ValidateOpts, seed: u64) -> Result<Vec<ValidationItem>> {
    let t0 = Instant::now();
    let s = step1_marginals(config, opts.step1_attempts, seed)?;
    let freq = s.coupled as f64 / s.attempts as f64;
    Ok(vec![
        item("step1_marginal_ks", s.adjusted_p >= 0.01, s.adjusted_p, ">=0.01 (Bonferroni)", t0),
        item("step1_coupled_frequency", s.coupled > 0, freq, ">0", t0),
    ])
}

/// Deviations of a run from the integer-step schedule: Step 1 lasts one time
/// unit, interval `ℓ` lasts `round(c2 2^ℓ / dt)` steps, each Step-3 wait lasts
/// `round(c3 ς^k 2^{βℓ*} / dt)` steps and trials are contiguous.
pub fn schedule_violations(setup: &CouplingSetup, run: &CouplingRun) -> usize {
    let cfg = &setup.config;
    let mut bad = 0;
    for t in &run.trials {
        bad += (t.step1_steps != setup.n1 as u64) as usize;
        let mut at = t.tau_prev_step + t.step1_steps;
        for (j, (&start, &len)) in t.interval_starts.iter().zip(&t.interval_steps).enumerate() {
            bad += (start != at) as usize;
            bad += (len != cfg.steps(cfg.c2 * 2f64.powi(j as i32 + 1))) as usize;
            at += len;
        }
        bad += (t.tau3_step != at) as usize;
        if let Some(ell) = t.ell_star {
            let want = setup.c3_eff * cfg.varsigma.powi(t.k as i32) * 2f64.powf(cfg.beta * ell as f64);
            bad += (t.wait_len != want) as usize;
            bad += (t.wait_steps != (want / cfg.dt).round() as u64) as usize;
        }
    }
    for w in run.trials.windows(2) {
        bad += (w[1].tau_prev_step != w[0].tau3_step + w[0].wait_steps) as usize;
    }
    bad
}

fn schedule_invariants(config: &ExperimentConfig, opts: &ValidateOpts) -> Result<ValidationItem> {
    let t0 = Instant::now();
    let (setup, _) = prepare_setup(config)?;
    let mut bad = 0;
    for r in 0..opts.schedule_runs as u64 {
        let run = run_coupling(&setup, &config.x1, &config.x2, config.t_max, &mut stream(config.seed, r))?;
        bad += schedule_violations(&setup, &run);
    }
    Ok(item("schedule_invariants", bad == 0, bad as f64, "==0", t0))
}

/// Runs every check in order. Numerical failures inside a check are errors;
/// statistical or oracle failures are reported as failing items.
pub fn validate_suite(config: &ExperimentConfig, opts: &ValidateOpts) -> Result<ValidationReport> {
    config.validate()?;
    let seed = config.seed;
    let mut items = vec![
        fgn_covariance(opts, seed)?,
        mvn_variance(config, opts, seed)?,
        r_operator_oracle()?,
        inversion_round_trip(config)?,
        euler_order(config, opts, seed)?,
    ];
    items.extend(h1_checks());
    items.extend(h2_checks());
    items.push(rho_bound(config, opts, seed)?);
    items.push(girsanov_mean(opts, seed));
    items.extend(scalar_coupling_stats(opts, seed)?);
    items.extend(step1_ks(config, opts, seed)?);
    items.push(schedule_invariants(config, opts)?);
    Ok(ValidationReport { items })
}
