use super::config::{CouplingConfig, Past};
use super::localize::{kappa1_estimate, kbar_estimate, local_radius, localize, Localized};
use crate::error::{Error, Result};
use crate::fractional_kernels::{mvn_kernel, Block, CausalKernel, DriftRecord, KernelParams, UniformGrid, WienerPath};
use crate::rng::stream;
use crate::sde_models::{contraction_estimate, integrate_chart, ModelSpec};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Everything derived once from a model and a [`CouplingConfig`].
#[derive(Clone, Debug)]
pub struct CouplingSetup {
    pub config: CouplingConfig,
    pub model: ModelSpec,
    pub params: KernelParams,
    pub kern: CausalKernel,
    pub loc: Localized,
    pub kbar: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub m_radius: f64,
    pub rho_hat: f64,
    /// `max{c3, 2 c2, log(δ₁/2)/log ρ̂}`.
    pub c3_eff: f64,
    pub ell_max: u32,
    /// Cells per unit time.
    pub n1: usize,
    pub lags: usize,
}

impl CouplingSetup {
    pub fn new(model: ModelSpec, config: CouplingConfig) -> Result<Self> {
        config.validate()?;
        let params = KernelParams::new(config.hurst, config.theta, config.t_hist)?;
        let kern = mvn_kernel(&params, config.dt);
        let kbar = kbar_estimate(&model, config.k, config.n_probe);
        let kappa2 = 4.0 * kbar.sqrt();
        let m_radius = config.m_radius.unwrap_or(2.0 * config.k);
        let a = local_radius(&model, m_radius, kbar, config.n_probe);
        let loc = localize(model.clone(), a);
        let kappa1 = kappa1_estimate(&loc, config.n_probe, config.kappa_safety).kappa1;
        let rho_hat = match config.rho_hat {
            Some(r) => r,
            None => contraction_estimate(model.as_ref(), &params, 20, &mut stream(0x5eed, 0))?.rho,
        };
        let mut c3_eff = config.c3.max(2.0 * config.c2);
        if config.delta1 > 0.0 {
            c3_eff = c3_eff.max((0.5 * config.delta1).ln() / rho_hat.ln());
        }
        let ell_max = config.ell_max();
        let n1 = config.cells_per_unit();
        let lags = params.lags(config.dt);
        Ok(Self { config, model, params, kern, loc, kbar, kappa1, kappa2, m_radius, rho_hat, c3_eff, ell_max, n1, lags })
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn dt(&self) -> f64 {
        self.config.dt
    }

    /// `Ψ = V^{(2θ-1)/4}`.
    pub fn psi(&self, x: &[f64]) -> f64 {
        self.model.lyapunov(x).powf((2.0 * self.config.theta - 1.0) / 4.0)
    }

    /// `τ₀ = inf{u ∈ ℕ : ρ̂^u (Ψ(x₁) + Ψ(x₂)) ≤ 1}`.
    pub fn tau0(&self, x1: &[f64], x2: &[f64]) -> u64 {
        let s = self.psi(x1) + self.psi(x2);
        if s <= 1.0 {
            return 0;
        }
        let mut u = (s.ln() / -self.rho_hat.ln()).ceil().max(0.0) as u64;
        while u > 0 && self.rho_hat.powi(u as i32 - 1) * s <= 1.0 {
            u -= 1;
        }
        while self.rho_hat.powi(u as i32) * s > 1.0 {
            u += 1;
        }
        u
    }

    pub fn tol_stick(&self, x: &[f64]) -> f64 {
        self.config.tol_stick * (1.0 + norm(x))
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Phase of the state machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    WaitTau0,
    Step1,
    Step2(u32),
    Step3,
    Coupled,
    Censored,
}

/// Both copies of the system together with their noise and drift histories.
///
/// All arrays live on one grid of step `dt` that starts `origin` cells before
/// time 0. `W²` is never stored: its increments are `ΔW¹ + g_w dt`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingState {
    pub phase: Phase,
    pub k: u32,
    pub tau_prev: f64,
    /// `τ_k^0, τ_k^1, …` of the current trial, as reached.
    pub clocks: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub w1: Vec<Vec<f64>>,
    /// Increments of `B¹` from time 0 on.
    pub b1: Vec<Vec<f64>>,
    pub drift: DriftRecord,
    pub origin: usize,
    pub dt: f64,
    pub coupled_since: Option<f64>,
}

pub(crate) fn fresh(d: usize, n: usize, dt: f64, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let s = dt.sqrt();
    (0..d).map(|_| (0..n).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()).collect()
}

/// Node-wise output of [`CouplingState::advance`].
#[derive(Clone, Debug)]
pub(crate) struct Segment {
    /// `|X¹ - X²|` at the nodes, starting with the initial one.
    pub dist: Vec<f64>,
}

impl CouplingState {
    pub fn new(setup: &CouplingSetup, x1: &[f64], x2: &[f64], past: Past, rng: &mut impl Rng) -> Result<Self> {
        let d = setup.dim();
        if x1.len() != d || x2.len() != d {
            return Err(Error::Invalid(format!("initial states must have dimension {d}")));
        }
        let dt = setup.dt();
        let origin = ((setup.config.t_hist + 1.0) / dt).ceil() as usize;
        let w1 = match past {
            Past::Zero => vec![vec![0.0; origin]; d],
            Past::Sampled => fresh(d, origin, dt, rng),
        };
        let grid = UniformGrid { t0: -(origin as f64) * dt, dt, n: origin };
        Ok(Self {
            phase: Phase::WaitTau0,
            k: 0,
            tau_prev: 0.0,
            clocks: Vec::new(),
            x1: x1.to_vec(),
            x2: x2.to_vec(),
            w1,
            b1: vec![Vec::new(); d],
            drift: DriftRecord::zeros(grid, d, setup.config.t_hist),
            origin,
            dt,
            coupled_since: None,
        })
    }

    /// Number of cells stored.
    pub fn len(&self) -> usize {
        self.w1[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Simulation steps since time 0.
    pub fn steps(&self) -> u64 {
        (self.len() - self.origin) as u64
    }

    pub fn time(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn index_of_step(&self, step: u64) -> usize {
        self.origin + step as usize
    }

    pub fn w2_increment(&self, c: usize, i: usize) -> f64 {
        self.w1[c][i] + self.drift.gw[c][i] * self.dt
    }

    /// `W¹` (`which = 1`) or `W²` on the cells `from..to`.
    pub fn wiener(&self, which: u8, from: usize, to: usize) -> WienerPath {
        let grid = UniformGrid { t0: (from as f64 - self.origin as f64) * self.dt, dt: self.dt, n: to - from };
        let inc = (0..self.w1.len())
            .map(|c| {
                (from..to)
                    .map(|i| if which == 1 { self.w1[c][i] } else { self.w2_increment(c, i) })
                    .collect()
            })
            .collect();
        WienerPath { grid, d: self.w1.len(), increments: inc }
    }

    /// Appends `n` cells with `W¹` increments `w1_seg` and drift `gw_seg`
    /// (zero if `None`), and integrates both systems across them.
    pub(crate) fn advance(
        &mut self,
        setup: &CouplingSetup,
        w1_seg: Vec<Vec<f64>>,
        gw_seg: Option<Vec<Vec<f64>>>,
    ) -> Result<Segment> {
        let d = setup.dim();
        let n = w1_seg[0].len();
        let old = self.len();
        if n == 0 {
            return Ok(Segment { dist: vec![norm_diff(&self.x1, &self.x2)] });
        }
        for c in 0..d {
            self.w1[c].extend_from_slice(&w1_seg[c]);
            match &gw_seg {
                Some(g) => self.drift.gw[c].extend_from_slice(&g[c]),
                None => self.drift.gw[c].resize(old + n, 0.0),
            }
        }
        self.drift.grid.n = old + n;
        let lo = old.saturating_sub(setup.lags);
        let mut db = Vec::with_capacity(d);
        let mut dgb = Vec::with_capacity(d);
        for c in 0..d {
            let gw = &self.drift.gw[c][lo..old + n];
            let (b, g) = if gw.iter().any(|&v| v != 0.0) {
                setup.kern.apply_pair(&self.w1[c][lo..old + n], Some(gw), old - lo)
            } else {
                (setup.kern.apply(&self.w1[c][lo..old + n], old - lo), vec![0.0; n])
            };
            self.drift.gb[c].extend_from_slice(&g);
            db.push(b);
            dgb.push(g);
        }
        let start = old.max(self.origin);
        for c in 0..d {
            self.b1[c].extend_from_slice(&db[c][start - old..]);
        }
        let grid = UniformGrid { t0: self.time() - n as f64 * self.dt, dt: self.dt, n };
        let t1 = integrate_chart(setup.model.as_ref(), &self.x1, grid, &db)?;
        let drifted = dgb.iter().any(|g| g.iter().any(|&v| v != 0.0));
        let t2 = if !drifted && self.x1 == self.x2 {
            t1.clone()
        } else {
            let inc: Vec<Vec<f64>> = db
                .iter()
                .zip(&dgb)
                .map(|(b, g)| b.iter().zip(g).map(|(b, g)| b + g * self.dt).collect())
                .collect();
            integrate_chart(setup.model.as_ref(), &self.x2, grid, &inc)?
        };
        let dist = (0..=n).map(|i| norm_diff(t1.state(i), t2.state(i))).collect();
        self.x1 = t1.last().to_vec();
        self.x2 = t2.last().to_vec();
        Ok(Segment { dist })
    }

    /// Past contributions to the window of `n` cells that starts now: the
    /// `B¹` increments generated by the stored `W¹`, and the `g_B` cell values
    /// generated by the stored `g_w`.
    pub(crate) fn past_contributions(&self, setup: &CouplingSetup, n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let now = self.len();
        let lo = now.saturating_sub(setup.lags);
        let mut pw = Vec::new();
        let mut pg = Vec::new();
        for c in 0..setup.dim() {
            let mut z = self.w1[c][lo..now].to_vec();
            z.resize(now - lo + n, 0.0);
            let mut g = self.drift.gw[c][lo..now].to_vec();
            if g.iter().any(|&v| v != 0.0) {
                g.resize(now - lo + n, 0.0);
                let (a, b) = setup.kern.apply_pair(&z, Some(&g), now - lo);
                pw.push(a);
                pg.push(b);
            } else {
                pw.push(setup.kern.apply(&z, now - lo));
                pg.push(vec![0.0; n]);
            }
        }
        (pw, pg)
    }

    pub fn has_drift(&self) -> bool {
        self.drift.gw.iter().any(|g| g.iter().any(|&v| v != 0.0))
    }

    /// The `g_w` history of coordinate `c` on cells `..end` as blocks in time
    /// relative to the end, merged geometrically: cells at distance `r` from the
    /// end are grouped `max(1, r/16)` at a time.
    pub fn history_blocks(&self, c: usize, end: usize) -> Vec<Block> {
        compress(&self.drift.gw[c][..end], self.dt)
    }
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn compress(g: &[f64], dt: f64) -> Vec<Block> {
    let end = g.len();
    let mut blocks = Vec::new();
    let mut j = end;
    while j > 0 {
        let width = ((end - j) / 16).max(1);
        let lo = j.saturating_sub(width);
        let cells = &g[lo..j];
        if cells.iter().any(|&v| v != 0.0) {
            let v = cells.iter().sum::<f64>() / cells.len() as f64;
            blocks.push(Block { a: (lo as f64 - end as f64) * dt, b: (j as f64 - end as f64) * dt, v });
        }
        j = lo;
    }
    blocks
}
