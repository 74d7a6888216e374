use super::girsanov::energy;
use super::rho::{rho_ode_solve_localized, Anchor, RhoOpts, RhoSolution};
use super::state::{fresh, norm, CouplingSetup, CouplingState, Segment};
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Coupled,
    Swapped,
    Diagonal,
    Skipped,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Coupled => "coupled",
            Branch::Swapped => "swapped",
            Branch::Diagonal => "diagonal",
            Branch::Skipped => "skipped",
        }
    }
}

/// The maps `φ` and `ψ = φ⁻¹` evaluated at one base innovation `w₁` on the
/// unit window that starts at the current time.
#[derive(Clone, Debug)]
pub struct Step1Construction {
    pub w1: Vec<Vec<f64>>,
    /// `φ(w₁) = w₁ + g_h dt` cellwise.
    pub g_h: Vec<Vec<f64>>,
    /// `g_B` on the window under `φ`.
    pub f: Vec<Vec<f64>>,
    pub rho: RhoSolution,
    /// `ψ(w₁) = w₁ - g̃ dt`; `None` if the inverse solve failed.
    pub g_tilde: Option<Vec<Vec<f64>>>,
    /// `log D_φ(φ(w₁)) = ∫g_h dw₁ + ½∫|g_h|²`.
    pub log_d_at_phi: f64,
    /// `log D_φ(w₁) = ∫g̃ dw₁ - ½∫|g̃|²`.
    pub log_d_at_w: f64,
    pub a1: f64,
    pub a2: f64,
    pub energy: f64,
    /// Both companions stayed in `B̄(0, a)`, where the localisation is inactive.
    pub local: bool,
}

struct Companion {
    path: Vec<Vec<f64>>,
    local: bool,
}

fn companion(setup: &CouplingSetup, x0: &[f64], db: &[Vec<f64>]) -> Result<Companion> {
    let d = setup.dim();
    let n = db[0].len();
    let loc = &setup.loc;
    let mut y = vec![0.0; d];
    loc.h(x0, &mut y);
    let mut path = Vec::with_capacity(n + 1);
    path.push(y.clone());
    let mut x = vec![0.0; d];
    let mut beta = vec![0.0; d];
    let mut local = norm(x0) <= loc.a;
    for i in 0..n {
        setup.model.h_inv(&y, &mut x)?;
        local &= norm(&x) <= loc.a;
        loc.chart_drift_at(&x, &mut beta);
        for c in 0..d {
            y[c] += beta[c] * setup.dt() + db[c][i];
        }
        path.push(y.clone());
    }
    setup.model.h_inv(&y, &mut x)?;
    local &= norm(&x) <= loc.a;
    Ok(Companion { path, local })
}

fn rho_opts(setup: &CouplingSetup) -> RhoOpts {
    RhoOpts {
        kappa1: setup.kappa1,
        kappa2: setup.kappa2,
        tol_mono: setup.config.tol_mono,
        max_refine: setup.config.max_refine,
    }
}

/// Builds `φ(w₁)` and `ψ(w₁)` for the current state.
///
/// Forward: the companion `y¹` is driven by `B^{w₁}`, `ρ` solves the
/// contracting ODE anchored at `y¹`, `g_B = f` realises `y² = y¹ + ρ`, and
/// `g_h` is the exact discrete preimage of `f` given the stored drift history.
/// Inverse: the companion `y²` is driven by `B^{w₁}` read as the noise of the
/// second system, `ρ̃` solves the same ODE anchored at `y²`, and `g̃` is the
/// preimage of `f̃`.
pub fn step1_construct(setup: &CouplingSetup, state: &CouplingState, w1: Vec<Vec<f64>>) -> Result<Step1Construction> {
    let d = setup.dim();
    let dt = setup.dt();
    let n = w1[0].len();
    let (pw, pg) = state.past_contributions(setup, n);
    let inner: Vec<Vec<f64>> = w1.iter().map(|w| setup.kern.apply(w, 0)).collect();
    let db1: Vec<Vec<f64>> = (0..d).map(|c| (0..n).map(|i| pw[c][i] + inner[c][i]).collect()).collect();
    let loc = &setup.loc;
    let mut h1 = vec![0.0; d];
    let mut h2 = vec![0.0; d];
    loc.h(&state.x1, &mut h1);
    loc.h(&state.x2, &mut h2);
    let rho0: Vec<f64> = (0..d).map(|c| h2[c] - h1[c]).collect();

    let y1 = companion(setup, &state.x1, &db1)?;
    let rho = rho_ode_solve_localized(&rho0, &y1.path, loc, Anchor::First, dt, rho_opts(setup))?;
    let preimage = |f: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..d)
            .map(|c| {
                let rhs: Vec<f64> = f[c].iter().zip(&pg[c]).map(|(a, b)| a - b).collect();
                setup.kern.solve(&rhs, &[])
            })
            .collect()
    };
    let f = rho.f_cells.clone();
    let g_h = preimage(&f);
    let e = energy(&g_h, dt);
    let cross: f64 = g_h.iter().zip(&w1).map(|(g, w)| g.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()).sum();
    let log_d_at_phi = cross + 0.5 * e;

    let db2: Vec<Vec<f64>> = (0..d).map(|c| (0..n).map(|i| db1[c][i] + pg[c][i] * dt).collect()).collect();
    let y2 = companion(setup, &state.x2, &db2)?;
    let (g_tilde, log_d_at_w) = match rho_ode_solve_localized(&rho0, &y2.path, loc, Anchor::Second, dt, rho_opts(setup)) {
        Ok(s) => {
            let gt = preimage(&s.f_cells);
            let et = energy(&gt, dt);
            let cr: f64 = gt.iter().zip(&w1).map(|(g, w)| g.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()).sum();
            (Some(gt), cr - 0.5 * et)
        }
        Err(Error::RhoNotMonotone { .. }) => (None, f64::NEG_INFINITY),
        Err(e) => return Err(e),
    };
    let a1 = (-log_d_at_phi).min(0.0).exp();
    let a2 = log_d_at_w.min(0.0).exp();
    Ok(Step1Construction {
        w1,
        g_h,
        f,
        rho,
        g_tilde,
        log_d_at_phi,
        log_d_at_w,
        a1,
        a2,
        energy: e,
        local: y1.local && y2.local,
    })
}

#[derive(Clone, Debug)]
pub struct Step1Outcome {
    pub attempted: bool,
    pub branch: Branch,
    pub success: bool,
    pub girsanov_l2: f64,
    pub a1: f64,
    pub a2: f64,
    /// First node of the window from which the two systems agree.
    pub merge_time: Option<f64>,
    /// Both companions stayed where the localisation is inactive.
    pub local: bool,
    /// The `ρ` solve failed and the diagonal branch was used instead.
    pub rho_fallback: bool,
    /// Innovations of `W¹` and `W²` on the window.
    pub w1: Vec<Vec<f64>>,
    pub w2: Vec<Vec<f64>>,
}

fn finish(setup: &CouplingSetup, state: &mut CouplingState, seg: &Segment, t0: f64) -> (bool, Option<f64>) {
    let tol = setup.tol_stick(&state.x1);
    let success = *seg.dist.last().unwrap() <= tol;
    if !success {
        return (false, None);
    }
    let mut j = seg.dist.len() - 1;
    while j > 0 && seg.dist[j - 1] <= tol {
        j -= 1;
    }
    state.x2 = state.x1.clone();
    (true, Some(t0 + j as f64 * setup.dt()))
}

/// One Step-1 window `[τ, τ+1]`. Inadmissible or thinned-out trials run both
/// systems on common noise; attempted trials sample one of the three branches
/// `(w₁, φ(w₁))`, `(w₁, ψ(w₁))`, `(w₁, w₁)` with probabilities `½a₁`, `½a₂`
/// and the remainder.
pub fn step1_attempt(
    setup: &CouplingSetup,
    state: &mut CouplingState,
    admissible: bool,
    rng: &mut impl Rng,
) -> Result<Step1Outcome> {
    let d = setup.dim();
    let n = setup.n1;
    let dt = setup.dt();
    let t0 = state.time();
    let attempted = admissible && rng.random::<f64>() < 1.0 - setup.config.delta1;
    let w1 = fresh(d, n, dt, rng);
    let mut out = Step1Outcome {
        attempted,
        branch: Branch::Skipped,
        success: false,
        girsanov_l2: 0.0,
        a1: 0.0,
        a2: 0.0,
        merge_time: None,
        local: false,
        rho_fallback: false,
        w1: w1.clone(),
        w2: w1.clone(),
    };
    let mut gw = None;
    if attempted {
        match step1_construct(setup, state, w1.clone()) {
            Ok(con) => {
                if con.energy > setup.config.c_bar {
                    return Err(Error::GirsanovBudget { energy: con.energy, budget: setup.config.c_bar });
                }
                out.girsanov_l2 = con.energy;
                out.a1 = con.a1;
                out.a2 = con.a2;
                out.local = con.local;
                let u: f64 = rng.random();
                if u < 0.5 * con.a1 {
                    out.branch = Branch::Coupled;
                    gw = Some(con.g_h);
                } else if u < 0.5 * (con.a1 + con.a2) {
                    out.branch = Branch::Swapped;
                    let gt = con.g_tilde.expect("a2 > 0 implies an inverse");
                    gw = Some(gt.iter().map(|g| g.iter().map(|v| -v).collect()).collect());
                } else {
                    out.branch = Branch::Diagonal;
                }
            }
            Err(Error::RhoNotMonotone { .. }) => {
                out.branch = Branch::Diagonal;
                out.rho_fallback = true;
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(g) = &gw {
        out.w2 = (0..d).map(|c| (0..n).map(|i| w1[c][i] + g[c][i] * dt).collect()).collect();
    }
    let seg = state.advance(setup, w1, gw)?;
    let (success, merge) = finish(setup, state, &seg, t0);
    out.success = success;
    out.merge_time = merge;
    Ok(out)
}

/// Runs the coupled branch unconditionally; returns the construction when the
/// two systems stick. Used to calibrate the Step-2 budget.
pub fn step1_coupled_pilot(
    setup: &CouplingSetup,
    state: &mut CouplingState,
    rng: &mut impl Rng,
) -> Result<Option<Step1Construction>> {
    let w1 = fresh(setup.dim(), setup.n1, setup.dt(), rng);
    let t0 = state.time();
    let con = match step1_construct(setup, state, w1.clone()) {
        Ok(c) => c,
        Err(Error::RhoNotMonotone { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let seg = state.advance(setup, w1, Some(con.g_h.clone()))?;
    let (success, _) = finish(setup, state, &seg, t0);
    Ok(if success { Some(con) } else { None })
}
