//! The three-step coupling: Step-1 Girsanov coupling, Step-2 dyadic shift
//! couplings along the continuation `g_S`, Step-3 waiting, and the
//! admissibility predicate that gates each attempt.

mod admissibility;
mod calibrate;
mod config;
mod girsanov;
mod localize;
mod rho;
mod rsum;
mod run;
mod scalar;
pub(crate) mod state;
mod step1;
mod step2;

pub use admissibility::{check_admissibility, memory_sup, t_grid, AdmissibilityReport};
pub use calibrate::{continuation_weight, measure_ck, CkEstimate, CK_SAFETY};
pub use config::{CouplingConfig, Past};
pub use girsanov::{energy, girsanov_density, girsanov_log_density, LOG_DENSITY_GUARD};
pub use localize::{kappa1_estimate, kbar_estimate, local_radius, localize, Kappa1, Localized};
pub use rho::{rho_ode_solve, rho_ode_solve_localized, Anchor, RhoOpts, RhoSolution};
pub use rsum::{interval_l2, weighted_integral, RSum, Weighted};
pub use run::{run_coupling, run_from, step3_wait, wait_duration, CouplingRun, TrialRecord, TRIAL_HEADER};
pub use scalar::{scalar_shift_coupling, window_width, ScalarCoupling, ScalarDraw};
pub use state::{CouplingSetup, CouplingState, Phase};
pub use step1::{step1_attempt, step1_construct, step1_coupled_pilot, Branch, Step1Construction, Step1Outcome};
pub use step2::{compute_gs, discrete_gs, step2_attempt, step2_lazy, Step2Outcome};
