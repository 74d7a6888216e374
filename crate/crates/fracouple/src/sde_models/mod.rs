//! SDE models `dX = b(X) dt + σ(X) dB`, assumption validators and the Euler
//! integrator.

mod builtin;
mod checks;
mod contraction;
mod diagnostics;
mod integrate;
mod model;

pub use builtin::{model_by_name, non_integrable_example, AdditiveBaseline, PlanarRotation, ScalarSin, MODEL_NAMES};
pub use checks::{check_h1, check_h2, check_sublinear, H1Report, H2Report, Probe, TOL_FD, TOL_H2};
pub use contraction::{contraction_estimate, contraction_estimate_with, ContractionOpts, ContractionReport};
pub use diagnostics::{fit_path_bound_constant, path_bound_check, PathBoundDiagnostic, PathBoundInputs};
pub use integrate::{integrate, integrate_chart, Trajectory};
pub use model::{chart_drift_at, CustomModel, ModelSpec, SdeModel};

use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Named models. Registration rejects drifts with superlinear growth.
#[derive(Debug, Default)]
pub struct Registry {
    models: BTreeMap<String, ModelSpec>,
}

impl Registry {
    pub fn with_builtins(d: usize, rho_rot: f64) -> Self {
        let mut r = Self::default();
        for name in MODEL_NAMES {
            r.models.insert(name.into(), model_by_name(name, d, rho_rot).expect("builtin"));
        }
        r
    }

    pub fn register(&mut self, model: ModelSpec) -> Result<()> {
        if !check_sublinear(model.as_ref()) {
            return Err(Error::Invalid(format!("model '{}' has superlinear drift", model.name())));
        }
        self.models.insert(model.name().to_string(), model);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<ModelSpec> {
        self.models.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(|s| s.as_str())
    }
}
