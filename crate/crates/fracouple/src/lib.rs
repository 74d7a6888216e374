//! Asymptotic coupling for SDEs driven by fractional Brownian motion with
//! Hurst parameter `H > 1/2` and multiplicative noise.
//!
//! * [`fractional_kernels`] — fractional noise, the Mandelbrot–Van Ness map, the
//!   `R_T` operator and the `g_w ↔ g_B` drift maps.
//! * [`sde_models`] — model registry, assumption checks and the Euler integrator.
//! * [`coupling_engine`] — the Step 1 / Step 2 / Step 3 coupling state machine.
//! * [`experiments`] — replica orchestration, survival curves, the validation suite.
//! * [`cli`] — configuration files, manifests and CSV emission.

pub mod cli;
pub mod coupling_engine;
pub mod error;
pub mod experiments;
pub mod fractional_kernels;
pub mod rng;
pub mod sde_models;

pub use error::{Error, Result};
