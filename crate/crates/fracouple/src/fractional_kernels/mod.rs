//! Fractional noise generation and the fractional operators used by the
//! coupling construction.

mod conv;
mod csv;
mod fgn;
mod grid;
mod holder;
mod inversion;
mod memory;
mod mvn;
pub mod quad;
mod roperator;

pub use conv::CausalKernel;
pub use csv::{read_path_csv, write_path_csv};
pub use fgn::{fgn_autocov, sample_fgn, FgnSampler};
pub use grid::{alpha_h, alpha_h_by_quadrature, check_hurst, DriftRecord, FbmPath, KernelParams, UniformGrid, WienerPath};
pub use holder::{holder_norm, phi_functional};
pub use inversion::{continuation, continuation_constant, fit_continuation_constant, gb_to_gw, gw_to_gb};
pub use memory::{memory_decomposition, MemoryParts};
pub use mvn::{mvn_coefficients, mvn_kernel, mvn_map, second_difference, truncation_deficit};
pub use roperator::{blocks_of, r_operator, Block, ROperator};
