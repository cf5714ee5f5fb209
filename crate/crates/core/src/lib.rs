//! Three-scale quantum trajectories: GKSL superoperators, structural checks
//! and closed-form rates, homogenization, stochastic integration, the
//! limiting jump process, and path diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod homogenize;
pub mod jump;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod qnd;
pub mod sde;
pub mod serde_matrix;
pub mod superop;
pub mod tol;

pub use error::{Error, Result};
pub use homogenize::{
    compare_semigroups, homogenized_generator, kernel_projector, pseudo_inverse,
    HomogenizationResult,
};
pub use jump::{initial_distribution, marginal, simulate_jump, JumpPath};
pub use linalg::CMatrix;
pub use metrics::{PathFunction, PathValue};
pub use qnd::{
    check_identifiability, check_qnd, decoherence_rates, markov_from_pi_l_pi, tau_eigenvalues,
    transition_rates, AssumptionReport, MarkovGenerator, TauMatrix, ThreeScaleModel,
};
pub use sde::{
    simulate_ensemble, simulate_fig1_reduced, simulate_trajectory, EnsembleStats, NoiseIncrement,
    Trajectory,
};
pub use superop::{lindblad_from_gksl, DensityMatrix, GkslSpec, SuperOperator};
