//! Default numerical tolerances.

/// Hermiticity defect accepted for Hamiltonians and density matrices.
pub const HERMITIAN: f64 = 1e-9;
/// Accepted `|tr ρ - 1|`.
pub const TRACE: f64 = 1e-9;
/// Most negative eigenvalue accepted for a density matrix, and the threshold
/// that triggers eigenvalue clipping in the stochastic integrator.
pub const PSD: f64 = 1e-9;
/// Linear-identity checks on superoperators.
pub const LINEAR: f64 = 1e-10;
/// Entry magnitude below which an operator counts as diagonal.
pub const ASSUMPTION: f64 = 1e-10;
/// Row-sum tolerance for Markov generators.
pub const ROW_SUM: f64 = 1e-12;
/// Clipping tolerance for probability vectors read off a diagonal.
pub const PROBABILITY_CLIP: f64 = 1e-12;

/// Relative zero-eigenvalue threshold: `1e-9 (1 + |L2|)`.
pub fn zero_eigenvalue(norm: f64) -> f64 {
    1e-9 * (1.0 + norm)
}
