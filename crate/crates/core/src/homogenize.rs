//! Homogenization of `L0 + γ L1 + γ² L2` as `γ → ∞`.
//!
//! With `P` the spectral projector of `L2` onto its kernel (along its range)
//! and `L2⁻` the pseudo-inverse of `L2` (zero on the kernel), the limiting
//! semigroup is `P e^{t L∞} P` with
//!
//! ```text
//! L∞ = P L0 P - P L1 L2⁻ L1 P.
//! ```
//!
//! All spectral work is done per irreducible block of `L2`. For models
//! satisfying the QND assumption `L2` is diagonal in the `E_{i,j}` basis and
//! every block is a scalar, which keeps `P` exactly equal to the orthogonal
//! projector onto diagonal matrices.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE};
use crate::qnd::MarkovGenerator;
use crate::superop::SuperOperator;
use crate::tol;

/// Largest acceptable condition number for the biorthogonal Gram matrix and
/// for the restricted generator.
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct HomogenizationResult {
    pub projector: SuperOperator,
    pub pseudo_inverse: SuperOperator,
    pub l_infinity: SuperOperator,
    /// `-max Re λ` over the nonzero eigenvalues of `L2`; infinite if `L2 = 0`.
    pub spectral_gap: f64,
    pub kernel_dim: usize,
}

/// Norms of the defining identities of a [`HomogenizationResult`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    pub idempotence: f64,
    pub projector_kills_l2_left: f64,
    pub projector_kills_l2_right: f64,
    pub pseudo_inverse_kills_kernel: f64,
    pub inverse_on_range: f64,
    pub centering: f64,
    pub trace_defect: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [
            self.idempotence,
            self.projector_kills_l2_left,
            self.projector_kills_l2_right,
            self.pseudo_inverse_kills_kernel,
            self.inverse_on_range,
            self.centering,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl HomogenizationResult {
    /// Evaluates every operator identity, as max-entry norms.
    pub fn residuals(&self, l1: &SuperOperator, l2: &SuperOperator) -> Residuals {
        let p = &self.projector;
        let s = &self.pseudo_inverse;
        let id = SuperOperator::identity(p.dim());
        let n = |op: SuperOperator| linalg::max_abs(op.matrix());
        let complement = &id - p;
        Residuals {
            idempotence: n(&(p * p) - p),
            projector_kills_l2_left: n(p * l2),
            projector_kills_l2_right: n(l2 * p),
            pseudo_inverse_kills_kernel: n(s * p).max(n(p * s)),
            inverse_on_range: n(&(l2 * s) - &complement).max(n(&(s * l2) - &complement)),
            centering: n(&(p * l1) * p),
            trace_defect: self.l_infinity.trace_defect(),
        }
    }
}

/// Spectral data of the fast generator.
#[derive(Debug, Clone)]
pub struct KernelData {
    pub projector: SuperOperator,
    pub spectral_gap: f64,
    pub kernel_dim: usize,
}

/// Default zero-eigenvalue threshold for `l2`.
pub fn default_tol_zero(l2: &SuperOperator) -> f64 {
    tol::zero_eigenvalue(l2.frobenius_norm())
}

/// Projector onto `Ker L2` parallel to `Im L2`, built from biorthogonal bases
/// of `Ker L2` and `Ker L2^*`.
pub fn kernel_projector(l2: &SuperOperator, tol_zero: f64) -> Result<SuperOperator> {
    kernel_data(l2, tol_zero).map(|k| k.projector)
}

pub fn kernel_data(l2: &SuperOperator, tol_zero: f64) -> Result<KernelData> {
    let (p, spectral_gap, kernel_dim) = spectral_projector(l2.matrix(), tol_zero)?;
    Ok(KernelData {
        projector: SuperOperator::from_matrix_unchecked(l2.dim(), p),
        spectral_gap,
        kernel_dim,
    })
}

/// Kernel projector of an arbitrary square matrix, with the spectral gap and
/// the kernel dimension.
pub fn spectral_projector(a: &CMatrix, tol_zero: f64) -> Result<(CMatrix, f64, usize)> {
    let n = a.nrows();
    let mut p = CMatrix::zeros(n, n);
    let mut gap = f64::INFINITY;
    let mut kernel_dim = 0;

    for idx in linalg::components(a) {
        let block = linalg::extract_block(a, &idx);
        let eig = if idx.len() == 1 {
            vec![block[(0, 0)]]
        } else {
            linalg::eigenvalues(&block)
        };
        let mut algebraic = 0;
        for lambda in &eig {
            if lambda.norm() <= tol_zero {
                algebraic += 1;
            } else if lambda.re.abs() <= tol_zero {
                return Err(Error::PurelyImaginaryEigenvalue {
                    re: lambda.re,
                    im: lambda.im,
                });
            } else {
                gap = gap.min(-lambda.re);
            }
        }
        if algebraic == 0 {
            continue;
        }
        let block_p = if idx.len() == 1 {
            CMatrix::from_element(1, 1, ONE)
        } else {
            biorthogonal_projector(&block, tol_zero, algebraic)?
        };
        kernel_dim += algebraic;
        linalg::scatter_block(&mut p, &idx, &block_p);
    }

    let leak = linalg::max_abs(&(&p * a));
    if leak > tol_zero.max(tol::LINEAR) {
        return Err(Error::JordanBlock {
            algebraic: kernel_dim,
            geometric: kernel_dim,
        });
    }
    Ok((p, gap, kernel_dim))
}

fn biorthogonal_projector(block: &CMatrix, tol_zero: f64, algebraic: usize) -> Result<CMatrix> {
    let svd = block.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let null: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= tol_zero)
        .map(|(i, _)| i)
        .collect();
    if null.len() != algebraic {
        return Err(Error::JordanBlock {
            algebraic,
            geometric: null.len(),
        });
    }
    let n = block.nrows();
    let k = null.len();
    // Right kernel: conjugated rows of Vᵀ; left kernel (kernel of the adjoint): columns of U.
    let right = CMatrix::from_fn(n, k, |r, c| v_t[(null[c], r)].conj());
    let left = CMatrix::from_fn(n, k, |r, c| u[(r, null[c])]);
    let gram = left.adjoint() * &right;
    let sv = gram.singular_values();
    let (smax, smin) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if condition > MAX_CONDITION {
        return Err(Error::Degeneracy { condition });
    }
    let gram_inv = gram.try_inverse().ok_or(Error::Degeneracy { condition })?;
    Ok(right * gram_inv * left.adjoint())
}

/// Inverse of `L2` on `Ker P`, zero on `Im P`.
///
/// Solves against the nonsingular block `(Id - P) L2 (Id - P) + P`, whose
/// inverse is `L2⁻ + P`.
pub fn pseudo_inverse(l2: &SuperOperator, p: &SuperOperator) -> Result<SuperOperator> {
    if l2.dim() != p.dim() {
        return Err(Error::dim("pseudo_inverse projector", l2.dim(), p.dim()));
    }
    restricted_inverse(l2.matrix(), p.matrix())
        .map(|s| SuperOperator::from_matrix_unchecked(l2.dim(), s))
}

/// Matrix form of [`pseudo_inverse`] for an arbitrary square `a` with kernel
/// projector `p`.
pub fn restricted_inverse(a: &CMatrix, p: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if p.nrows() != n || p.ncols() != n || a.ncols() != n {
        return Err(Error::dim("restricted_inverse projector", n, p.nrows()));
    }
    let complement = CMatrix::identity(n, n) - p;
    let m = &complement * a * &complement + p;
    let mut inv = CMatrix::zeros(n, n);
    for idx in linalg::components(&m) {
        let block = linalg::extract_block(&m, &idx);
        let block_inv = block.clone().try_inverse().ok_or(Error::Conditioning {
            condition: f64::INFINITY,
        })?;
        let condition = linalg::norm1(&block) * linalg::norm1(&block_inv);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::Conditioning { condition });
        }
        linalg::scatter_block(&mut inv, &idx, &block_inv);
    }
    Ok(inv * complement)
}

/// `|P L1 P| <= tol` (Frobenius norm).
pub fn check_centering(l1: &SuperOperator, p: &SuperOperator, tol: f64) -> bool {
    centering_defect(l1, p) <= tol
}

pub fn centering_defect(l1: &SuperOperator, p: &SuperOperator) -> f64 {
    (&(p * l1) * p).frobenius_norm()
}

/// `L∞ = P L0 P - P L1 L2⁻ L1 P` together with `P`, `L2⁻` and spectral data.
pub fn homogenized_generator(
    l0: &SuperOperator,
    l1: &SuperOperator,
    l2: &SuperOperator,
) -> Result<HomogenizationResult> {
    for (name, op) in [("L1", l1), ("L2", l2)] {
        if op.dim() != l0.dim() {
            return Err(Error::dim(name, l0.dim(), op.dim()));
        }
    }
    let kernel = kernel_data(l2, default_tol_zero(l2))?;
    let p = &kernel.projector;
    let centering_tol = 1e-9 * (1.0 + l1.frobenius_norm());
    let defect = centering_defect(l1, p);
    if defect > centering_tol {
        return Err(Error::Centering {
            norm: defect,
            tol: centering_tol,
        });
    }
    let s = pseudo_inverse(l2, p)?;
    let slow = &(p * l0) * p;
    let induced = &(&(&(p * l1) * &s) * l1) * p;
    let l_infinity = &slow - &induced;
    Ok(HomogenizationResult {
        projector: kernel.projector,
        pseudo_inverse: s,
        l_infinity,
        spectral_gap: kernel.spectral_gap,
        kernel_dim: kernel.kernel_dim,
    })
}

/// Operator-norm distance `|e^{t L_γ} - P e^{t L∞} P|` for each `γ`.
pub fn compare_semigroups(
    l0: &SuperOperator,
    l1: &SuperOperator,
    l2: &SuperOperator,
    gammas: &[f64],
    t: f64,
) -> Result<Vec<(f64, f64)>> {
    let result = homogenized_generator(l0, l1, l2)?;
    let p = &result.projector;
    let limit = &(p * &result.l_infinity.expm(t)?) * p;
    gammas
        .iter()
        .map(|&g| {
            let lg = &(l0 + &l1.scale(g)) + &l2.scale(g * g);
            let diff = &lg.expm(t)? - &limit;
            Ok((g, diff.norm()))
        })
        .collect()
}

/// `Π e^{t T*} Π`: the jump-process semigroup acting on diagonal matrices.
pub fn jump_semigroup(rates: &MarkovGenerator, t: f64) -> Result<SuperOperator> {
    let pi = SuperOperator::diagonal_projector(rates.dim());
    Ok(&(&pi * &rates.dual_embedding().expm(t)?) * &pi)
}

/// Entries `(L∞(E_{i,i}))_{j,j}`, i.e. the rate matrix `L∞` induces on
/// pointer states.
pub fn restricted_rates(l_infinity: &SuperOperator) -> nalgebra::DMatrix<f64> {
    let d = l_infinity.dim();
    let m = l_infinity.matrix();
    nalgebra::DMatrix::from_fn(d, d, |i, j| m[(j + j * d, i + i * d)].re)
}

/// Apply a superoperator to `diag(x)` and read off the diagonal.
pub fn apply_to_diagonal(op: &SuperOperator, x: &[f64]) -> Result<Vec<f64>> {
    let d = op.dim();
    if x.len() != d {
        return Err(Error::dim("diagonal vector", d, x.len()));
    }
    let m = CMatrix::from_diagonal(&DVector::from_iterator(
        d,
        x.iter().map(|&v| Complex64::new(v, 0.0)),
    ));
    let out = op.apply(&m)?;
    Ok((0..d).map(|i| out[(i, i)].re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::qnd::transition_rates;

    fn real(n: usize, rows: &[f64]) -> CMatrix {
        CMatrix::from_row_iterator(n, n, rows.iter().map(|&x| Complex64::new(x, 0.0)))
    }

    fn close(a: &SuperOperator, b: &CMatrix, tol: f64) -> bool {
        linalg::max_abs(&(a.matrix() - b)) <= tol
    }

    #[test]
    fn two_by_two_projector_and_pseudo_inverse() {
        let a = real(2, &[0.0, 1.0, 0.0, -1.0]);
        let (p, gap, k) = spectral_projector(&a, 1e-9).unwrap();
        assert_eq!((gap, k), (1.0, 1));
        assert!(linalg::max_abs(&(&p - real(2, &[1.0, 1.0, 0.0, 0.0]))) < 1e-12);
        assert!(linalg::max_abs(&(linalg::expm(&(&a * Complex64::new(40.0, 0.0))) - &p)) < 1e-12);

        let s = restricted_inverse(&a, &p).unwrap();
        let v = nalgebra::DVector::from_vec(vec![ONE, -ONE]);
        assert!((&s * &v + &v).norm() < 1e-12);
        let kernel = nalgebra::DVector::from_vec(vec![ONE, Complex64::new(0.0, 0.0)]);
        assert!((&s * kernel).norm() < 1e-12);
    }

    #[test]
    fn diagonal_pseudo_inverse_is_reciprocal() {
        let a = real(2, &[0.0, 0.0, 0.0, -2.0]);
        let (p, _, _) = spectral_projector(&a, 1e-9).unwrap();
        let s = restricted_inverse(&a, &p).unwrap();
        assert!(linalg::max_abs(&(s - real(2, &[0.0, 0.0, 0.0, -0.5]))) < 1e-15);
    }

    #[test]
    fn zero_generator_has_full_kernel() {
        let l2 = SuperOperator::zero(1);
        let p = kernel_projector(&l2, default_tol_zero(&l2)).unwrap();
        assert!(close(&p, &CMatrix::identity(1, 1), 0.0));
        let l2 = SuperOperator::zero(2);
        let p = kernel_projector(&l2, default_tol_zero(&l2)).unwrap();
        assert!(close(&p, &CMatrix::identity(4, 4), 0.0));
        assert!(close(
            &pseudo_inverse(&l2, &p).unwrap(),
            &CMatrix::zeros(4, 4),
            0.0
        ));
    }

    #[test]
    fn fig1_projector_is_exactly_the_diagonal_projector() {
        let [_, _, l2] = models::fig1(1.0).generators();
        let p = kernel_projector(&l2, default_tol_zero(&l2)).unwrap();
        assert_eq!(p, SuperOperator::diagonal_projector(3));
    }

    #[test]
    fn spectral_failures_are_reported() {
        let rotation = real(2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(
            spectral_projector(&rotation, 1e-9),
            Err(Error::PurelyImaginaryEigenvalue { .. })
        ));
        let jordan = real(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            spectral_projector(&jordan, 1e-9),
            Err(Error::JordanBlock { .. })
        ));
    }

    #[test]
    fn centering_examples() {
        let p = SuperOperator::diagonal_projector(2);
        assert!(!check_centering(&SuperOperator::identity(2), &p, 1e-10));
        assert!(check_centering(&SuperOperator::zero(2), &p, 1e-10));
        let [_, l1, _] = models::rabi(1.0).generators();
        assert!(check_centering(&l1, &p, 1e-10));
    }

    #[test]
    fn slow_only_model_keeps_compressed_generator() {
        let m = models::fig1(1.0);
        let [l0, _, l2] = m.generators();
        let r = homogenized_generator(&l0, &SuperOperator::zero(3), &l2).unwrap();
        let expected = &(&r.projector * &l0) * &r.projector;
        assert!(close(&r.l_infinity, expected.matrix(), 0.0));
    }

    #[test]
    fn homogenized_rates_match_closed_form() {
        for model in [models::fig1(1.0), models::rabi(1.0)] {
            let [l0, l1, l2] = model.generators();
            let r = homogenized_generator(&l0, &l1, &l2).unwrap();
            let q = restricted_rates(&r.l_infinity);
            let t = transition_rates(&model).unwrap();
            for i in 0..model.dim() {
                for j in 0..model.dim() {
                    assert!((q[(i, j)] - t.rate(i, j)).abs() < 1e-12, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn pure_fast_decay_comparison() {
        let [_, _, l2] = models::fig1(1.0).generators();
        let z = SuperOperator::zero(3);
        let errs = compare_semigroups(&z, &z, &l2, &[0.5, 1.0], 1.0).unwrap();
        // Slowest nonzero rate of L2 is 1/2, so the error is e^{-γ²/2}.
        for (g, e) in errs {
            assert!((e - (-g * g / 2.0f64).exp()).abs() < 1e-12, "γ = {g}");
        }
    }
}
