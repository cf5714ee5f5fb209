//! Complex matrices, density matrices, GKSL data and superoperators.
//!
//! A [`SuperOperator`] on `M_d(C)` is stored as its `d² × d²` matrix in the
//! column-stacking convention: the basis element `E_{i,j} = e_i e_j^*` sits
//! at index `i + j d`, so that `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, I, ONE};
use crate::serde_matrix;
use crate::tol;

/// Hamiltonian plus Kraus operators with their measurement efficiencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GkslSpecRaw", into = "GkslSpecRaw")]
pub struct GkslSpec {
    dim: usize,
    hamiltonian: CMatrix,
    kraus: Vec<CMatrix>,
    efficiencies: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GkslSpecRaw {
    dim: usize,
    #[serde(with = "serde_matrix")]
    hamiltonian: CMatrix,
    #[serde(with = "serde_matrix::list", default)]
    kraus: Vec<CMatrix>,
    #[serde(default)]
    efficiencies: Vec<f64>,
}

impl TryFrom<GkslSpecRaw> for GkslSpec {
    type Error = Error;

    fn try_from(raw: GkslSpecRaw) -> Result<Self> {
        let spec = GkslSpec::new(raw.hamiltonian, raw.kraus, raw.efficiencies)?;
        if spec.dim != raw.dim {
            return Err(Error::dim("GkslSpec.dim", raw.dim, spec.dim));
        }
        Ok(spec)
    }
}

impl From<GkslSpec> for GkslSpecRaw {
    fn from(s: GkslSpec) -> Self {
        GkslSpecRaw {
            dim: s.dim,
            hamiltonian: s.hamiltonian,
            kraus: s.kraus,
            efficiencies: s.efficiencies,
        }
    }
}

impl GkslSpec {
    pub fn new(hamiltonian: CMatrix, kraus: Vec<CMatrix>, efficiencies: Vec<f64>) -> Result<Self> {
        let d = hamiltonian.nrows();
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if hamiltonian.ncols() != d {
            return Err(Error::dim("hamiltonian columns", d, hamiltonian.ncols()));
        }
        if !linalg::is_finite(&hamiltonian) {
            return Err(Error::InvalidInput(
                "hamiltonian has non-finite entries".into(),
            ));
        }
        let defect = linalg::hermitian_defect(&hamiltonian);
        if defect > tol::HERMITIAN {
            return Err(Error::InvalidInput(format!(
                "hamiltonian is not Hermitian (defect {defect:e})"
            )));
        }
        if kraus.len() != efficiencies.len() {
            return Err(Error::dim("efficiencies", kraus.len(), efficiencies.len()));
        }
        for (k, l) in kraus.iter().enumerate() {
            if l.nrows() != d || l.ncols() != d {
                return Err(Error::dim(
                    format!("kraus[{k}]"),
                    d,
                    l.nrows().max(l.ncols()),
                ));
            }
            if !linalg::is_finite(l) {
                return Err(Error::InvalidInput(format!(
                    "kraus[{k}] has non-finite entries"
                )));
            }
        }
        if let Some(eta) = efficiencies.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::InvalidInput(format!(
                "efficiency {eta} outside [0, 1]"
            )));
        }
        Ok(GkslSpec {
            dim: d,
            hamiltonian,
            kraus,
            efficiencies,
        })
    }

    /// Zero Hamiltonian, no Kraus operators.
    pub fn empty(d: usize) -> Self {
        GkslSpec {
            dim: d,
            hamiltonian: CMatrix::zeros(d, d),
            kraus: Vec::new(),
            efficiencies: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn efficiencies(&self) -> &[f64] {
        &self.efficiencies
    }

    /// Iterates `(L_k, η(k))`.
    pub fn channels(&self) -> impl Iterator<Item = (&CMatrix, f64)> {
        self.kraus.iter().zip(self.efficiencies.iter().copied())
    }
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let d = m.nrows();
        if d == 0 || m.ncols() != d {
            return Err(Error::dim("density matrix columns", d, m.ncols()));
        }
        if !linalg::is_finite(&m) {
            return Err(Error::InvalidInput(
                "density matrix has non-finite entries".into(),
            ));
        }
        let defect = linalg::hermitian_defect(&m);
        if defect > tol::HERMITIAN {
            return Err(Error::InvalidInput(format!(
                "density matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let tr = linalg::trace(&m);
        if (tr - ONE).norm() > tol::TRACE {
            return Err(Error::InvalidInput(format!(
                "density matrix trace {tr} != 1"
            )));
        }
        let lowest = linalg::hermitian_eigenvalues(&m)[0];
        if lowest < -tol::PSD {
            return Err(Error::InvalidInput(format!(
                "density matrix has negative eigenvalue {lowest:e}"
            )));
        }
        Ok(DensityMatrix(m))
    }

    /// Skips validation; callers guarantee the invariants.
    pub fn new_unchecked(m: CMatrix) -> Self {
        DensityMatrix(m)
    }

    /// Pointer state `E_{i,i}` (0-based).
    pub fn pointer(d: usize, i: usize) -> Self {
        DensityMatrix(linalg::elementary(d, i, i))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix(CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0))
    }

    /// `|ψ⟩⟨ψ|` with `ψ = (1, …, 1)/√d`.
    pub fn maximally_coherent(d: usize) -> Self {
        DensityMatrix(CMatrix::from_element(
            d,
            d,
            Complex64::new(1.0 / d as f64, 0.0),
        ))
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let d = populations.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, &p) in populations.iter().enumerate() {
            m[(i, i)] = Complex64::new(p, 0.0);
        }
        DensityMatrix::new(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Real parts of the diagonal.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_matrix::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = serde_matrix::deserialize(d)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Linear map on `M_d(C)` as a `d² × d²` matrix (column-stacking convention).
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    matrix: CMatrix,
}

impl SuperOperator {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        let n = dim * dim;
        if dim == 0 || matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::dim("superoperator matrix", n, matrix.nrows()));
        }
        if !linalg::is_finite(&matrix) {
            return Err(Error::InvalidInput(
                "superoperator has non-finite entries".into(),
            ));
        }
        Ok(SuperOperator { dim, matrix })
    }

    pub(crate) fn from_matrix_unchecked(dim: usize, matrix: CMatrix) -> Self {
        SuperOperator { dim, matrix }
    }

    pub fn identity(dim: usize) -> Self {
        SuperOperator {
            dim,
            matrix: CMatrix::identity(dim * dim, dim * dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        SuperOperator {
            dim,
            matrix: CMatrix::zeros(dim * dim, dim * dim),
        }
    }

    /// Tabulates a linear map by evaluating it on the basis `E_{i,j}`.
    pub fn from_map<F: Fn(&CMatrix) -> CMatrix>(dim: usize, f: F) -> Self {
        let n = dim * dim;
        let mut matrix = CMatrix::zeros(n, n);
        for j in 0..dim {
            for i in 0..dim {
                let image = f(&linalg::elementary(dim, i, j));
                matrix.set_column(i + j * dim, &linalg::vectorize(&image));
            }
        }
        SuperOperator { dim, matrix }
    }

    /// `X ↦ A X B`.
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d || b.nrows() != d || b.ncols() != d {
            return Err(Error::dim("sandwich factors", d, b.nrows()));
        }
        Ok(SuperOperator {
            dim: d,
            matrix: linalg::kron(&b.transpose(), a),
        })
    }

    /// Orthogonal projector onto diagonal matrices.
    pub fn diagonal_projector(dim: usize) -> Self {
        let n = dim * dim;
        let mut matrix = CMatrix::zeros(n, n);
        for i in 0..dim {
            matrix[(i + i * dim, i + i * dim)] = ONE;
        }
        SuperOperator { dim, matrix }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::dim("apply operand", self.dim, x.nrows()));
        }
        let v = &self.matrix * linalg::vectorize(x);
        Ok(linalg::unvectorize(&v, self.dim))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SuperOperator) -> Result<SuperOperator> {
        self.same_dim(other, "compose")?;
        Ok(SuperOperator {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Adjoint for the Hilbert–Schmidt product `⟨A, B⟩ = tr(A^* B)`.
    pub fn hs_adjoint(&self) -> SuperOperator {
        SuperOperator {
            dim: self.dim,
            matrix: self.matrix.adjoint(),
        }
    }

    /// True iff `|tr(op(E_{i,j}))| <= tol` on every basis element.
    pub fn check_trace_preserving(&self, tol: f64) -> bool {
        self.trace_defect() <= tol
    }

    /// `sup_{i,j} |tr(op(E_{i,j}))|`.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        (0..d * d)
            .map(|col| {
                (0..d)
                    .map(|m| self.matrix[(m + m * d, col)])
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// `e^{t·op}`.
    pub fn expm(&self, t: f64) -> Result<SuperOperator> {
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite time {t}")));
        }
        let scaled = &self.matrix * Complex64::new(t, 0.0);
        Ok(SuperOperator {
            dim: self.dim,
            matrix: linalg::expm(&scaled),
        })
    }

    /// Operator norm induced by the Hilbert–Schmidt norm.
    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.matrix)
    }

    /// Frobenius norm of the `d² × d²` matrix.
    pub fn frobenius_norm(&self) -> f64 {
        linalg::hs_norm(&self.matrix)
    }

    pub fn scale(&self, s: f64) -> SuperOperator {
        SuperOperator {
            dim: self.dim,
            matrix: &self.matrix * Complex64::new(s, 0.0),
        }
    }

    fn same_dim(&self, other: &SuperOperator, ctx: &str) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::dim(ctx, self.dim, other.dim));
        }
        Ok(())
    }
}

impl Add for &SuperOperator {
    type Output = SuperOperator;

    fn add(self, rhs: &SuperOperator) -> SuperOperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimension mismatch");
        SuperOperator {
            dim: self.dim,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &SuperOperator {
    type Output = SuperOperator;

    fn sub(self, rhs: &SuperOperator) -> SuperOperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimension mismatch");
        SuperOperator {
            dim: self.dim,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &SuperOperator {
    type Output = SuperOperator;

    fn mul(self, rhs: &SuperOperator) -> SuperOperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimension mismatch");
        SuperOperator {
            dim: self.dim,
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

impl Serialize for SuperOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            dim: usize,
            #[serde(with = "serde_matrix")]
            matrix: &'a CMatrix,
        }
        Repr {
            dim: self.dim,
            matrix: &self.matrix,
        }
        .serialize(s)
    }
}

/// GKSL generator `X ↦ -i[H,X] + Σ_k (L_k X L_k^* - ½{L_k^* L_k, X})`.
///
/// Efficiencies do not enter the generator.
pub fn lindblad_from_gksl(spec: &GkslSpec) -> SuperOperator {
    let d = spec.dim();
    let id = CMatrix::identity(d, d);
    let h = spec.hamiltonian();
    let mut m = (linalg::kron(&id, h) - linalg::kron(&h.transpose(), &id)) * (-I);
    let mut anti = CMatrix::zeros(d, d);
    for l in spec.kraus() {
        m += linalg::kron(&l.conjugate(), l);
        anti += l.adjoint() * l;
    }
    if !spec.kraus().is_empty() {
        let half = Complex64::new(0.5, 0.0);
        m -= (linalg::kron(&id, &anti) + linalg::kron(&anti.transpose(), &id)) * half;
    }
    SuperOperator { dim: d, matrix: m }
}

/// Direct evaluation of the GKSL sum, without building the superoperator.
pub fn gksl_apply(spec: &GkslSpec, x: &CMatrix) -> Result<CMatrix> {
    let d = spec.dim();
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::dim("gksl operand", d, x.nrows()));
    }
    let h = spec.hamiltonian();
    let mut out = (h * x - x * h) * (-I);
    for l in spec.kraus() {
        let ldl = l.adjoint() * l;
        out += l * x * l.adjoint() - (&ldl * x + x * &ldl) * Complex64::new(0.5, 0.0);
    }
    Ok(out)
}
