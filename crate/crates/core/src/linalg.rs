//! Dense complex linear-algebra helpers shared by the superoperator and
//! homogenization code.
//!
//! Superoperators of structured models are usually reducible: the graph of
//! their nonzero entries splits into disconnected components. Every spectral
//! routine here works component by component, so that each block is treated
//! at its own scale and exact zeros survive.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Elementary matrix `e_i e_j^*` (0-based).
pub fn elementary(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = ONE;
    m
}

/// Hilbert–Schmidt inner product `tr(A^* B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Hilbert–Schmidt (Frobenius) norm.
pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entry of `A - A^*` in magnitude.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(a: &CMatrix) -> Complex64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Column-stacking vectorization: `vec(X)[i + j d] = X[i, j]`.
///
/// This coincides with nalgebra's column-major storage.
pub fn vectorize(x: &CMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(x.as_slice())
}

pub fn unvectorize(v: &DVector<Complex64>, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// Connected components of the undirected graph `i ~ j` iff `A[i,j] != 0` or
/// `A[j,i] != 0`. Components are sorted by their smallest index, and indices
/// within a component are ascending.
pub fn components(a: &CMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && a[(i, j)] != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    let (lo, hi) = (ri.min(rj), ri.max(rj));
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

pub fn extract_block(a: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])])
}

pub fn scatter_block(target: &mut CMatrix, idx: &[usize], block: &CMatrix) {
    for (c, &jc) in idx.iter().enumerate() {
        for (r, &ir) in idx.iter().enumerate() {
            target[(ir, jc)] = block[(r, c)];
        }
    }
}

/// Applies a block-local matrix function (one that maps block-diagonal
/// matrices to block-diagonal matrices with the same blocks) componentwise.
pub fn blockwise<F>(a: &CMatrix, mut f: F) -> CMatrix
where
    F: FnMut(&CMatrix) -> CMatrix,
{
    let n = a.nrows();
    let mut out = CMatrix::zeros(n, n);
    for idx in components(a) {
        let block = extract_block(a, &idx);
        scatter_block(&mut out, &idx, &f(&block));
    }
    out
}

/// Matrix exponential `e^A`, computed per irreducible block with nalgebra's
/// Padé scaling-and-squaring.
pub fn expm(a: &CMatrix) -> CMatrix {
    blockwise(a, |b| {
        if b.nrows() == 1 {
            CMatrix::from_element(1, 1, b[(0, 0)].exp())
        } else {
            b.clone().exp()
        }
    })
}

/// Largest singular value, computed per block.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    components(a)
        .iter()
        .map(|idx| {
            if idx.len() == 1 {
                a[(idx[0], idx[0])].norm()
            } else {
                extract_block(a, idx)
                    .singular_values()
                    .iter()
                    .copied()
                    .fold(0.0, f64::max)
            }
        })
        .fold(0.0, f64::max)
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// All eigenvalues, computed per block from a complex Schur form.
pub fn eigenvalues(a: &CMatrix) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.nrows());
    for idx in components(a) {
        if idx.len() == 1 {
            out.push(a[(idx[0], idx[0])]);
            continue;
        }
        let block = extract_block(a, &idx);
        let schur = block.schur();
        let (_, t) = schur.unpack();
        out.extend((0..t.nrows()).map(|i| t[(i, i)]));
    }
    out
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = a
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}
