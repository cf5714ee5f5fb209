//! Reference models and random model generators.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMatrix};
use crate::qnd::ThreeScaleModel;
use crate::superop::GkslSpec;

fn real_diag(v: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        v.len(),
        v.iter().map(|&x| Complex64::new(x, 0.0)),
    ))
}

/// Three-level weak-coupling model: no Hamiltonians, no intermediate scale,
/// one perfectly read measurement channel `diag(1, 2, 3)` at the fast scale,
/// and all nine elementary matrices `E_{i,j}` as unread slow Kraus operators.
///
/// Its jump-rate matrix has every off-diagonal entry equal to 1.
pub fn fig1(gamma: f64) -> ThreeScaleModel {
    let d = 3;
    let mut kraus0 = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            kraus0.push(linalg::elementary(d, i, j));
        }
    }
    let level0 =
        GkslSpec::new(CMatrix::zeros(d, d), kraus0, vec![0.0; d * d]).expect("valid level 0");
    let level2 = GkslSpec::new(
        CMatrix::zeros(d, d),
        vec![real_diag(&[1.0, 2.0, 3.0])],
        vec![1.0],
    )
    .expect("valid level 2");
    ThreeScaleModel::new(gamma, level0, GkslSpec::empty(d), level2).expect("valid model")
}

/// Two-level model where a Rabi drive `H⁽¹⁾ = ½ σ_x` competes with a read
/// measurement of `diag(0, 1)`. Both jump rates equal 1.
pub fn rabi(gamma: f64) -> ThreeScaleModel {
    let half = Complex64::new(0.5, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let h1 = CMatrix::from_row_slice(2, 2, &[zero, half, half, zero]);
    let level1 = GkslSpec::new(h1, vec![], vec![]).expect("valid level 1");
    let level2 = GkslSpec::new(
        CMatrix::zeros(2, 2),
        vec![real_diag(&[0.0, 1.0])],
        vec![1.0],
    )
    .expect("valid level 2");
    ThreeScaleModel::new(gamma, GkslSpec::empty(2), level1, level2).expect("valid model")
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| gaussian_complex(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let a = random_matrix(rng, d);
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn random_diagonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_fn(d, |_, _| gaussian_complex(rng)))
}

fn random_real_diagonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_fn(d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), 0.0)
    }))
}

/// Unstructured GKSL data with `n_kraus` dense Kraus operators.
pub fn random_gksl<R: Rng + ?Sized>(rng: &mut R, d: usize, n_kraus: usize) -> GkslSpec {
    let kraus = (0..n_kraus).map(|_| random_matrix(rng, d)).collect();
    let eta = (0..n_kraus).map(|_| rng.random::<f64>()).collect();
    GkslSpec::new(random_hermitian(rng, d), kraus, eta).expect("random GKSL data is valid")
}

/// Random model satisfying the QND assumption and (almost surely)
/// identifiability: dense level 0, diagonal level-1 Kraus operators with a
/// dense `H⁽¹⁾`, and diagonal level-2 data whose first channel is read.
pub fn random_qnd<R: Rng + ?Sized>(rng: &mut R, d: usize, gamma: f64) -> ThreeScaleModel {
    let n0 = rng.random_range(1..=3);
    let level0 = random_gksl(rng, d, n0);

    let n1 = rng.random_range(0..=2);
    let level1 = GkslSpec::new(
        random_hermitian(rng, d),
        (0..n1).map(|_| random_diagonal(rng, d)).collect(),
        (0..n1).map(|_| rng.random::<f64>()).collect(),
    )
    .expect("valid level 1");

    let n2 = rng.random_range(1..=2);
    let mut kraus2 =
        vec![random_real_diagonal(rng, d) + random_diagonal(rng, d) * Complex64::new(0.0, 0.3)];
    kraus2.extend((1..n2).map(|_| random_diagonal(rng, d)));
    let mut eta2 = vec![0.5 + 0.5 * rng.random::<f64>()];
    eta2.extend((1..n2).map(|_| rng.random::<f64>()));
    let h2 = random_real_diagonal(rng, d);
    let level2 = GkslSpec::new(h2, kraus2, eta2).expect("valid level 2");

    ThreeScaleModel::new(gamma, level0, level1, level2).expect("valid model")
}
