#![allow(dead_code)]

use num_complex::Complex64;
use qjump_core::linalg::{self, CMatrix};
use qjump_core::models;
use qjump_core::{DensityMatrix, ThreeScaleModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random density matrix `A A^* / tr(A A^*)`.
pub fn random_state<R: Rng>(rng: &mut R, d: usize) -> DensityMatrix {
    let a = models::random_matrix(rng, d);
    let p = &a * a.adjoint();
    let tr = linalg::trace(&p);
    DensityMatrix::new(p / tr).unwrap()
}

/// Twenty random QND models with dimensions cycling through 2, 3, 4.
pub fn qnd_family(seed: u64) -> Vec<ThreeScaleModel> {
    let mut r = rng(seed);
    (0..20)
        .map(|i| models::random_qnd(&mut r, 2 + i % 3, 1.0))
        .collect()
}

pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    linalg::max_abs(&(a - b))
}
