//! Shared benchmark fixtures.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qjump_core::{lindblad_from_gksl, models, SuperOperator, ThreeScaleModel};

/// Dense Lindbladian on `M_d` with three random Kraus operators.
pub fn dense_lindbladian(d: usize, seed: u64) -> SuperOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lindblad_from_gksl(&models::random_gksl(&mut rng, d, 3))
}

/// Random QND model of dimension `d`.
pub fn qnd_model(d: usize, seed: u64) -> ThreeScaleModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    models::random_qnd(&mut rng, d, 1.0)
}
