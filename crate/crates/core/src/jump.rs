//! The limiting continuous-time Markov chain on pointer states.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::PathFunction;
use crate::qnd::MarkovGenerator;
use crate::sde::par_map_ordered;
use crate::superop::DensityMatrix;
use crate::tol;

/// Piecewise-constant path of pointer indices (0-based).
///
/// `states[0]` holds on `[0, jump_times[0])`, `states[k]` on
/// `[jump_times[k-1], jump_times[k])`, and the last state until `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpPath {
    pub jump_times: Vec<f64>,
    pub states: Vec<usize>,
    pub t_end: f64,
}

impl JumpPath {
    pub fn n_jumps(&self) -> usize {
        self.jump_times.len()
    }

    pub fn state_at(&self, t: f64) -> usize {
        self.states[self.jump_times.partition_point(|&s| s <= t)]
    }

    /// The path as a piecewise-constant function with pointer-index values.
    pub fn path(&self) -> PathFunction<f64> {
        let times = std::iter::once(0.0)
            .chain(self.jump_times.iter().copied())
            .collect();
        let values = self.states.iter().map(|&s| s as f64).collect();
        PathFunction::new(times, values, self.t_end).expect("jump times are increasing")
    }
}

/// `μ_i = ρ_{i,i}`, with tiny negatives clipped and the result renormalized.
pub fn initial_distribution(rho0: &DensityMatrix) -> Vec<f64> {
    normalize_probabilities(&rho0.populations())
}

fn normalize_probabilities(p: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = p.iter().map(|&x| x.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    clipped.iter().map(|x| x / s).collect()
}

fn check_distribution(t: &MarkovGenerator, mu: &[f64]) -> Result<()> {
    if mu.len() != t.dim() {
        return Err(Error::dim("initial distribution", t.dim(), mu.len()));
    }
    if mu
        .iter()
        .any(|&p| !p.is_finite() || p < -tol::PROBABILITY_CLIP)
    {
        return Err(Error::InvalidInput(
            "initial distribution has negative entries".into(),
        ));
    }
    let s: f64 = mu.iter().sum();
    if (s - 1.0).abs() > tol::TRACE {
        return Err(Error::InvalidInput(format!(
            "initial distribution sums to {s}"
        )));
    }
    Ok(())
}

/// Gillespie sampling on `[0, t_end]`; stream 0 of `seed`.
pub fn simulate_jump(t: &MarkovGenerator, mu: &[f64], t_end: f64, seed: u64) -> Result<JumpPath> {
    check_distribution(t, mu)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "horizon must be non-negative, got {t_end}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = normalize_probabilities(mu);
    let mut state = WeightedIndex::new(&mu)
        .map_err(|e| Error::InvalidInput(format!("initial distribution: {e}")))?
        .sample(&mut rng);
    let mut states = vec![state];
    let mut jump_times = Vec::new();
    let mut now = 0.0;
    loop {
        let rate = t.exit_rate(state);
        if rate <= 0.0 {
            break;
        }
        let hold: f64 = Exp::new(rate).expect("positive rate").sample(&mut rng);
        now += hold;
        if now > t_end {
            break;
        }
        let weights: Vec<f64> = (0..t.dim())
            .map(|j| if j == state { 0.0 } else { t.rate(state, j) })
            .collect();
        state = WeightedIndex::new(&weights)
            .expect("positive exit rate has a positive weight")
            .sample(&mut rng);
        jump_times.push(now);
        states.push(state);
    }
    Ok(JumpPath {
        jump_times,
        states,
        t_end,
    })
}

/// `n` paths with seeds `base_seed, …, base_seed + n - 1`.
pub fn simulate_jumps(
    t: &MarkovGenerator,
    mu: &[f64],
    t_end: f64,
    n: usize,
    base_seed: u64,
) -> Result<Vec<JumpPath>> {
    par_map_ordered(n, |i| {
        simulate_jump(t, mu, t_end, base_seed.wrapping_add(i as u64))
    })
}

/// Law at time `t`: the row vector `μᵀ e^{tT}`. Round-off negatives are
/// clipped and the vector renormalized.
pub fn marginal(t: &MarkovGenerator, mu: &[f64], time: f64) -> Result<Vec<f64>> {
    check_distribution(t, mu)?;
    if !(time >= 0.0 && time.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "time must be non-negative, got {time}"
        )));
    }
    let e: DMatrix<f64> = (t.rates() * time).exp();
    let row = DVector::from_column_slice(mu).transpose() * e;
    Ok(normalize_probabilities(row.as_slice()))
}

/// Fraction of paths in each state at time `t`.
pub fn empirical_occupation(paths: &[JumpPath], d: usize, t: f64) -> Vec<f64> {
    let mut counts = vec![0.0; d];
    for p in paths {
        counts[p.state_at(t)] += 1.0;
    }
    counts.iter().map(|c| c / paths.len() as f64).collect()
}
