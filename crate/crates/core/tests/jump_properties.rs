mod common;

use common::{qnd_family, re, rng};
use nalgebra::DMatrix;
use qjump_core::homogenize::jump_semigroup;
use qjump_core::jump::{empirical_occupation, simulate_jumps};
use qjump_core::linalg::CMatrix;
use qjump_core::metrics::Estimate;
use qjump_core::{homogenized_generator, marginal, models, transition_rates, MarkovGenerator};
use rand::Rng;

fn random_generator(seed: u64, d: usize) -> MarkovGenerator {
    let mut r = rng(seed);
    MarkovGenerator::from_off_diagonal(DMatrix::from_fn(d, d, |_, _| 2.0 * r.random::<f64>()))
        .unwrap()
}

#[test]
fn occupation_frequencies_match_the_marginal() {
    let t = random_generator(51, 3);
    let mu = [0.6, 0.1, 0.3];
    let n = 10_000;
    let paths = simulate_jumps(&t, &mu, 2.0, n, 17).unwrap();
    for time in [0.3, 1.0, 2.0] {
        let occ = empirical_occupation(&paths, 3, time);
        let exact = marginal(&t, &mu, time).unwrap();
        for (p, q) in occ.iter().zip(&exact) {
            let se = (q * (1.0 - q) / n as f64).sqrt();
            assert!((p - q).abs() <= 4.0 * se, "t={time}: {p} vs {q}");
        }
    }
}

#[test]
fn marginal_satisfies_chapman_kolmogorov() {
    for (k, d) in [2, 3, 4, 5].into_iter().enumerate() {
        let t = random_generator(52 + k as u64, d);
        let mu: Vec<f64> = (0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        for (s, u) in [(0.2, 0.7), (1.0, 1.5), (0.0, 0.4)] {
            let direct = marginal(&t, &mu, s + u).unwrap();
            let mid = marginal(&t, &mu, s).unwrap();
            let split = marginal(&t, &mid, u).unwrap();
            for (a, b) in direct.iter().zip(&split) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn marginal_is_the_diagonal_of_the_homogenized_evolution() {
    let mut r = rng(53);
    for m in qnd_family(53).into_iter().take(10) {
        let d = m.dim();
        let [l0, l1, l2] = m.generators();
        let li = homogenized_generator(&l0, &l1, &l2).unwrap().l_infinity;
        let rates = transition_rates(&m).unwrap();
        let raw: Vec<f64> = (0..d).map(|_| r.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let mu: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let start = CMatrix::from_fn(d, d, |i, j| if i == j { re(mu[i]) } else { re(0.0) });
        for time in [0.1, 0.5, 1.0] {
            let pi = qjump_core::SuperOperator::diagonal_projector(d);
            let evolved = (&(&pi * &li.expm(time).unwrap()) * &pi)
                .apply(&start)
                .unwrap();
            let via_rates = jump_semigroup(&rates, time).unwrap().apply(&start).unwrap();
            let law = marginal(&rates, &mu, time).unwrap();
            for i in 0..d {
                assert!((evolved[(i, i)].re - law[i]).abs() <= 1e-8);
                assert!((via_rates[(i, i)].re - law[i]).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn fig1_chain_jumps_twice_per_unit_time() {
    let t = transition_rates(&models::fig1(1.0)).unwrap();
    let n = 4000;
    let paths = simulate_jumps(&t, &[1.0, 0.0, 0.0], 1.0, n, 3).unwrap();
    let counts: Vec<f64> = paths.iter().map(|p| p.n_jumps() as f64).collect();
    let e = Estimate::from_samples(&counts);
    assert!((e.value - 2.0).abs() <= 3.0 * e.std_err, "{e:?}");
    for p in &paths {
        assert!(p.states.windows(2).all(|w| w[0] != w[1]));
        assert!(p.jump_times.windows(2).all(|w| w[0] < w[1]));
        assert!(p.jump_times.iter().all(|&s| s > 0.0 && s <= 1.0));
    }
}

#[test]
fn fig1_chain_forgets_its_start() {
    let t = transition_rates(&models::fig1(1.0)).unwrap();
    let law = marginal(&t, &[0.0, 0.0, 1.0], 20.0).unwrap();
    assert!(law.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
}

#[test]
fn absorbing_state_holds_forever() {
    let t = MarkovGenerator::new(DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.0])).unwrap();
    let paths = simulate_jumps(&t, &[1.0, 0.0], 50.0, 50, 8).unwrap();
    for p in &paths {
        assert!(p.n_jumps() <= 1);
        assert_eq!(p.state_at(50.0), 1);
    }
}
