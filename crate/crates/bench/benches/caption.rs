//! Opt-in long run: `cargo bench -p qjump-bench --bench caption`.
//! One trajectory of 10⁶ steps at γ = 10⁴, smoothed over 1000 steps.

use criterion::{criterion_group, criterion_main, Criterion};

use qjump_core::metrics::MovingAverage;
use qjump_core::sde::{self, Integrator};
use qjump_core::{models, DensityMatrix};

const GAMMA: f64 = 1e4;
const STEPS: usize = 1_000_000;

fn caption_run(c: &mut Criterion) {
    let h = sde::default_step(1.0, GAMMA);
    let integ = Integrator::new(&models::fig1(GAMMA), STEPS as f64 * h, h).unwrap();
    let rho0 = DensityMatrix::maximally_coherent(3);
    let mut g = c.benchmark_group("caption");
    g.sample_size(10);
    g.bench_function("fig1_gamma1e4_1e6_steps", |b| {
        b.iter(|| {
            let mut avg = MovingAverage::new(1000);
            let mut near = 0usize;
            integ
                .run(&rho0, 0, |_, _, r| {
                    let x = r[(0, 0)].re + 2.0 * r[(1, 1)].re + 3.0 * r[(2, 2)].re;
                    if avg.push(x).is_some_and(|s| (s - s.round()).abs() <= 0.2) {
                        near += 1;
                    }
                })
                .unwrap();
            near
        })
    });
    g.finish();
}

criterion_group!(benches, caption_run);
criterion_main!(benches);
