use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use qjump_bench::{dense_lindbladian, qnd_model};
use qjump_core::sde::{self, Integrator, NoiseIncrement};
use qjump_core::{homogenized_generator, models, transition_rates, DensityMatrix};

fn stepper(c: &mut Criterion) {
    let mut g = c.benchmark_group("stepper");
    let steps = 10_000;
    g.throughput(Throughput::Elements(steps as u64));
    for gamma in [10.0, 300.0] {
        let m = models::fig1(gamma);
        let h = sde::default_step(1.0, gamma);
        let integ = Integrator::new(&m, steps as f64 * h, h).unwrap();
        let rho0 = DensityMatrix::maximally_coherent(3);
        g.bench_with_input(BenchmarkId::new("fig1", gamma), &integ, |b, integ| {
            b.iter(|| {
                integ
                    .run(&rho0, 1, |_, _, r| {
                        black_box(r);
                    })
                    .unwrap()
            })
        });
    }
    let m = qnd_model(4, 5).with_gamma(30.0).unwrap();
    let h = sde::default_step(1.0, 30.0);
    let integ = Integrator::new(&m, steps as f64 * h, h).unwrap();
    let rho0 = DensityMatrix::maximally_coherent(4);
    g.bench_function("random_qnd_d4", |b| {
        b.iter(|| {
            integ
                .run(&rho0, 1, |_, _, r| {
                    black_box(r);
                })
                .unwrap()
        })
    });
    g.finish();

    let m = models::fig1(30.0);
    let rho = DensityMatrix::maximally_coherent(3);
    let dw = NoiseIncrement::zero(&m);
    c.bench_function("reference_step/fig1", |b| {
        b.iter(|| sde::step(&m, black_box(&rho), 1e-5, &dw).unwrap())
    });
}

fn exponential(c: &mut Criterion) {
    let l = dense_lindbladian(9, 3);
    c.bench_function("expm/dense_81x81", |b| {
        b.iter(|| black_box(&l).expm(1.0).unwrap())
    });
    let fig1 = models::fig1(10.0).l_gamma();
    c.bench_function("expm/fig1_9x9", |b| {
        b.iter(|| black_box(&fig1).expm(1.0).unwrap())
    });
}

fn homogenization(c: &mut Criterion) {
    let [l0, l1, l2] = models::fig1(1.0).generators();
    c.bench_function("homogenized_generator/fig1", |b| {
        b.iter(|| homogenized_generator(&l0, &l1, &l2).unwrap())
    });
    let [l0, l1, l2] = qnd_model(4, 9).generators();
    c.bench_function("homogenized_generator/random_qnd_d4", |b| {
        b.iter(|| homogenized_generator(&l0, &l1, &l2).unwrap())
    });
    let m = models::fig1(1.0);
    c.bench_function("transition_rates/fig1", |b| {
        b.iter(|| transition_rates(black_box(&m)).unwrap())
    });
}

criterion_group!(benches, stepper, exponential, homogenization);
criterion_main!(benches);
