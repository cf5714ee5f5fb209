//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::time::{Duration, Instant};

use common::{qnd_family, rng};
use nalgebra::DMatrix;
use num_complex::Complex64;
use qjump_core::homogenize::{jump_semigroup, restricted_rates};
use qjump_core::linalg::{self, CMatrix};
use qjump_core::metrics::{
    self, empirical_marginal, mz_distance, total_variation, Estimate, MovingAverage, OutsideBalls,
};
use qjump_core::sde::{self, Integrator};
use qjump_core::superop::GkslSpec;
use qjump_core::{
    check_identifiability, compare_semigroups, homogenized_generator, initial_distribution,
    lindblad_from_gksl, marginal, models, simulate_fig1_reduced, transition_rates, DensityMatrix,
    PathFunction, Result, ThreeScaleModel,
};
use rand::Rng;

const RATE_TOL: f64 = 1e-8;
const IDENTITY_TOL: f64 = 1e-9;
const SEMIGROUP_RATIO: f64 = 0.3;
const MEAN_SE_HARD: f64 = 4.0;
const MEAN_SE_SOFT: f64 = 2.0;
const MEAN_SOFT_FRACTION: f64 = 0.8;
const LAW_RADIUS: f64 = 0.2;
const LAW_TV: f64 = 0.1;
const LAW_UNASSIGNED: f64 = 0.1;
const DECOHERENCE_FACTOR: f64 = 2.0;
const OUTSIDE_EPSILON: f64 = 0.2;
const OUTSIDE_FACTOR: f64 = 2.0;
const CONCENTRATION_WINDOW: usize = 1000;
const CONCENTRATION_RADIUS: f64 = 0.2;
const CONCENTRATION_FRACTION: f64 = 0.8;
const REDUCED_SE: f64 = 4.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn run(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match outcome {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = elapsed <= budget;
    let ok = pass && in_time;
    println!(
        "criterion {id:>2}: {} {name}: {detail}; {:.1}s of {}s{}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { " (over budget)" }
    );
    ok
}

fn rate_equivalence() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut identifiable = true;
    for m in qnd_family(1) {
        identifiable &= check_identifiability(m.level(2), 1e-10).identifiability_ok;
        let [l0, l1, l2] = m.generators();
        let q = restricted_rates(&homogenized_generator(&l0, &l1, &l2)?.l_infinity);
        let t = transition_rates(&m)?;
        worst = worst.max((&q - t.rates()).abs().max());
    }
    Ok(Outcome {
        pass: identifiable && worst <= RATE_TOL,
        detail: format!("max |L_inf(E_ii)_jj - T_ij| = {worst:.2e} (tol {RATE_TOL:e}), all identifiable: {identifiable}"),
    })
}

fn operator_identities() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for m in qnd_family(1) {
        let [l0, l1, l2] = m.generators();
        worst = worst.max(
            homogenized_generator(&l0, &l1, &l2)?
                .residuals(&l1, &l2)
                .max(),
        );
    }
    Ok(Outcome {
        pass: worst <= IDENTITY_TOL,
        detail: format!("max residual {worst:.2e} (tol {IDENTITY_TOL:e})"),
    })
}

fn semigroup_convergence() -> Result<Outcome> {
    let [l0, l1, l2] = models::fig1(1.0).generators();
    let errs = compare_semigroups(&l0, &l1, &l2, &[3.0, 10.0, 30.0, 100.0], 1.0)?;
    let e: Vec<f64> = errs.iter().map(|x| x.1).collect();
    let decreasing = e.windows(2).all(|w| w[1] < w[0]);
    let ratio = e[3] / e[1];
    Ok(Outcome {
        pass: decreasing && ratio <= SEMIGROUP_RATIO,
        detail: format!(
            "errors {} at gamma 3/10/30/100, error(100)/error(10) = {ratio:.2e}",
            sci(&e)
        ),
    })
}

fn exact_mean() -> Result<Outcome> {
    let m = models::fig1(30.0);
    let rho0 = DensityMatrix::diagonal(&[0.5, 0.3, 0.2])?;
    let t = 0.1;
    let stats = sde::simulate_ensemble(&m, &rho0, 500, t, 1e-5, 4_000, usize::MAX, &[])?;
    let k = stats.times.len() - 1;
    let exact = m.l_gamma().expm(t)?.apply(rho0.matrix())?;
    let (mean, se) = (&stats.mean[k], &stats.std_err[k]);
    let mut z = Vec::new();
    let mut trivial = 0;
    for j in 0..3 {
        for i in 0..=j {
            let parts: &[fn(Complex64) -> f64] = if i == j {
                &[|c| c.re]
            } else {
                &[|c| c.re, |c| c.im]
            };
            for part in parts {
                let (sim, want, s) = (part(mean[(i, j)]), part(exact[(i, j)]), part(se[(i, j)]));
                if sim == 0.0 && want == 0.0 && s == 0.0 {
                    trivial += 1;
                    continue;
                }
                z.push((sim - want).abs() / s);
            }
        }
    }
    let hard = z.iter().all(|&x| x <= MEAN_SE_HARD);
    let soft = z.iter().filter(|&&x| x <= MEAN_SE_SOFT).count() as f64 / z.len() as f64;
    Ok(Outcome {
        pass: !z.is_empty() && hard && soft >= MEAN_SOFT_FRACTION,
        detail: format!(
            "{} random components (max |z| = {:.2}, within 2 SE: {:.0}%), {trivial} identically zero",
            z.len(),
            z.iter().cloned().fold(0.0, f64::max),
            100.0 * soft
        ),
    })
}

fn mean_gap(model: &ThreeScaleModel, rho0: &DensityMatrix, t: f64) -> Result<f64> {
    let exact = model.l_gamma().expm(t)?.apply(rho0.matrix())?;
    let limit = jump_semigroup(&transition_rates(model)?, t)?.apply(rho0.matrix())?;
    Ok(linalg::hs_norm(&(exact - limit)))
}

fn mean_convergence() -> Result<Outcome> {
    let gammas = [10.0, 30.0, 100.0];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, model, rho0) in [
        (
            "fig1",
            models::fig1(1.0),
            DensityMatrix::maximally_coherent(3),
        ),
        ("rabi", models::rabi(1.0), DensityMatrix::pointer(2, 0)),
    ] {
        let e = gammas
            .iter()
            .map(|&g| mean_gap(&model.with_gamma(g)?, &rho0, 1.0))
            .collect::<Result<Vec<f64>>>()?;
        pass &= e
            .windows(2)
            .all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
        detail.push(format!("{name} {}", sci(&e)));
    }
    Ok(Outcome {
        pass,
        detail: format!("errors at gamma 10/30/100: {}", detail.join(", ")),
    })
}

fn law_match() -> Result<Outcome> {
    let gamma = 300.0;
    let m = models::fig1(gamma);
    let rho0 = DensityMatrix::pointer(3, 0);
    let integ = Integrator::new(&m, 1.0, 1.0)?;
    let trajs = sde::par_map_ordered(200, |i| {
        integ.trajectory(&rho0, 6_000 + i as u64, integ.n_steps() / 2)
    })?;
    let paths: Vec<PathFunction<CMatrix>> = trajs.iter().map(|t| t.path()).collect();
    let rates = transition_rates(&m)?;
    let mu = initial_distribution(&rho0);
    let mut pass = true;
    let mut detail = Vec::new();
    for t in [0.5, 1.0] {
        let (p, unassigned) = empirical_marginal(&paths, t, LAW_RADIUS)?;
        let tv = total_variation(&p, unassigned, &marginal(&rates, &mu, t)?);
        pass &= tv <= LAW_TV && unassigned <= LAW_UNASSIGNED;
        detail.push(format!("t={t}: TV {tv:.3}, unassigned {unassigned:.3}"));
    }
    Ok(Outcome {
        pass,
        detail: detail.join(", "),
    })
}

fn mean_offdiag(gamma: f64) -> Result<f64> {
    let stats = sde::simulate_ensemble(
        &models::fig1(gamma),
        &DensityMatrix::maximally_coherent(3),
        200,
        0.05,
        1.0,
        7_000,
        usize::MAX,
        &[sde::Observable::offdiag_norm()],
    )?;
    Ok(*stats.observables[0]
        .mean
        .last()
        .expect("final time is saved"))
}

fn decoherence() -> Result<Outcome> {
    let (a, b) = (mean_offdiag(10.0)?, mean_offdiag(30.0)?);
    Ok(Outcome {
        pass: a >= DECOHERENCE_FACTOR * b,
        detail: format!("mean |offdiag| at t=0.05: {a:.3e} (gamma 10), {b:.3e} (gamma 30)"),
    })
}

fn outside_time(gamma: f64) -> Result<Estimate> {
    let m = models::fig1(gamma);
    let integ = Integrator::new(&m, 1.0, 1.0)?;
    let rho0 = DensityMatrix::maximally_coherent(3);
    let samples = sde::par_map_ordered(100, |i| {
        let mut acc = OutsideBalls::new(OUTSIDE_EPSILON);
        integ.run(&rho0, 8_000 + i as u64, |_, t, rho| acc.push(t, rho))?;
        Ok(acc.finish(integ.t_end()))
    })?;
    Ok(Estimate::from_samples(&samples))
}

fn outside_bound() -> Result<Outcome> {
    let gammas = [30.0, 100.0, 300.0];
    let scaled = gammas
        .iter()
        .map(|&g| outside_time(g).map(|e| (g * e.value, g * e.std_err)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let ok = scaled.windows(2).all(|w| {
        let (hi, lo) = if w[0].0 >= w[1].0 {
            (w[0].0, w[1].0)
        } else {
            (w[1].0, w[0].0)
        };
        hi <= OUTSIDE_FACTOR * lo
    });
    let shown: Vec<String> = scaled
        .iter()
        .map(|(v, s)| format!("{v:.4} +- {s:.4}"))
        .collect();
    Ok(Outcome {
        pass: ok,
        detail: format!("gamma*E[T] at gamma 30/100/300: {}", shown.join(", ")),
    })
}

fn concentration() -> Result<Outcome> {
    let m = models::fig1(1e3);
    let integ = Integrator::new(&m, 1.0, 1.0)?;
    let mut avg = MovingAverage::new(CONCENTRATION_WINDOW);
    let (mut inside, mut total) = (0usize, 0usize);
    integ.run(&DensityMatrix::maximally_coherent(3), 9_000, |_, _, rho| {
        let x = rho[(0, 0)].re + 2.0 * rho[(1, 1)].re + 3.0 * rho[(2, 2)].re;
        if let Some(s) = avg.push(x) {
            total += 1;
            if (s - s.round()).abs() <= CONCENTRATION_RADIUS && (1.0..=3.0).contains(&s.round()) {
                inside += 1;
            }
        }
    })?;
    let fraction = inside as f64 / total as f64;
    Ok(Outcome {
        pass: fraction >= CONCENTRATION_FRACTION,
        detail: format!(
            "{} steps, smoothed sum near a pointer value {:.1}% of the time",
            integ.n_steps(),
            100.0 * fraction
        ),
    })
}

fn moments(xs: &[f64]) -> (Estimate, Estimate) {
    let n = xs.len() as f64;
    let mean = Estimate::from_samples(xs);
    let c2 = xs.iter().map(|x| (x - mean.value).powi(2)).sum::<f64>() / n;
    let c4 = xs.iter().map(|x| (x - mean.value).powi(4)).sum::<f64>() / n;
    let var = c2 * n / (n - 1.0);
    (
        mean,
        Estimate {
            value: var,
            std_err: ((c4 - c2 * c2) / n).max(0.0).sqrt(),
        },
    )
}

fn reduced_vs_full() -> Result<Outcome> {
    let gamma = 30.0;
    let n = 500;
    let t = 0.1;
    let m = models::fig1(gamma);
    let integ = Integrator::new(&m, t, 1.0)?;
    let rho0 = DensityMatrix::maximally_coherent(3);
    let full: Vec<Vec<f64>> = sde::par_map_ordered(n, |i| {
        let traj = integ.trajectory(&rho0, 10_000 + i as u64, integ.n_steps())?;
        Ok(
            sde::diagonal(traj.states.last().expect("final state").matrix())
                .as_slice()
                .to_vec(),
        )
    })?;
    let reduced: Vec<Vec<f64>> = sde::par_map_ordered(n, |i| {
        let path = simulate_fig1_reduced(
            gamma,
            integ.n_steps(),
            integ.step_size(),
            20_000 + i as u64,
            [1.0 / 3.0; 3],
        )?;
        Ok(path.values().last().expect("final value").clone())
    })?;
    let mut worst = 0.0f64;
    for c in 0..3 {
        let a: Vec<f64> = full.iter().map(|x| x[c]).collect();
        let b: Vec<f64> = reduced.iter().map(|x| x[c]).collect();
        let ((ma, va), (mb, vb)) = (moments(&a), moments(&b));
        for (x, y) in [(ma, mb), (va, vb)] {
            let se = x.std_err.hypot(y.std_err);
            worst = worst.max((x.value - y.value).abs() / se);
        }
    }
    Ok(Outcome {
        pass: worst <= REDUCED_SE,
        detail: format!("largest mean/variance gap {worst:.2} SE over 3 coordinates"),
    })
}

fn detailed_balance_gap() -> Result<f64> {
    let p = [0.5, 0.3, 0.2];
    let d = 3;
    let mut r = rng(11);
    let mut kraus = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let w: f64 = 0.5 + r.random::<f64>();
            let mut forward = CMatrix::zeros(d, d);
            forward[(j, i)] = Complex64::from_polar((w * p[j]).sqrt(), r.random::<f64>());
            let mut backward = CMatrix::zeros(d, d);
            backward[(i, j)] = Complex64::from_polar((w * p[i]).sqrt(), r.random::<f64>());
            kraus.extend([forward, backward]);
        }
    }
    let n = kraus.len();
    let level0 = GkslSpec::new(CMatrix::zeros(d, d), kraus, vec![0.0; n])?;
    let m = ThreeScaleModel::new(
        1.0,
        level0,
        GkslSpec::empty(d),
        models::fig1(1.0).level(2).clone(),
    )?;
    let t = transition_rates(&m)?;
    let gap = DMatrix::from_fn(d, d, |i, j| p[i] * t.rate(i, j) - p[j] * t.rate(j, i));
    Ok(gap.abs().max())
}

fn property_suites() -> Result<Outcome> {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    let mut projector_gap = 0.0f64;
    let mut identities = 0.0f64;
    for m in qnd_family(2) {
        let [l0, l1, l2] = m.generators();
        let r = homogenized_generator(&l0, &l1, &l2)?;
        identities = identities.max(r.residuals(&l1, &l2).max());
        let long = l2.expm(50.0 / r.spectral_gap)?;
        projector_gap = projector_gap.max(linalg::max_abs(&(long.matrix() - r.projector.matrix())));
    }
    check(
        "projector and pseudo-inverse identities",
        identities <= IDENTITY_TOL,
    );
    check(
        "projector agrees with long-time evolution",
        projector_gap <= 1e-6,
    );

    let mut r = rng(3);
    let mut trace_ok = true;
    for d in 1..=4 {
        for _ in 0..5 {
            let l = lindblad_from_gksl(&models::random_gksl(&mut r, d, 3));
            trace_ok &= l.check_trace_preserving(1e-10);
        }
    }
    check("trace preservation", trace_ok);

    let level2 = GkslSpec::new(
        CMatrix::zeros(3, 3),
        vec![models::random_diagonal(&mut r, 3)],
        vec![1.0],
    )?;
    let level1 = GkslSpec::new(
        CMatrix::zeros(3, 3),
        vec![models::random_diagonal(&mut r, 3)],
        vec![0.5],
    )?;
    let pure = ThreeScaleModel::new(20.0, GkslSpec::empty(3), level1, level2)?;
    let mut absorbed = true;
    for i in 0..3 {
        let start = DensityMatrix::pointer(3, i);
        let traj = sde::simulate_trajectory(&pure, &start, 0.05, 1.0, 4, 50)?;
        absorbed &= traj.states.iter().all(|s| s.matrix() == start.matrix());
    }
    check("pointer-state absorption", absorbed);

    let fig1 = models::fig1(10.0);
    let rho0 = DensityMatrix::maximally_coherent(3);
    let ensemble = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(|| sde::simulate_many(&fig1, &rho0, 16, 0.02, 1.0, 5, 100))
    };
    let single = ensemble(1)?;
    check("seed determinism", single == ensemble(1)?);
    check("thread-count invariance", single == ensemble(4)?);

    let paths: Vec<PathFunction<CMatrix>> = single.iter().map(|t| t.path()).collect();
    let d = |a: usize, b: usize| {
        mz_distance(&paths[a], &paths[b], metrics::DEFAULT_MZ_HORIZON).map(|m| m.value)
    };
    let mut axioms = true;
    for a in 0..6 {
        axioms &= d(a, a)? == 0.0;
        for b in 0..6 {
            axioms &= d(a, b)? == d(b, a)?;
            axioms &= d(a, b)? <= 1.0 - (-metrics::DEFAULT_MZ_HORIZON).exp();
            for c in 0..6 {
                axioms &= d(a, c)? <= d(a, b)? + d(b, c)? + 1e-12;
            }
        }
    }
    check("mz pseudometric axioms", axioms);

    check("detailed-balance witness", detailed_balance_gap()? <= 1e-12);

    Ok(Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "all property checks hold".into()
        } else {
            format!("failing: {}", failures.join(", "))
        },
    })
}

type Criterion = (u32, &'static str, Duration, fn() -> Result<Outcome>);

/// Criterion ids given on the command line select a subset; no ids runs all.
fn main() {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 11] = [
        (1, "rate-formula equivalence", secs(10), rate_equivalence),
        (
            2,
            "homogenization identities",
            secs(10),
            operator_identities,
        ),
        (3, "semigroup convergence", secs(30), semigroup_convergence),
        (4, "exact-mean oracle", minutes(5), exact_mean),
        (
            5,
            "mean convergence to the jump semigroup",
            secs(30),
            mean_convergence,
        ),
        (6, "finite-dimensional law match", minutes(30), law_match),
        (7, "decoherence decay", minutes(10), decoherence),
        (8, "time outside pointer balls", minutes(30), outside_bound),
        (9, "three-level concentration", minutes(10), concentration),
        (10, "reduced vs full diagonal", minutes(10), reduced_vs_full),
        (11, "property suites", secs(120), property_suites),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let results: Vec<bool> = criteria
        .into_iter()
        .filter(|c| selected.is_empty() || selected.contains(&c.0))
        .map(|(id, name, budget, f)| run(id, name, budget, f))
        .collect();
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
