//! Subcommand implementations. Each writes its artifacts into the output
//! directory and returns after recording run metadata.

use std::path::Path;

use serde::Serialize;

use qjump_core::linalg::CMatrix;
use qjump_core::metrics::{self, Estimate, MzDistance};
use qjump_core::sde::{self, EnsembleStats, Integrator, Observable};
use qjump_core::{
    check_qnd, compare_semigroups, homogenized_generator, initial_distribution, jump, marginal,
    models, transition_rates, DensityMatrix, MarkovGenerator, PathFunction, SuperOperator,
    Trajectory,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, CliResult};
use crate::output::{emit_plot_data, format_number, write_json, RunMetadata, RunRecorder, Table};

/// Validates `cfg`, dispatches on its kind and writes everything under `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> CliResult<RunMetadata> {
    cfg.validate()?;
    let mut rec = RunRecorder::new(out)?;
    match cfg.kind {
        ExperimentKind::Validate => validate(cfg, &mut rec)?,
        ExperimentKind::Rates => rates(cfg, &mut rec)?,
        ExperimentKind::Homog => homog(cfg, &mut rec)?,
        ExperimentKind::Compare => compare(cfg, &mut rec)?,
        ExperimentKind::Sim => sim(cfg, &mut rec)?,
        ExperimentKind::Jump => jump_paths(cfg, &mut rec)?,
        ExperimentKind::Metrics => diagnostics(cfg, &mut rec)?,
        ExperimentKind::Fig1 => fig1(cfg, &mut rec)?,
    }
    rec.finish(cfg)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("result types serialize")
}

fn validate(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> CliResult<()> {
    let m = cfg.model()?;
    let report = check_qnd(&m, cfg.params.tol);
    write_json(&rec.path("validate.json"), &report)?;
    println!("{}", to_json(&report));
    if cfg.params.strict && !(report.qnd_ok && report.identifiability_ok && report.decoherence_ok) {
        return Err(CliError::validation(
            "model violates the structural assumptions",
        ));
    }
    Ok(())
}

fn rates(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> CliResult<()> {
    let t = transition_rates(&cfg.model()?)?;
    write_json(&rec.path("rates.json"), &t)?;
    for row in t.rates().row_iter() {
        let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
        println!("{}", cells.join(" "));
    }
    Ok(())
}

#[derive(Serialize)]
struct HomogSummary {
    dim: usize,
    spectral_gap: f64,
    kernel_dim: usize,
    residuals: qjump_core::homogenize::Residuals,
    #[serde(skip_serializing_if = "Option::is_none")]
    projector: Option<SuperOperator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pseudo_inverse: Option<SuperOperator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_infinity: Option<SuperOperator>,
}

fn homog(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> CliResult<()> {
    let m = cfg.model()?;
    let [l0, l1, l2] = m.generators();
    let r = rec.phase("homogenize", || Ok(homogenized_generator(&l0, &l1, &l2)?))?;
    let full = cfg.params.full;
    let summary = HomogSummary {
        dim: m.dim(),
        spectral_gap: r.spectral_gap,
        kernel_dim: r.kernel_dim,
        residuals: r.residuals(&l1, &l2),
        projector: full.then(|| r.projector.clone()),
        pseudo_inverse: full.then(|| r.pseudo_inverse.clone()),
        l_infinity: full.then(|| r.l_infinity.clone()),
    };
    write_json(&rec.path("homog.json"), &summary)?;
    println!(
        "spectral_gap {} kernel_dim {} max_residual {}",
        format_number(r.spectral_gap),
        r.kernel_dim,
        format_number(summary.residuals.max())
    );
    Ok(())
}

fn compare(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> CliResult<()> {
    let [l0, l1, l2] = cfg.model()?.generators();
    let p = &cfg.params;
    let errors = rec.phase("compare", || {
        Ok(compare_semigroups(&l0, &l1, &l2, &p.gammas, p.t_end)?)
    })?;
    let mut table = Table::new(["gamma", "error"]);
    for &(g, e) in &errors {
        table.push_numbers([g, e]);
    }
    table.write(&rec.path("compare.csv"))?;
    print!("{}", table.render());
    Ok(())
}

fn trajectory_table(traj: &Trajectory, save_states: bool) -> Table {
    let d = traj.states[0].dim();
    let mut header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..d).map(|i| format!("p{i}")))
        .chain(std::iter::once("offdiag_norm".to_string()))
        .collect();
    if save_states {
        for i in 0..d {
            for j in 0..d {
                header.push(format!("re_{i}_{j}"));
                header.push(format!("im_{i}_{j}"));
            }
        }
    }
    let mut table = Table::new(header);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let m = s.matrix();
        let mut row: Vec<f64> = std::iter::once(*t)
            .chain((0..d).map(|i| m[(i, i)].re))
            .chain(std::iter::once(metrics::offdiag_hs_norm(m)))
            .collect();
        if save_states {
            for i in 0..d {
                for j in 0..d {
                    row.extend([m[(i, j)].re, m[(i, j)].im]);
                }
            }
        }
        table.push_numbers(row);
    }
    table
}

fn ensemble_table(stats: &EnsembleStats, d: usize) -> Table {
    let header = std::iter::once("t".to_string())
        .chain((0..d).map(|i| format!("mean_p{i}")))
        .chain((0..d).map(|i| format!("se_p{i}")))
        .chain([
            "mean_offdiag_norm".to_string(),
            "se_offdiag_norm".to_string(),
        ]);
    let mut table = Table::new(header);
    let off = &stats.observables[0];
    for (k, &t) in stats.times.iter().enumerate() {
        let row = std::iter::once(t)
            .chain((0..d).map(|i| stats.mean[k][(i, i)].re))
            .chain((0..d).map(|i| stats.std_err[k][(i, i)].re))
            .chain([off.mean[k], off.std_err[k]]);
        table.push_numbers(row);
    }
    table
}

fn sim(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> CliResult<()> {
    let m = cfg.model()?;
    let p = &cfg.params;
    let rho0 = p.rho0.build(m.dim())?;
    let integ = Integrator::new(&m, p.t_end, p.h)?;
    log::info!(
        "gamma {} h {} steps {}",
        m.gamma(),
        integ.step_size(),
        integ.n_steps()
    );
    let seeds: Vec<u64> = (0..p.n).map(|i| p.seed.wrapping_add(i as u64)).collect();
    let trajs = rec.phase("simulate", || {
        Ok(sde::par_map_ordered(p.n, |i| {
            integ.trajectory(&rho0, seeds[i], p.stride)
        })?)
    })?;
    rec.seeds(seeds.iter().copied());
    let paths: Vec<_> = (0..p.n)
        .map(|i| rec.path(&format!("traj_{i:04}.csv")))
        .collect();
    rec.phase("write", || {
        trajs
            .iter()
            .zip(&paths)
            .try_for_each(|(t, path)| trajectory_table(t, p.save_states).write(path))
    })?;
    let stats = EnsembleStats::from_trajectories(&trajs, &[Observable::offdiag_norm()])?;
    ensemble_table(&stats, m.dim()).write(&rec.path("ensemble.csv"))?;
    Ok(())
}

const MARGINAL_GRID: usize = 101;

fn load_rates(cfg: &ExperimentConfig) -> CliResult<MarkovGenerator> {
    match cfg.params.rates.as_deref() {
        None | Some("from-model") => Ok(transition_rates(&cfg.model()?)?),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("reading {path}: {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::validation(format!("rates file {path}: {e}")))
        }
    }
}

fn jump_paths(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> CliResult<()> {
    let p = &cfg.params;
    let t = load_rates(cfg)?;
    let mu = match &p.mu {
        Some(mu) => mu.clone(),
        None => initial_distribution(&p.rho0.build(t.dim())?),
    };
    let paths = rec.phase("simulate", || {
        Ok(jump::simulate_jumps(&t, &mu, p.t_end, p.n, p.seed)?)
    })?;
    rec.seeds((0..p.n).map(|i| p.seed.wrapping_add(i as u64)));

    let mut table = Table::new(["path", "t", "state"]);
    for (k, path) in paths.iter().enumerate() {
        let times = std::iter::once(0.0).chain(path.jump_times.iter().copied());
        for (time, &state) in times.zip(&path.states) {
            table.push_cells(vec![k.to_string(), format_number(time), state.to_string()]);
        }
    }
    table.write(&rec.path("jump_paths.csv"))?;

    let d = t.dim();
    let header = std::iter::once("t".to_string())
        .chain((0..d).map(|i| format!("p{i}")))
        .chain((0..d).map(|i| format!("occupation{i}")));
    let mut law = Table::new(header);
    for k in 0..MARGINAL_GRID {
        let time = p.t_end * k as f64 / (MARGINAL_GRID - 1) as f64;
        let exact = marginal(&t, &mu, time)?;
        let occ = jump::empirical_occupation(&paths, d, time);
        law.push_numbers(std::iter::once(time).chain(exact).chain(occ));
    }
    law.write(&rec.path("marginal.csv"))?;
    let jumps: Vec<f64> = paths.iter().map(|p| p.n_jumps() as f64).collect();
    let e = Estimate::from_samples(&jumps);
    println!(
        "{} paths, mean jumps {} (se {})",
        p.n,
        format_number(e.value),
        format_number(e.std_err)
    );
    Ok(())
}

/// One trajectory read back from a `sim` CSV.
struct LoadedTrajectory {
    times: Vec<f64>,
    diagonals: Vec<Vec<f64>>,
    offdiag: Vec<f64>,
    states: Option<Vec<CMatrix>>,
}

impl LoadedTrajectory {
    fn end(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    fn read(path: &str) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {path}: {e}")))?;
        let bad = |msg: String| CliError::validation(format!("{path}: {msg}"));
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .split(',')
            .collect();
        let d = header.iter().filter(|h| h.starts_with('p')).count();
        let expected: Vec<String> = std::iter::once("t".to_string())
            .chain((0..d).map(|i| format!("p{i}")))
            .chain(std::iter::once("offdiag_norm".to_string()))
            .collect();
        if d == 0
            || header.len() < d + 2
            || header[..d + 2] != expected.iter().map(String::as_str).collect::<Vec<_>>()[..]
        {
            return Err(bad(format!("expected columns {}", expected.join(","))));
        }
        let has_states = header.len() == d + 2 + 2 * d * d;
        let mut out = LoadedTrajectory {
            times: Vec::new(),
            diagonals: Vec::new(),
            offdiag: Vec::new(),
            states: has_states.then(Vec::new),
        };
        for (n, line) in lines.enumerate() {
            let cells = line
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| bad(format!("line {}: {e}", n + 2)))?;
            if cells.len() != header.len() {
                return Err(bad(format!("line {} has {} cells", n + 2, cells.len())));
            }
            out.times.push(cells[0]);
            out.diagonals.push(cells[1..=d].to_vec());
            out.offdiag.push(cells[d + 1]);
            if let Some(states) = out.states.as_mut() {
                let raw = &cells[d + 2..];
                states.push(CMatrix::from_fn(d, d, |i, j| {
                    let k = 2 * (i * d + j);
                    num_complex::Complex64::new(raw[k], raw[k + 1])
                }));
            }
        }
        if out.times.is_empty() {
            return Err(bad("no samples".into()));
        }
        Ok(out)
    }

    /// Measure of the times spent at distance `≥ ε` from every pointer
    /// state, using `|ρ - E_ii|² = |diag ρ|² + |Π⊥ρ|² + 1 - 2ρ_ii`.
    fn time_outside(&self, epsilon: f64) -> f64 {
        let outside = |k: usize| {
            let diag = &self.diagonals[k];
            let sq: f64 = diag.iter().map(|x| x * x).sum::<f64>() + self.offdiag[k].powi(2);
            let top = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (sq + 1.0 - 2.0 * top).max(0.0).sqrt() >= epsilon
        };
        let n = self.times.len();
        (0..n)
            .filter(|&k| outside(k))
            .map(|k| {
                if k + 1 < n {
                    self.times[k + 1] - self.times[k]
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn diagonal_path(&self) -> CliResult<PathFunction<Vec<f64>>> {
        Ok(PathFunction::new(
            self.times.clone(),
            self.diagonals.clone(),
            self.end(),
        )?)
    }

    fn state_path(&self) -> Option<CliResult<PathFunction<CMatrix>>> {
        self.states.as_ref().map(|s| {
            Ok(PathFunction::new(
                self.times.clone(),
                s.clone(),
                self.end(),
            )?)
        })
    }
}

#[derive(Serialize)]
struct MzSummary {
    horizon: f64,
    truncation_bound: f64,
    /// `full_state` when full states were available, `diagonal` otherwise.
    compared: &'static str,
    distances: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct TimeOutside {
    epsilon: f64,
    per_trajectory: Vec<f64>,
    mean: Estimate,
}

#[derive(Serialize)]
struct LawSummary {
    t: f64,
    radius: f64,
    empirical: Vec<f64>,
    unassigned: f64,
    jump_marginal: Vec<f64>,
    total_variation: f64,
}

#[derive(Serialize)]
struct Diagnostics {
    n_trajectories: usize,
    time_outside: TimeOutside,
    mz: MzSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditional_variation: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    law: Option<LawSummary>,
}

fn pairwise<V: qjump_core::PathValue>(
    paths: &[PathFunction<V>],
    horizon: f64,
) -> CliResult<(Vec<Vec<f64>>, f64)> {
    let mut bound = (-horizon).exp();
    let mut out = vec![vec![0.0; paths.len()]; paths.len()];
    for a in 0..paths.len() {
        for b in (a + 1)..paths.len() {
            let MzDistance {
                value,
                truncation_bound,
            } = metrics::mz_distance(&paths[a], &paths[b], horizon)?;
            out[a][b] = value;
            out[b][a] = value;
            bound = truncation_bound;
        }
    }
    Ok((out, bound))
}

fn diagnostics(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> CliResult<()> {
    let p = &cfg.params;
    if p.trajectories.is_empty() {
        return Err(CliError::validation(
            "`metrics` needs at least one trajectory file",
        ));
    }
    let trajs = rec.phase("read", || {
        p.trajectories
            .iter()
            .map(|t| LoadedTrajectory::read(t))
            .collect::<CliResult<Vec<_>>>()
    })?;
    let dims: Vec<usize> = trajs.iter().map(|t| t.diagonals[0].len()).collect();
    if dims.iter().any(|&d| d != dims[0]) {
        return Err(CliError::validation(
            "trajectories have different dimensions",
        ));
    }
    let d = dims[0];

    let per_trajectory: Vec<f64> = trajs.iter().map(|t| t.time_outside(p.epsilon)).collect();
    let time_outside = TimeOutside {
        epsilon: p.epsilon,
        mean: Estimate::from_samples(&per_trajectory),
        per_trajectory,
    };

    let state_paths = trajs
        .iter()
        .map(LoadedTrajectory::state_path)
        .collect::<Option<CliResult<Vec<_>>>>()
        .transpose()?;
    let (distances, truncation_bound, compared) = match &state_paths {
        Some(paths) => {
            let (m, b) = pairwise(paths, p.mz_horizon)?;
            (m, b, "full_state")
        }
        None => {
            let paths = trajs
                .iter()
                .map(|t| t.diagonal_path())
                .collect::<CliResult<Vec<_>>>()?;
            let (m, b) = pairwise(&paths, p.mz_horizon)?;
            (m, b, "diagonal")
        }
    };

    let same_grid = trajs.iter().all(|t| t.times == trajs[0].times);
    if same_grid {
        let mut table = Table::new(["t", "mean_offdiag_norm", "se_offdiag_norm"]);
        for (k, &t) in trajs[0].times.iter().enumerate() {
            let e = Estimate::from_samples(&trajs.iter().map(|x| x.offdiag[k]).collect::<Vec<_>>());
            table.push_numbers([t, e.value, e.std_err]);
        }
        table.write(&rec.path("offdiag.csv"))?;
    } else {
        log::warn!("trajectories are on different grids; skipping the off-diagonal decay table");
    }

    let model = cfg.model.as_ref().map(|_| cfg.model()).transpose()?;
    if model.as_ref().is_some_and(|m| m.dim() != d) {
        return Err(CliError::validation(
            "model dimension differs from the trajectories",
        ));
    }
    let mut conditional_variation = None;
    let mut tau = None;
    let mut law = None;
    if let (Some(m), Some(paths)) = (&model, &state_paths) {
        let end = trajs
            .iter()
            .map(LoadedTrajectory::end)
            .fold(f64::INFINITY, f64::min);
        let t = p.tau.unwrap_or(end);
        let ensemble: Vec<Trajectory> = trajs
            .iter()
            .map(|x| Trajectory {
                times: x.times.clone(),
                states: x
                    .states
                    .as_ref()
                    .expect("states present")
                    .iter()
                    .cloned()
                    .map(DensityMatrix::new_unchecked)
                    .collect(),
                seed: 0,
                h: f64::NAN,
                t_end: x.end(),
            })
            .collect();
        conditional_variation = Some(rec.phase("conditional_variation", || {
            Ok(metrics::conditional_variation(m, &ensemble, t)?)
        })?);
        tau = Some(t);
        let rates = transition_rates(m)?;
        let mu = initial_distribution(&DensityMatrix::new_unchecked(paths[0].values()[0].clone()));
        let (empirical, unassigned) = metrics::empirical_marginal(paths, end, p.radius)?;
        let jump_marginal = marginal(&rates, &mu, end)?;
        law = Some(LawSummary {
            t: end,
            radius: p.radius,
            total_variation: metrics::total_variation(&empirical, unassigned, &jump_marginal),
            empirical,
            unassigned,
            jump_marginal,
        });
    } else if model.is_some() {
        log::warn!("trajectory files carry no full states (rerun `sim` with --save-states); skipping V_tau and law checks");
    }

    let diag = Diagnostics {
        n_trajectories: trajs.len(),
        time_outside,
        mz: MzSummary {
            horizon: p.mz_horizon,
            truncation_bound,
            compared,
            distances,
        },
        conditional_variation,
        tau,
        law,
    };
    write_json(&rec.path("metrics.json"), &diag)?;
    println!(
        "{} trajectories, mean time outside eps={} balls: {} (se {})",
        diag.n_trajectories,
        format_number(p.epsilon),
        format_number(diag.time_outside.mean.value),
        format_number(diag.time_outside.mean.std_err)
    );
    Ok(())
}

const FIG1_DEFAULT_GAMMA: f64 = 1e4;
const FIG1_RADIUS: f64 = 0.2;

#[derive(Serialize)]
struct Fig1Summary {
    gamma: f64,
    h: f64,
    steps: usize,
    t_end: f64,
    smooth: usize,
    /// Fraction of smoothed samples within 0.2 of {1, 2, 3}.
    concentrated_fraction: f64,
}

fn smoothed_column(times: &[f64], values: &[f64], end: f64, window: usize) -> CliResult<Vec<f64>> {
    let path = PathFunction::new(times.to_vec(), values.to_vec(), end)?;
    let smooth = metrics::smooth(&path, window)?;
    Ok(std::iter::repeat(f64::NAN)
        .take(window - 1)
        .chain(smooth.values().iter().copied())
        .collect())
}

fn fig1(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> CliResult<()> {
    let p = &cfg.params;
    let gamma = p.gamma.unwrap_or(FIG1_DEFAULT_GAMMA);
    let h = sde::default_step(p.h, gamma);
    let t_end = p.steps as f64 * h;
    let model = models::fig1(gamma);
    let integ = Integrator::new(&model, t_end, h)?;
    if p.smooth > integ.n_steps() + 1 {
        return Err(CliError::validation(format!(
            "smoothing window {} exceeds the {} samples",
            p.smooth,
            integ.n_steps() + 1
        )));
    }
    let rho0 = p.rho0.build(3)?;
    let n = integ.n_steps() + 1;
    let mut times = Vec::with_capacity(n);
    let mut x: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
    rec.phase("simulate", || {
        Ok(integ.run(&rho0, p.seed, |_, t, rho| {
            times.push(t);
            for (i, xi) in x.iter_mut().enumerate() {
                xi.push(rho[(i, i)].re);
            }
        })?)
    })?;
    rec.seeds([p.seed]);
    let weighted: Vec<f64> = (0..n)
        .map(|k| x[0][k] + 2.0 * x[1][k] + 3.0 * x[2][k])
        .collect();
    let mut fraction = 0.0;
    let columns = [
        ("x1", &x[0]),
        ("x2", &x[1]),
        ("x3", &x[2]),
        ("weighted", &weighted),
    ];
    let paths: Vec<_> = columns
        .iter()
        .map(|(name, _)| rec.path(&format!("fig1_{name}.csv")))
        .collect();
    rec.phase("write", || {
        for ((name, raw), path) in columns.iter().zip(&paths) {
            let smooth = smoothed_column(&times, raw, t_end, p.smooth)?;
            if *name == "weighted" {
                let tail = &smooth[p.smooth - 1..];
                let near = tail.iter().filter(|s| {
                    (*s - s.round()).abs() <= FIG1_RADIUS && (1.0..=3.0).contains(&s.round())
                });
                fraction = near.count() as f64 / tail.len() as f64;
            }
            emit_plot_data(&times, &[("raw", raw), ("smoothed", &smooth)], path, p.svg)?;
        }
        Ok(())
    })?;
    let summary = Fig1Summary {
        gamma,
        h: integ.step_size(),
        steps: integ.n_steps(),
        t_end,
        smooth: p.smooth,
        concentrated_fraction: fraction,
    };
    write_json(&rec.path("fig1_summary.json"), &summary)?;
    println!("{}", to_json(&summary));
    Ok(())
}
