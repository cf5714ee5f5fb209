//! Euler–Maruyama integration of the stochastic master equation
//!
//! ```text
//! dρ = L_γ(ρ) dt + Σ_α γ^{α/2} Σ_k σ_k^{(α)}(ρ) dW_k^α,
//! σ_k(ρ) = √η(k) (L_k ρ + ρ L_k^* - tr[(L_k + L_k^*) ρ] ρ),
//! ```
//!
//! followed by a projection back onto density matrices after every step.
//!
//! Randomness: every Brownian coordinate `W_k^α` of trajectory `seed` owns a
//! ChaCha8 stream keyed by `(seed, (α << 32) | k)`; increments are
//! `√h · z` with `z` drawn by `rand_distr::StandardNormal`. Channels with
//! `η(k) = 0` never read their stream.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};
use crate::metrics::PathFunction;
use crate::qnd::ThreeScaleModel;
use crate::superop::{gksl_apply, DensityMatrix, GkslSpec};
use crate::tol;

/// Upper bound on the step size relative to the fast scale: `h ≤ 10⁻² / γ²`.
pub const STEP_RULE_CONSTANT: f64 = 1e-2;

/// `min(h_user, 10⁻² / γ²)`.
pub fn default_step(h_user: f64, gamma: f64) -> f64 {
    h_user.min(STEP_RULE_CONSTANT / (gamma * gamma))
}

/// Number of steps covering `[0, t_end]` with steps no longer than `h`.
pub fn step_count(t_end: f64, h: f64) -> usize {
    ((t_end / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Stream identifier of Brownian coordinate `k` at level `α`.
pub fn stream_id(alpha: usize, k: usize) -> u64 {
    ((alpha as u64) << 32) | k as u64
}

/// Brownian increments for one step, one entry per Kraus operator of each
/// level.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub dw: [Vec<f64>; 3],
}

impl NoiseIncrement {
    pub fn zero(model: &ThreeScaleModel) -> Self {
        NoiseIncrement {
            dw: [0, 1, 2].map(|a| vec![0.0; model.level(a).kraus().len()]),
        }
    }

    fn check(&self, model: &ThreeScaleModel) -> Result<()> {
        for a in 0..3 {
            let expected = model.level(a).kraus().len();
            if self.dw[a].len() != expected {
                return Err(Error::dim(format!("dW{a}"), expected, self.dw[a].len()));
            }
        }
        Ok(())
    }
}

/// Saved states of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub seed: u64,
    /// Step size actually used.
    pub h: f64,
    pub t_end: f64,
}

impl Trajectory {
    pub fn path(&self) -> PathFunction<CMatrix> {
        PathFunction::new(
            self.times.clone(),
            self.states.iter().map(|s| s.matrix().clone()).collect(),
            self.t_end,
        )
        .expect("trajectory grid is increasing")
    }
}

fn check_state_dim(model: &ThreeScaleModel, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != model.dim() {
        return Err(Error::dim("density matrix", model.dim(), rho.dim()));
    }
    Ok(())
}

/// `σ_k(ρ)` for every Kraus operator of `spec`.
pub fn volatility(spec: &GkslSpec, rho: &DensityMatrix) -> Result<Vec<CMatrix>> {
    if rho.dim() != spec.dim() {
        return Err(Error::dim("density matrix", spec.dim(), rho.dim()));
    }
    let r = rho.matrix();
    Ok(spec
        .channels()
        .map(|(l, eta)| {
            if eta == 0.0 {
                return CMatrix::zeros(r.nrows(), r.ncols());
            }
            let a = l * r;
            let mean = 2.0 * linalg::trace(&a).re;
            (&a + a.adjoint() - r * Complex64::new(mean, 0.0)) * Complex64::new(eta.sqrt(), 0.0)
        })
        .collect())
}

/// `L_γ(ρ)`.
pub fn drift(model: &ThreeScaleModel, rho: &DensityMatrix) -> Result<CMatrix> {
    check_state_dim(model, rho)?;
    let g = model.gamma();
    let mut out = CMatrix::zeros(model.dim(), model.dim());
    for (a, scale) in [(0, 1.0), (1, g), (2, g * g)] {
        out += gksl_apply(model.level(a), rho.matrix())? * Complex64::new(scale, 0.0);
    }
    Ok(out)
}

/// One Euler–Maruyama step with given increments, then projection.
///
/// Straightforward dense evaluation; [`Integrator`] is the fast path.
pub fn step(
    model: &ThreeScaleModel,
    rho: &DensityMatrix,
    h: f64,
    dw: &NoiseIncrement,
) -> Result<DensityMatrix> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "step size must be positive, got {h}"
        )));
    }
    check_state_dim(model, rho)?;
    dw.check(model)?;
    let g = model.gamma();
    let mut next = rho.matrix() + drift(model, rho)? * Complex64::new(h, 0.0);
    for a in 0..3 {
        let scale = g.powf(a as f64 / 2.0);
        for (sigma, w) in volatility(model.level(a), rho)?.iter().zip(&dw.dw[a]) {
            next += sigma * Complex64::new(scale * w, 0.0);
        }
    }
    if !project(&mut next) {
        return Err(Error::BlowUp { step: 0, time: h });
    }
    Ok(DensityMatrix::new_unchecked(next))
}

/// Entries below this magnitude are flushed to zero after each step. Strongly
/// damped coherences otherwise decay into subnormal floats, which are very
/// slow to compute with.
pub const FLUSH_TO_ZERO: f64 = 1e-150;

#[inline]
fn flush(x: f64) -> f64 {
    if x.abs() < FLUSH_TO_ZERO {
        0.0
    } else {
        x
    }
}

/// Hermitize, clip negative eigenvalues if the minimum is below `-tol::PSD`,
/// renormalize the trace. Returns false on non-finite input or vanishing trace.
pub fn project(m: &mut CMatrix) -> bool {
    let d = m.nrows();
    let s = m.as_mut_slice();
    let mut magnitude = 0.0;
    for j in 0..d {
        for i in 0..j {
            let v = (s[i + j * d] + s[j + i * d].conj()) * 0.5;
            let v = Complex64::new(flush(v.re), flush(v.im));
            magnitude += v.re.abs() + v.im.abs();
            s[i + j * d] = v;
            s[j + i * d] = v.conj();
        }
        let x = flush(s[j + j * d].re);
        magnitude += x.abs();
        s[j + j * d] = Complex64::new(x, 0.0);
    }
    if !magnitude.is_finite() {
        return false;
    }
    if !shifted_cholesky_ok(s, d, tol::PSD) {
        clip_negative_eigenvalues(m);
    }
    let s = m.as_mut_slice();
    let tr: f64 = (0..d).map(|i| s[i + i * d].re).sum();
    if !(tr.is_finite() && tr > 0.0) {
        return false;
    }
    let inv = 1.0 / tr;
    s.iter_mut().for_each(|z| *z *= inv);
    true
}

fn clip_negative_eigenvalues(m: &mut CMatrix) {
    let d = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0), 0.0));
    let v = &eig.eigenvectors;
    *m = v * CMatrix::from_diagonal(&clipped) * v.adjoint();
    for j in 0..d {
        for i in 0..j {
            m[(j, i)] = m[(i, j)].conj();
        }
        m[(j, j)].im = 0.0;
    }
}

/// Whether the Hermitian matrix `m + shift·Id` (column-major, `d × d`) admits
/// a Cholesky factor, i.e. `λ_min(m) > -shift` up to rounding.
fn shifted_cholesky_ok(m: &[Complex64], d: usize, shift: f64) -> bool {
    const STACK: usize = 4;
    let mut stack = [ZERO; STACK * STACK];
    let mut heap;
    let l: &mut [Complex64] = if d <= STACK {
        &mut stack[..d * d]
    } else {
        heap = vec![ZERO; d * d];
        &mut heap
    };
    for j in 0..d {
        let mut diag = m[j + j * d].re + shift;
        for k in 0..j {
            diag -= l[j + k * d].norm_sqr();
        }
        if !(diag > 0.0) {
            return false;
        }
        let ljj = diag.sqrt();
        let inv = 1.0 / ljj;
        l[j + j * d] = Complex64::new(ljj, 0.0);
        for i in j + 1..d {
            let mut s = m[i + j * d];
            for k in 0..j {
                s -= l[i + k * d] * l[j + k * d].conj();
            }
            l[i + j * d] = s * inv;
        }
    }
    true
}

/// Compressed sparse rows of a `d² × d²` generator.
#[derive(Debug, Clone)]
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl Csr {
    fn from_dense(a: &CMatrix) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                let v = a[(r, c)];
                if v != ZERO {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr {
            row_ptr,
            cols,
            vals,
        }
    }

    /// `out += h · A x`.
    #[inline]
    fn add_scaled_product(&self, h: f64, x: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            *o += acc * h;
        }
    }
}

/// Kraus operator of a read channel.
#[derive(Debug, Clone)]
enum KrausForm {
    /// Diagonal entries; then `σ(ρ)_{rc} = (L_rr + conj(L_cc) - m) ρ_{rc}`.
    Diagonal(Vec<Complex64>),
    /// Nonzero entries `(i, j, L_ij)`.
    Sparse(Vec<(usize, usize, Complex64)>),
}

/// A read channel with noise scale `√η γ^{α/2}`.
#[derive(Debug, Clone)]
struct Channel {
    scale: f64,
    kraus: KrausForm,
    stream: u64,
}

/// Precompiled stepper for one model and one time grid.
#[derive(Debug, Clone)]
pub struct Integrator {
    dim: usize,
    gamma: f64,
    t_end: f64,
    h: f64,
    n_steps: usize,
    drift: Csr,
    channels: Vec<Channel>,
}

impl Integrator {
    /// Grid of `⌈t_end / h⌉` equal steps, with `h = default_step(h_user, γ)`.
    pub fn new(model: &ThreeScaleModel, t_end: f64, h_user: f64) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "t_end must be positive, got {t_end}"
            )));
        }
        if !(h_user > 0.0) {
            return Err(Error::InvalidInput(format!(
                "step size must be positive, got {h_user}"
            )));
        }
        let gamma = model.gamma();
        let n_steps = step_count(t_end, default_step(h_user, gamma));
        let h = t_end / n_steps as f64;
        let drift = Csr::from_dense(model.l_gamma().matrix());
        let mut channels = Vec::new();
        for a in 0..3 {
            let level_scale = gamma.powf(a as f64 / 2.0);
            for (k, (l, eta)) in model.level(a).channels().enumerate() {
                if eta == 0.0 {
                    continue;
                }
                let entries: Vec<_> = (0..l.ncols())
                    .flat_map(|j| (0..l.nrows()).map(move |i| (i, j)))
                    .filter(|&(i, j)| l[(i, j)] != ZERO)
                    .map(|(i, j)| (i, j, l[(i, j)]))
                    .collect();
                if entries.is_empty() {
                    continue;
                }
                let kraus = if entries.iter().all(|&(i, j, _)| i == j) {
                    KrausForm::Diagonal((0..l.nrows()).map(|i| l[(i, i)]).collect())
                } else {
                    KrausForm::Sparse(entries)
                };
                channels.push(Channel {
                    scale: eta.sqrt() * level_scale,
                    kraus,
                    stream: stream_id(a, k),
                });
            }
        }
        Ok(Integrator {
            dim: model.dim(),
            gamma,
            t_end,
            h,
            n_steps,
            drift,
            channels,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Time after `k` steps; exactly `t_end` after the last one.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t_end * k as f64 / self.n_steps as f64
        }
    }

    /// Runs one trajectory, calling `observe(k, t_k, ρ_k)` for `k = 0..=n_steps`.
    pub fn run<F>(&self, rho0: &DensityMatrix, seed: u64, mut observe: F) -> Result<()>
    where
        F: FnMut(usize, f64, &CMatrix),
    {
        if rho0.dim() != self.dim {
            return Err(Error::dim("density matrix", self.dim, rho0.dim()));
        }
        let d = self.dim;
        let n = d * d;
        let mut rngs: Vec<ChaCha8Rng> = self
            .channels
            .iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c.stream);
                rng
            })
            .collect();
        let sqrt_h = self.h.sqrt();
        let mut rho = rho0.matrix().clone();
        let mut next = CMatrix::zeros(d, d);
        let mut a = vec![ZERO; n];
        observe(0, 0.0, &rho);
        for k in 1..=self.n_steps {
            {
                let x = rho.as_slice();
                let out = next.as_mut_slice();
                out.copy_from_slice(x);
                self.drift.add_scaled_product(self.h, x, out);
                for (c, rng) in self.channels.iter().zip(rngs.iter_mut()) {
                    let z: f64 = rng.sample(StandardNormal);
                    let coeff = c.scale * sqrt_h * z;
                    match &c.kraus {
                        KrausForm::Diagonal(l) => {
                            let m: f64 =
                                2.0 * (0..d).map(|i| (l[i] * x[i + i * d]).re).sum::<f64>();
                            for col in 0..d {
                                let lc = l[col].conj() - m;
                                for row in 0..d {
                                    out[row + col * d] += (l[row] + lc) * x[row + col * d] * coeff;
                                }
                            }
                        }
                        KrausForm::Sparse(entries) => {
                            // A = L ρ
                            a.iter_mut().for_each(|v| *v = ZERO);
                            for &(i, j, v) in entries {
                                for col in 0..d {
                                    a[i + col * d] += v * x[j + col * d];
                                }
                            }
                            let m = 2.0 * (0..d).map(|i| a[i + i * d].re).sum::<f64>();
                            // σ = A + A^* - 2 Re tr(A) ρ
                            for col in 0..d {
                                for row in 0..d {
                                    let s = a[row + col * d] + a[col + row * d].conj()
                                        - x[row + col * d] * m;
                                    out[row + col * d] += s * coeff;
                                }
                            }
                        }
                    }
                }
            }
            std::mem::swap(&mut rho, &mut next);
            if !project(&mut rho) {
                return Err(Error::BlowUp {
                    step: k,
                    time: self.time(k),
                });
            }
            observe(k, self.time(k), &rho);
        }
        Ok(())
    }

    /// States at every `stride`-th step, plus the final one.
    pub fn trajectory(&self, rho0: &DensityMatrix, seed: u64, stride: usize) -> Result<Trajectory> {
        if stride == 0 {
            return Err(Error::InvalidInput("save stride must be at least 1".into()));
        }
        let mut times = Vec::new();
        let mut states = Vec::new();
        let last = self.n_steps;
        self.run(rho0, seed, |k, t, rho| {
            if k % stride == 0 || k == last {
                times.push(t);
                states.push(DensityMatrix::new_unchecked(rho.clone()));
            }
        })?;
        Ok(Trajectory {
            times,
            states,
            seed,
            h: self.h,
            t_end: self.t_end,
        })
    }
}

pub fn simulate_trajectory(
    model: &ThreeScaleModel,
    rho0: &DensityMatrix,
    t_end: f64,
    h: f64,
    seed: u64,
    save_stride: usize,
) -> Result<Trajectory> {
    check_state_dim(model, rho0)?;
    Integrator::new(model, t_end, h)?.trajectory(rho0, seed, save_stride)
}

/// Evaluates `f(i)` for `i in 0..n` in parallel; results keep index order.
pub fn par_map_ordered<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Scalar function of the state, tracked across an ensemble.
pub struct Observable {
    pub name: String,
    func: Box<dyn Fn(&CMatrix) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .finish()
    }
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        func: impl Fn(&CMatrix) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Observable {
            name: name.into(),
            func: Box::new(func),
        }
    }

    /// `ρ_{i,i}` (0-based).
    pub fn population(i: usize) -> Self {
        Observable::new(format!("p{i}"), move |r| r[(i, i)].re)
    }

    /// Hilbert–Schmidt norm of the off-diagonal part.
    pub fn offdiag_norm() -> Self {
        Observable::new("offdiag_norm", crate::metrics::offdiag_hs_norm)
    }

    pub fn eval(&self, rho: &CMatrix) -> f64 {
        (self.func)(rho)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub name: String,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
}

/// Per-time ensemble statistics. Standard errors use the unbiased sample
/// variance and are zero for single-member ensembles. Complex entries carry
/// the standard error of the real part in `re` and of the imaginary part in
/// `im`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n: usize,
    pub times: Vec<f64>,
    pub mean: Vec<CMatrix>,
    pub std_err: Vec<CMatrix>,
    pub observables: Vec<ObservableSeries>,
}

fn mean_and_se(samples: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = samples.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

impl EnsembleStats {
    /// Ordered reduction over trajectories sharing one time grid.
    pub fn from_trajectories(trajs: &[Trajectory], observables: &[Observable]) -> Result<Self> {
        let first = trajs
            .first()
            .ok_or_else(|| Error::InvalidInput("empty ensemble".into()))?;
        let n = trajs.len();
        let times = first.times.clone();
        if trajs.iter().any(|t| t.times != times) {
            return Err(Error::InvalidInput(
                "ensemble members have different time grids".into(),
            ));
        }
        let d = first.states[0].dim();
        let mut mean = Vec::with_capacity(times.len());
        let mut std_err = Vec::with_capacity(times.len());
        for s in 0..times.len() {
            let mut m = CMatrix::zeros(d, d);
            let mut e = CMatrix::zeros(d, d);
            for j in 0..d {
                for i in 0..d {
                    let re = trajs.iter().map(|t| t.states[s].matrix()[(i, j)].re);
                    let im = trajs.iter().map(|t| t.states[s].matrix()[(i, j)].im);
                    let (mr, er) = mean_and_se(re, n);
                    let (mi, ei) = mean_and_se(im, n);
                    m[(i, j)] = Complex64::new(mr, mi);
                    e[(i, j)] = Complex64::new(er, ei);
                }
            }
            mean.push(m);
            std_err.push(e);
        }
        let observables = observables
            .iter()
            .map(|o| {
                let values: Vec<Vec<f64>> = trajs
                    .iter()
                    .map(|t| t.states.iter().map(|s| o.eval(s.matrix())).collect())
                    .collect();
                let (mean, std_err) = (0..times.len())
                    .map(|s| mean_and_se(values.iter().map(|v| v[s]), n))
                    .unzip();
                ObservableSeries {
                    name: o.name.clone(),
                    mean,
                    std_err,
                }
            })
            .collect();
        Ok(EnsembleStats {
            n,
            times,
            mean,
            std_err,
            observables,
        })
    }
}

/// `n` trajectories with seeds `base_seed, …, base_seed + n - 1`.
pub fn simulate_many(
    model: &ThreeScaleModel,
    rho0: &DensityMatrix,
    n: usize,
    t_end: f64,
    h: f64,
    base_seed: u64,
    save_stride: usize,
) -> Result<Vec<Trajectory>> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "ensemble size must be at least 1".into(),
        ));
    }
    check_state_dim(model, rho0)?;
    let integrator = Integrator::new(model, t_end, h)?;
    par_map_ordered(n, |i| {
        integrator.trajectory(rho0, base_seed.wrapping_add(i as u64), save_stride)
    })
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_ensemble(
    model: &ThreeScaleModel,
    rho0: &DensityMatrix,
    n: usize,
    t_end: f64,
    h: f64,
    base_seed: u64,
    save_stride: usize,
    observables: &[Observable],
) -> Result<EnsembleStats> {
    let trajs = simulate_many(model, rho0, n, t_end, h, base_seed, save_stride)?;
    EnsembleStats::from_trajectories(&trajs, observables)
}

/// Autonomous SDE for the diagonal of the three-level weak-coupling model:
///
/// ```text
/// dX = R X dt + 2γ (L X - ⟨L X, 1⟩ X) dW,  L = diag(1, 2, 3), R_ij = 1 - 3 δ_ij.
/// ```
///
/// Returns `n_steps + 1` points, one per step. After each step coordinates
/// are clipped at zero if any falls below `-tol::PSD`, then renormalized to
/// sum 1. The single Brownian motion uses stream 0 of `seed`.
pub fn simulate_fig1_reduced(
    gamma: f64,
    n_steps: usize,
    h: f64,
    seed: u64,
    x0: [f64; 3],
) -> Result<PathFunction<Vec<f64>>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "step size must be positive, got {h}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let sqrt_h = h.sqrt();
    let l = [1.0, 2.0, 3.0];
    let mut x = x0;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    values.push(x.to_vec());
    for k in 1..=n_steps {
        let z: f64 = rng.sample(StandardNormal);
        let dw = sqrt_h * z;
        let total: f64 = x.iter().sum();
        let mean_l: f64 = (0..3).map(|i| l[i] * x[i]).sum();
        let mut next = [0.0; 3];
        for i in 0..3 {
            // (R x)_i = Σ_j x_j - 3 x_i
            let rx = total - 3.0 * x[i];
            next[i] = x[i] + rx * h + 2.0 * gamma * (l[i] * x[i] - mean_l * x[i]) * dw;
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                step: k,
                time: k as f64 * h,
            });
        }
        if next.iter().any(|&v| v < -tol::PSD) {
            next.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        let s: f64 = next.iter().sum();
        if !(s > 0.0) {
            return Err(Error::BlowUp {
                step: k,
                time: k as f64 * h,
            });
        }
        next.iter_mut().for_each(|v| *v /= s);
        x = next;
        times.push(k as f64 * h);
        values.push(x.to_vec());
    }
    PathFunction::new(times, values, n_steps as f64 * h)
}

/// Diagonal real parts of `ρ` as a vector.
pub fn diagonal(rho: &CMatrix) -> DVector<f64> {
    DVector::from_fn(rho.nrows(), |i, _| rho[(i, i)].re)
}
