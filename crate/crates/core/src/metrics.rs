//! Path diagnostics. Paths are piecewise constant between grid points and
//! hold their last value up to (and beyond) their end time. Norms are
//! Hilbert–Schmidt.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::qnd::ThreeScaleModel;
use crate::sde::Trajectory;

/// Values a path can take: a vector space with a norm.
pub trait PathValue: Clone {
    /// Shape used for compatibility checks.
    fn shape(&self) -> (usize, usize);
    fn distance(&self, other: &Self) -> f64;
    fn zeros_like(&self) -> Self;
    fn add_assign(&mut self, other: &Self);
    fn sub_assign(&mut self, other: &Self);
    fn scaled(&self, s: f64) -> Self;
}

impl PathValue for f64 {
    fn shape(&self) -> (usize, usize) {
        (1, 1)
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign(&mut self, other: &Self) {
        *self -= other;
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
}

impl PathValue for Vec<f64> {
    fn shape(&self) -> (usize, usize) {
        (self.len(), 1)
    }
    fn distance(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn add_assign(&mut self, other: &Self) {
        self.iter_mut().zip(other).for_each(|(a, b)| *a += b);
    }
    fn sub_assign(&mut self, other: &Self) {
        self.iter_mut().zip(other).for_each(|(a, b)| *a -= b);
    }
    fn scaled(&self, s: f64) -> Self {
        self.iter().map(|a| a * s).collect()
    }
}

impl PathValue for CMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }
    fn distance(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
    fn zeros_like(&self) -> Self {
        CMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign(&mut self, other: &Self) {
        *self -= other;
    }
    fn scaled(&self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }
}

/// Càdlàg step function: `values[k]` on `[times[k], times[k+1])`, the last
/// value on `[times[n-1], end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFunction<V> {
    times: Vec<f64>,
    values: Vec<V>,
    end: f64,
}

impl<V: PathValue> PathFunction<V> {
    pub fn new(times: Vec<f64>, values: Vec<V>, end: f64) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidInput("path has no samples".into()));
        }
        if times.len() != values.len() {
            return Err(Error::dim("path values", times.len(), values.len()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || !times[0].is_finite() {
            return Err(Error::InvalidInput(
                "path grid must be strictly increasing".into(),
            ));
        }
        let shape = values[0].shape();
        if let Some(v) = values.iter().find(|v| v.shape() != shape) {
            return Err(Error::dim(
                "path value shape",
                shape.0 * shape.1,
                v.shape().0 * v.shape().1,
            ));
        }
        if !(end >= *times.last().unwrap()) {
            return Err(Error::InvalidInput(
                "path end precedes its last sample".into(),
            ));
        }
        Ok(PathFunction { times, values, end })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at `t`; times before the first sample read the first value.
    pub fn value_at(&self, t: f64) -> &V {
        let k = self.times.partition_point(|&s| s <= t);
        &self.values[k.saturating_sub(1)]
    }

    pub fn map<W: PathValue>(&self, f: impl Fn(&V) -> W) -> PathFunction<W> {
        PathFunction {
            times: self.times.clone(),
            values: self.values.iter().map(f).collect(),
            end: self.end,
        }
    }

    /// Holding intervals `(start, stop, value)` clipped to `[0, horizon]`.
    fn intervals(&self, horizon: f64) -> impl Iterator<Item = (f64, f64, &V)> + '_ {
        let n = self.times.len();
        (0..n).filter_map(move |k| {
            let a = if k == 0 {
                0.0f64.min(self.times[0])
            } else {
                self.times[k]
            };
            let b = if k + 1 < n {
                self.times[k + 1]
            } else {
                self.end
            };
            let (a, b) = (a.max(0.0), b.min(horizon));
            (b > a).then_some((a, b, &self.values[k]))
        })
    }
}

/// Meyer–Zheng distance with the neglected tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MzDistance {
    pub value: f64,
    /// `e^{-t_max}`, an upper bound on the truncated part of the integral.
    pub truncation_bound: f64,
}

pub const DEFAULT_MZ_HORIZON: f64 = 30.0;

/// `∫_0^{t_max} min(1, |w1(t) - w2(t)|) e^{-t} dt`, integrated exactly over
/// the merged grid. Both paths hold their last value past their end.
pub fn mz_distance<V: PathValue>(
    w1: &PathFunction<V>,
    w2: &PathFunction<V>,
    t_max: f64,
) -> Result<MzDistance> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    let (s1, s2) = (w1.values[0].shape(), w2.values[0].shape());
    if s1 != s2 {
        return Err(Error::dim("path value shape", s1.0 * s1.1, s2.0 * s2.1));
    }
    let mut grid: Vec<f64> = w1
        .times
        .iter()
        .chain(&w2.times)
        .copied()
        .filter(|&t| t > 0.0 && t < t_max)
        .collect();
    grid.push(0.0);
    grid.push(t_max);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut value = 0.0;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let gap = w1.value_at(a).distance(w2.value_at(a)).min(1.0);
        value += gap * ((-a).exp() - (-b).exp());
    }
    Ok(MzDistance {
        value,
        truncation_bound: (-t_max).exp(),
    })
}

/// Sums are recomputed from scratch this often to bound drift in the
/// running sum.
const RESUM_PERIOD: usize = 4096;

/// Right-aligned moving average over `window` samples. The output grid is the
/// input grid from the first full window on.
pub fn smooth<V: PathValue>(traj: &PathFunction<V>, window: usize) -> Result<PathFunction<V>> {
    let n = traj.len();
    if window == 0 || window > n {
        return Err(Error::InvalidInput(format!(
            "smoothing window {window} must lie in 1..={n}"
        )));
    }
    let inv = 1.0 / window as f64;
    let vals = &traj.values;
    let window_sum = |end: usize| {
        let mut s = vals[end + 1 - window].clone();
        for v in &vals[end + 2 - window..=end] {
            s.add_assign(v);
        }
        s
    };
    let mut out = Vec::with_capacity(n + 1 - window);
    let mut sum = window_sum(window - 1);
    out.push(sum.scaled(inv));
    for k in window..n {
        if (k + 1 - window) % RESUM_PERIOD == 0 {
            sum = window_sum(k);
        } else {
            sum.add_assign(&vals[k]);
            sum.sub_assign(&vals[k - window]);
        }
        out.push(sum.scaled(inv));
    }
    PathFunction::new(traj.times[window - 1..].to_vec(), out, traj.end)
}

/// Streaming right-aligned moving average of a scalar signal.
#[derive(Debug, Clone)]
pub struct MovingAverage {
    window: usize,
    buf: VecDeque<f64>,
    sum: f64,
    since_resum: usize,
}

impl MovingAverage {
    pub fn new(window: usize) -> Self {
        assert!(window >= 1, "window must be at least 1");
        MovingAverage {
            window,
            buf: VecDeque::with_capacity(window),
            sum: 0.0,
            since_resum: 0,
        }
    }

    /// Adds a sample; returns the window mean once the window is full.
    pub fn push(&mut self, x: f64) -> Option<f64> {
        self.buf.push_back(x);
        self.sum += x;
        if self.buf.len() > self.window {
            self.sum -= self.buf.pop_front().unwrap();
        }
        self.since_resum += 1;
        if self.since_resum >= RESUM_PERIOD {
            self.sum = self.buf.iter().sum();
            self.since_resum = 0;
        }
        (self.buf.len() == self.window).then(|| self.sum / self.window as f64)
    }
}

/// Hilbert–Schmidt norm of the off-diagonal part of `ρ`.
pub fn offdiag_hs_norm(rho: &CMatrix) -> f64 {
    let d = rho.nrows();
    let mut s = 0.0;
    for j in 0..d {
        for i in 0..d {
            if i != j {
                s += rho[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Nearest pointer state `E_{i,i}` and the distance to it.
pub fn nearest_pointer(rho: &CMatrix) -> (usize, f64) {
    let norm_sq: f64 = rho.iter().map(|z| z.norm_sqr()).sum();
    let (i, p) =
        (0..rho.nrows())
            .map(|i| (i, rho[(i, i)].re))
            .fold(
                (0, f64::NEG_INFINITY),
                |best, c| if c.1 > best.1 { c } else { best },
            );
    (i, (norm_sq + 1.0 - 2.0 * p).max(0.0).sqrt())
}

/// `t ↦ |Π⊥ ρ_t|`.
pub fn offdiag_norm(traj: &PathFunction<CMatrix>) -> PathFunction<f64> {
    traj.map(offdiag_hs_norm)
}

/// Streaming measure of `{t : min_i |ρ_t - E_{i,i}| ≥ ε}` for a path fed
/// sample by sample.
#[derive(Debug, Clone)]
pub struct OutsideBalls {
    epsilon: f64,
    total: f64,
    last: Option<(f64, bool)>,
}

impl OutsideBalls {
    pub fn new(epsilon: f64) -> Self {
        OutsideBalls {
            epsilon,
            total: 0.0,
            last: None,
        }
    }

    pub fn push(&mut self, t: f64, rho: &CMatrix) {
        if let Some((t0, outside)) = self.last {
            if outside {
                self.total += t - t0;
            }
        }
        self.last = Some((t, nearest_pointer(rho).1 >= self.epsilon));
    }

    /// Closes the last holding interval at `end`.
    pub fn finish(mut self, end: f64) -> f64 {
        if let Some((t0, true)) = self.last {
            self.total += (end - t0).max(0.0);
        }
        self.total
    }
}

pub fn time_outside_balls(traj: &PathFunction<CMatrix>, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let mut acc = OutsideBalls::new(epsilon);
    for (t, rho) in traj.times.iter().zip(&traj.values) {
        acc.push(*t, rho);
    }
    Ok(acc.finish(traj.end))
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let value = samples.iter().sum::<f64>() / n;
        let std_err = if samples.len() > 1 {
            let ss: f64 = samples.iter().map(|x| (x - value) * (x - value)).sum();
            (ss / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Estimate { value, std_err }
    }
}

/// `∫_0^τ E|Π L_γ(ρ_t)| dt` from saved trajectory states.
pub fn conditional_variation(
    model: &ThreeScaleModel,
    ensemble: &[Trajectory],
    tau: f64,
) -> Result<Estimate> {
    if ensemble.is_empty() {
        return Err(Error::InvalidInput("empty ensemble".into()));
    }
    if let Some(t) = ensemble.iter().find(|t| t.t_end < tau) {
        return Err(Error::InvalidInput(format!(
            "ensemble horizon {} is shorter than tau = {tau}",
            t.t_end
        )));
    }
    let lg = model.l_gamma();
    let d = model.dim();
    let samples = ensemble
        .iter()
        .map(|traj| {
            let path = traj.path();
            let mut total = 0.0;
            for (a, b, rho) in path.intervals(tau) {
                let drift = lg.apply(rho)?;
                let diag: f64 = (0..d).map(|i| drift[(i, i)].norm_sqr()).sum::<f64>().sqrt();
                total += diag * (b - a);
            }
            Ok(total)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&samples))
}

/// Pointer-state frequencies at time `t` among paths within `radius` of a
/// pointer state, and the fraction assigned to none.
pub fn empirical_marginal(
    ensemble: &[PathFunction<CMatrix>],
    t: f64,
    radius: f64,
) -> Result<(Vec<f64>, f64)> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::InvalidInput("empty ensemble".into()))?;
    let d = first.values[0].nrows();
    let n = ensemble.len() as f64;
    let mut counts = vec![0.0; d];
    let mut unassigned = 0.0;
    for path in ensemble {
        let (i, dist) = nearest_pointer(path.value_at(t));
        if dist < radius {
            counts[i] += 1.0;
        } else {
            unassigned += 1.0;
        }
    }
    Ok((counts.iter().map(|c| c / n).collect(), unassigned / n))
}

/// Total variation between a sub-probability vector with `unassigned`
/// missing mass and a probability vector; the missing mass counts as an
/// extra atom.
pub fn total_variation(p: &[f64], unassigned: f64, q: &[f64]) -> f64 {
    0.5 * (p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() + unassigned)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64, end: f64) -> PathFunction<f64> {
        PathFunction::new(vec![0.0], vec![v], end).unwrap()
    }

    #[test]
    fn mz_closed_forms() {
        let a = constant(0.0, 20.0);
        let b = constant(0.5, 20.0);
        let d = mz_distance(&a, &b, 20.0).unwrap();
        assert!((d.value - 0.5 * (1.0 - (-20.0f64).exp())).abs() < 1e-15);
        let c = constant(3.0, 5.0);
        let d = mz_distance(&a, &c, 7.0).unwrap();
        assert!((d.value - (1.0 - (-7.0f64).exp())).abs() < 1e-15);
        assert_eq!(mz_distance(&a, &a, 30.0).unwrap().value, 0.0);
    }

    #[test]
    fn smoothing_examples() {
        let times: Vec<f64> = (0..10).map(f64::from).collect();
        let alt: Vec<f64> = (0..10).map(|k| (k % 2) as f64).collect();
        let p = PathFunction::new(times.clone(), alt.clone(), 9.0).unwrap();
        let s = smooth(&p, 2).unwrap();
        assert_eq!(s.len(), 9);
        assert!(s.values().iter().all(|&v| v == 0.5));
        assert_eq!(smooth(&p, 1).unwrap(), p);
        assert!(smooth(&p, 11).is_err());
        assert!(smooth(&p, 0).is_err());
    }

    #[test]
    fn moving_average_matches_batch() {
        let xs: Vec<f64> = (0..10_000).map(|k| ((k * 37) % 101) as f64 / 7.0).collect();
        let times: Vec<f64> = (0..xs.len()).map(|k| k as f64).collect();
        let batch = smooth(&PathFunction::new(times, xs.clone(), 1e4).unwrap(), 50).unwrap();
        let mut ma = MovingAverage::new(50);
        let stream: Vec<f64> = xs.iter().filter_map(|&x| ma.push(x)).collect();
        assert_eq!(stream.len(), batch.len());
        for (a, b) in stream.iter().zip(batch.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn offdiag_example() {
        let h = Complex64::new(0.5, 0.0);
        let rho = CMatrix::from_element(2, 2, h);
        assert!((offdiag_hs_norm(&rho) - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn value_lookup_is_right_continuous() {
        let p = PathFunction::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0], 3.0).unwrap();
        assert_eq!(*p.value_at(0.5), 1.0);
        assert_eq!(*p.value_at(1.0), 2.0);
        assert_eq!(*p.value_at(10.0), 3.0);
    }
}
