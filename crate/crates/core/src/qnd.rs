//! Structural assumptions on three-scale models and the closed-form spectral
//! data they unlock: dephasing eigenvalues, decoherence rates and the
//! jump-rate matrix of the limiting Markov process.
//!
//! The pointer basis is the computational basis. Indices are 0-based.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::serde_matrix;
use crate::superop::{lindblad_from_gksl, GkslSpec, SuperOperator};
use crate::tol;

/// Three GKSL levels sharing one dimension, and the scale parameter `γ`.
///
/// The averaged generator is `L_γ = L0 + γ L1 + γ² L2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRaw", into = "ModelRaw")]
pub struct ThreeScaleModel {
    gamma: f64,
    levels: [GkslSpec; 3],
}

#[derive(Serialize, Deserialize)]
struct ModelRaw {
    gamma: f64,
    level0: GkslSpec,
    level1: GkslSpec,
    level2: GkslSpec,
}

impl TryFrom<ModelRaw> for ThreeScaleModel {
    type Error = Error;

    fn try_from(raw: ModelRaw) -> Result<Self> {
        ThreeScaleModel::new(raw.gamma, raw.level0, raw.level1, raw.level2)
    }
}

impl From<ThreeScaleModel> for ModelRaw {
    fn from(m: ThreeScaleModel) -> Self {
        let [level0, level1, level2] = m.levels;
        ModelRaw {
            gamma: m.gamma,
            level0,
            level1,
            level2,
        }
    }
}

impl ThreeScaleModel {
    pub fn new(gamma: f64, level0: GkslSpec, level1: GkslSpec, level2: GkslSpec) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        let d = level0.dim();
        for (name, level) in [("level1", &level1), ("level2", &level2)] {
            if level.dim() != d {
                return Err(Error::dim(name, d, level.dim()));
            }
        }
        Ok(ThreeScaleModel {
            gamma,
            levels: [level0, level1, level2],
        })
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let [a, b, c] = self.levels.clone();
        ThreeScaleModel::new(gamma, a, b, c)
    }

    /// GKSL data of level `α ∈ {0, 1, 2}`.
    pub fn level(&self, alpha: usize) -> &GkslSpec {
        &self.levels[alpha]
    }

    pub fn levels(&self) -> &[GkslSpec; 3] {
        &self.levels
    }

    /// `(L0, L1, L2)` as superoperators.
    pub fn generators(&self) -> [SuperOperator; 3] {
        [0, 1, 2].map(|a| lindblad_from_gksl(&self.levels[a]))
    }

    /// `L0 + γ L1 + γ² L2` at the given `γ`.
    pub fn l_gamma_at(&self, gamma: f64) -> SuperOperator {
        let [l0, l1, l2] = self.generators();
        &(&l0 + &l1.scale(gamma)) + &l2.scale(gamma * gamma)
    }

    /// `L_γ` at the model's own `γ`.
    pub fn l_gamma(&self) -> SuperOperator {
        self.l_gamma_at(self.gamma)
    }
}

/// Eigenvalues `τ_{i,j}` of a diagonal GKSL generator on `E_{i,j}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauMatrix {
    pub dim: usize,
    #[serde(with = "serde_matrix")]
    pub entries: CMatrix,
}

impl TauMatrix {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }
}

/// Rate matrix with non-negative off-diagonal entries and zero row sums
/// (entry `(i, j)` is the rate from `i` to `j`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarkovRaw", into = "MarkovRaw")]
pub struct MarkovGenerator {
    rates: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct MarkovRaw {
    dim: usize,
    #[serde(with = "serde_matrix::real")]
    rates: DMatrix<f64>,
}

impl TryFrom<MarkovRaw> for MarkovGenerator {
    type Error = Error;

    fn try_from(raw: MarkovRaw) -> Result<Self> {
        if raw.rates.nrows() != raw.dim {
            return Err(Error::dim(
                "MarkovGenerator.dim",
                raw.dim,
                raw.rates.nrows(),
            ));
        }
        MarkovGenerator::new(raw.rates)
    }
}

impl From<MarkovGenerator> for MarkovRaw {
    fn from(m: MarkovGenerator) -> Self {
        MarkovRaw {
            dim: m.dim(),
            rates: m.rates,
        }
    }
}

impl MarkovGenerator {
    pub fn new(rates: DMatrix<f64>) -> Result<Self> {
        let d = rates.nrows();
        if d == 0 || rates.ncols() != d {
            return Err(Error::dim("rate matrix columns", d, rates.ncols()));
        }
        if rates.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "rate matrix has non-finite entries".into(),
            ));
        }
        let scale = 1.0 + rates.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..d {
            for j in 0..d {
                if i != j && rates[(i, j)] < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "negative rate {} from {i} to {j}",
                        rates[(i, j)]
                    )));
                }
            }
            let row: f64 = rates.row(i).sum();
            if row.abs() > tol::ROW_SUM * scale {
                return Err(Error::InvalidInput(format!(
                    "row {i} sums to {row:e}, not 0"
                )));
            }
        }
        Ok(MarkovGenerator { rates })
    }

    /// Builds a generator from off-diagonal rates; the diagonal is overwritten
    /// so that every row sums to zero.
    pub fn from_off_diagonal(mut rates: DMatrix<f64>) -> Result<Self> {
        let d = rates.nrows();
        for i in 0..d {
            rates[(i, i)] = 0.0;
            let out: f64 = (0..d).filter(|&j| j != i).map(|j| rates[(i, j)]).sum();
            rates[(i, i)] = -out;
        }
        MarkovGenerator::new(rates)
    }

    pub fn dim(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[(i, j)]
    }

    /// Total exit rate `-T_{i,i}`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.rates[(i, i)]
    }

    /// Superoperator acting on diagonal matrices as `diag(x) ↦ diag(Tᵀ x)`
    /// and annihilating off-diagonal ones.
    pub fn dual_embedding(&self) -> SuperOperator {
        let d = self.dim();
        let mut m = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(j + j * d, i + i * d)] = Complex64::new(self.rates[(i, j)], 0.0);
            }
        }
        SuperOperator::from_matrix_unchecked(d, m)
    }
}

/// Which operator an assumption witness points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSource {
    Hamiltonian {
        level: usize,
    },
    Kraus {
        level: usize,
        k: usize,
    },
    /// Pair `(i, j)` not separated by any (read) level-2 channel.
    Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub i: usize,
    pub j: usize,
    pub source: WitnessSource,
    pub magnitude: f64,
}

/// Outcome of the structural assumption checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub qnd_ok: bool,
    pub identifiability_ok: bool,
    pub decoherence_ok: bool,
    pub witnesses: Vec<Witness>,
    /// Largest off-diagonal magnitude among the operators that must be diagonal.
    pub max_off_diagonal: f64,
}

/// Identifiability and decoherence verdicts for a level-2 GKSL spec.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifiabilityReport {
    pub identifiability_ok: bool,
    pub decoherence_ok: bool,
    /// Pairs failing identifiability.
    pub failing_pairs: Vec<(usize, usize)>,
}

fn off_diagonal_witnesses(
    m: &CMatrix,
    tol: f64,
    source: WitnessSource,
    out: &mut Vec<Witness>,
) -> f64 {
    let d = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let mag = m[(i, j)].norm();
            worst = worst.max(mag);
            if mag > tol {
                out.push(Witness {
                    i,
                    j,
                    source,
                    magnitude: mag,
                });
            }
        }
    }
    worst
}

/// QND check: `H⁽²⁾`, every `L_k⁽²⁾` and every `L_k⁽¹⁾` must be diagonal.
///
/// The report also carries the identifiability and decoherence verdicts.
pub fn check_qnd(model: &ThreeScaleModel, tol: f64) -> AssumptionReport {
    let mut witnesses = Vec::new();
    let mut worst: f64 = 0.0;
    worst = worst.max(off_diagonal_witnesses(
        model.level(2).hamiltonian(),
        tol,
        WitnessSource::Hamiltonian { level: 2 },
        &mut witnesses,
    ));
    for level in [2, 1] {
        for (k, l) in model.level(level).kraus().iter().enumerate() {
            worst = worst.max(off_diagonal_witnesses(
                l,
                tol,
                WitnessSource::Kraus { level, k },
                &mut witnesses,
            ));
        }
    }
    let ident = check_identifiability(model.level(2), tol);
    for &(i, j) in &ident.failing_pairs {
        witnesses.push(Witness {
            i,
            j,
            source: WitnessSource::Pair,
            magnitude: 0.0,
        });
    }
    AssumptionReport {
        qnd_ok: worst <= tol,
        identifiability_ok: ident.identifiability_ok,
        decoherence_ok: ident.decoherence_ok,
        witnesses,
        max_off_diagonal: worst,
    }
}

/// Identifiability: every pair `i ≠ j` is separated by the real part of some
/// read (`η > 0`) level-2 channel. Decoherence: separated by some channel at
/// all, regardless of `η` or real part.
pub fn check_identifiability(level2: &GkslSpec, tol: f64) -> IdentifiabilityReport {
    let d = level2.dim();
    let mut failing = Vec::new();
    let mut decoherence_ok = true;
    for i in 0..d {
        for j in (i + 1)..d {
            let identified = level2
                .channels()
                .any(|(l, eta)| eta > 0.0 && (l[(i, i)].re - l[(j, j)].re).abs() > tol);
            let separated = level2
                .kraus()
                .iter()
                .any(|l| (l[(i, i)] - l[(j, j)]).norm() > tol);
            if !identified {
                failing.push((i, j));
            }
            decoherence_ok &= separated;
        }
    }
    IdentifiabilityReport {
        identifiability_ok: failing.is_empty(),
        decoherence_ok,
        failing_pairs: failing,
    }
}

fn require_diagonal(spec: &GkslSpec, level: usize, tol: f64) -> Result<()> {
    let mut w = Vec::new();
    off_diagonal_witnesses(
        spec.hamiltonian(),
        tol,
        WitnessSource::Hamiltonian { level },
        &mut w,
    );
    for (k, l) in spec.kraus().iter().enumerate() {
        off_diagonal_witnesses(l, tol, WitnessSource::Kraus { level, k }, &mut w);
    }
    match w.first() {
        None => Ok(()),
        Some(x) => Err(Error::Precondition(format!(
            "level-{level} operator {:?} has off-diagonal entry ({}, {}) of magnitude {:e}",
            x.source, x.i, x.j, x.magnitude
        ))),
    }
}

/// Closed-form eigenvalues of a diagonal GKSL generator:
/// `τ_{i,j} = -½ Σ_k |l_i - l_j|² - i(H_ii - H_jj + Σ_k Im(conj(l_i) l_j))`,
/// where `l_i = (L_k)_{ii}`.
///
/// Each `E_{i,j}` is checked against the assembled superoperator.
pub fn tau_eigenvalues(level2: &GkslSpec) -> Result<TauMatrix> {
    require_diagonal(level2, 2, tol::ASSUMPTION)?;
    let d = level2.dim();
    let h = level2.hamiltonian();
    let entries = CMatrix::from_fn(d, d, |i, j| {
        let mut re = 0.0;
        let mut im = h[(i, i)].re - h[(j, j)].re;
        for l in level2.kraus() {
            let (li, lj) = (l[(i, i)], l[(j, j)]);
            re -= 0.5 * (li - lj).norm_sqr();
            im += (li.conj() * lj).im;
        }
        Complex64::new(re, -im)
    });

    let generator = lindblad_from_gksl(level2);
    let scale = 1.0 + generator.frobenius_norm();
    for j in 0..d {
        for i in 0..d {
            let col = i + j * d;
            let m = generator.matrix();
            let mut residual: f64 = 0.0;
            for r in 0..d * d {
                let expected = if r == col {
                    entries[(i, j)]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                residual = residual.max((m[(r, col)] - expected).norm());
            }
            if residual > tol::LINEAR * scale {
                return Err(Error::Precondition(format!(
                    "E_({i},{j}) is not an eigenvector of the level-2 generator (residual {residual:e})"
                )));
            }
        }
    }
    Ok(TauMatrix { dim: d, entries })
}

/// Jump rates of the limiting Markov process (`i ≠ j`):
///
/// `T_{i,j} = Σ_k |(L_k⁽⁰⁾)_{j,i}|² + |H⁽¹⁾_{i,j}|² / |τ_{i,j}|² · Σ_k |(L_k⁽²⁾)_{ii} - (L_k⁽²⁾)_{jj}|²`.
pub fn transition_rates(model: &ThreeScaleModel) -> Result<MarkovGenerator> {
    let report = check_qnd(model, tol::ASSUMPTION);
    if !report.qnd_ok {
        return Err(Error::Precondition(format!(
            "QND assumption fails (largest off-diagonal entry {:e})",
            report.max_off_diagonal
        )));
    }
    let ident = check_identifiability(model.level(2), tol::ASSUMPTION);
    if let Some(&(i, j)) = ident.failing_pairs.first() {
        return Err(Error::Identifiability {
            i,
            j,
            reason: "no read level-2 channel separates the real diagonal entries".into(),
        });
    }
    let tau = tau_eigenvalues(model.level(2))?;
    let d = model.dim();
    let h1 = model.level(1).hamiltonian();
    let mut rates = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let direct: f64 = model
                .level(0)
                .kraus()
                .iter()
                .map(|l| l[(j, i)].norm_sqr())
                .sum();
            let coupling = h1[(i, j)].norm_sqr();
            let induced = if coupling == 0.0 {
                0.0
            } else {
                let t = tau.get(i, j).norm_sqr();
                if t == 0.0 {
                    return Err(Error::Identifiability {
                        i,
                        j,
                        reason: "tau vanishes on a pair coupled by H1".into(),
                    });
                }
                let gap: f64 = model
                    .level(2)
                    .kraus()
                    .iter()
                    .map(|l| (l[(i, i)] - l[(j, j)]).norm_sqr())
                    .sum();
                coupling / t * gap
            };
            rates[(i, j)] = direct + induced;
        }
    }
    MarkovGenerator::from_off_diagonal(rates)
}

/// Decoherence rates `D^γ_{i,j} = Σ_{α=1,2} γ^α Σ_k (Re[Δ]² + (1-η_α(k)) Im[Δ]²)`
/// with `Δ = (L_k^{(α)})_{ii} - (L_k^{(α)})_{jj}`.
pub fn decoherence_rates(model: &ThreeScaleModel) -> Result<DMatrix<f64>> {
    let report = check_qnd(model, tol::ASSUMPTION);
    if !report.qnd_ok {
        return Err(Error::Precondition("QND assumption fails".into()));
    }
    let d = model.dim();
    let g = model.gamma();
    Ok(DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            return 0.0;
        }
        [1usize, 2]
            .iter()
            .map(|&alpha| {
                let per_level: f64 = model
                    .level(alpha)
                    .channels()
                    .map(|(l, eta)| {
                        let delta = l[(i, i)] - l[(j, j)];
                        delta.re * delta.re + (1.0 - eta) * delta.im * delta.im
                    })
                    .sum();
                g.powi(alpha as i32) * per_level
            })
            .sum()
    }))
}

/// `Q_{i,j} = (L(E_{i,i}))_{j,j} = Σ_k |(L_k)_{j,i}|² - δ_{i,j} |L_k e_j|²`: the
/// Markov generator obtained by compressing a Lindbladian to diagonal matrices.
pub fn markov_from_pi_l_pi(spec: &GkslSpec) -> MarkovGenerator {
    let d = spec.dim();
    let mut rates = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if i != j {
                rates[(i, j)] = spec.kraus().iter().map(|l| l[(j, i)].norm_sqr()).sum();
            }
        }
    }
    MarkovGenerator::from_off_diagonal(rates).expect("compressed Lindbladian is a Markov generator")
}

/// True if every entry off the diagonal is at most `tol` in magnitude.
pub fn is_diagonal(m: &CMatrix, tol: f64) -> bool {
    let mut w = Vec::new();
    off_diagonal_witnesses(m, tol, WitnessSource::Pair, &mut w) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::elementary;
    use crate::models;
    use nalgebra::DVector;

    fn diag(v: &[Complex64]) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn level2_only(level2: GkslSpec) -> ThreeScaleModel {
        let d = level2.dim();
        ThreeScaleModel::new(1.0, GkslSpec::empty(d), GkslSpec::empty(d), level2).unwrap()
    }

    #[test]
    fn fig1_passes_every_check() {
        let r = check_qnd(&models::fig1(10.0), tol::ASSUMPTION);
        assert!(r.qnd_ok && r.identifiability_ok && r.decoherence_ok);
        assert!(r.witnesses.is_empty());
    }

    #[test]
    fn off_diagonal_level2_kraus_is_flagged() {
        let level2 =
            GkslSpec::new(CMatrix::zeros(3, 3), vec![elementary(3, 0, 1)], vec![1.0]).unwrap();
        let r = check_qnd(&level2_only(level2), tol::ASSUMPTION);
        assert!(!r.qnd_ok);
        assert!(r
            .witnesses
            .iter()
            .any(|w| w.i == 0 && w.j == 1 && w.source == WitnessSource::Kraus { level: 2, k: 0 }));
    }

    #[test]
    fn empty_fast_levels_are_vacuously_qnd() {
        let mut rng = rand::rng();
        let level0 = models::random_gksl(&mut rng, 3, 2);
        let m = ThreeScaleModel::new(2.0, level0, GkslSpec::empty(3), GkslSpec::empty(3)).unwrap();
        assert!(check_qnd(&m, tol::ASSUMPTION).qnd_ok);
    }

    #[test]
    fn fig1_tau() {
        let tau = tau_eigenvalues(models::fig1(1.0).level(2)).unwrap();
        for (i, j, v) in [(0, 1, -0.5), (0, 2, -2.0), (1, 2, -0.5), (1, 1, 0.0)] {
            assert!((tau.get(i, j) - re(v)).norm() < 1e-14, "tau({i},{j})");
        }
    }

    #[test]
    fn hamiltonian_only_tau() {
        let spec = GkslSpec::new(diag(&[re(1.0), re(-1.0)]), vec![], vec![]).unwrap();
        let tau = tau_eigenvalues(&spec).unwrap();
        assert!((tau.get(0, 1) - Complex64::new(0.0, -2.0)).norm() < 1e-14);
        let zero = tau_eigenvalues(&GkslSpec::empty(3)).unwrap();
        assert!(zero.entries.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn tau_requires_diagonal_input() {
        let spec =
            GkslSpec::new(CMatrix::zeros(2, 2), vec![elementary(2, 0, 1)], vec![1.0]).unwrap();
        assert!(matches!(
            tau_eigenvalues(&spec),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn identifiability_examples() {
        let l = diag(&[re(1.0), re(2.0), re(3.0)]);
        let read = GkslSpec::new(CMatrix::zeros(3, 3), vec![l.clone()], vec![1.0]).unwrap();
        let r = check_identifiability(&read, tol::ASSUMPTION);
        assert!(r.identifiability_ok && r.decoherence_ok);

        let unread = GkslSpec::new(CMatrix::zeros(3, 3), vec![l], vec![0.0]).unwrap();
        let r = check_identifiability(&unread, tol::ASSUMPTION);
        assert!(!r.identifiability_ok && r.decoherence_ok);

        let imaginary = diag(&[Complex64::new(0.0, 1.0), Complex64::new(0.0, 2.0)]);
        let spec = GkslSpec::new(CMatrix::zeros(2, 2), vec![imaginary], vec![1.0]).unwrap();
        let r = check_identifiability(&spec, tol::ASSUMPTION);
        assert!(!r.identifiability_ok && r.decoherence_ok);
    }

    #[test]
    fn fig1_rates() {
        let t = transition_rates(&models::fig1(5.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { -2.0 } else { 1.0 };
                assert!((t.rate(i, j) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rabi_rates() {
        let t = transition_rates(&models::rabi(5.0)).unwrap();
        assert!((t.rate(0, 1) - 1.0).abs() < 1e-14);
        assert!((t.rate(1, 0) - 1.0).abs() < 1e-14);
        let tau = tau_eigenvalues(models::rabi(1.0).level(2)).unwrap();
        assert!((tau.get(0, 1) - re(-0.5)).norm() < 1e-14);
    }

    #[test]
    fn no_slow_coupling_means_no_rates() {
        let m = level2_only(models::fig1(1.0).level(2).clone());
        let t = transition_rates(&m).unwrap();
        assert!(t.rates().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rates_refuse_unidentifiable_models() {
        let l = diag(&[re(1.0), re(2.0)]);
        let level2 = GkslSpec::new(CMatrix::zeros(2, 2), vec![l], vec![0.0]).unwrap();
        let m = ThreeScaleModel::new(
            1.0,
            GkslSpec::empty(2),
            models::rabi(1.0).level(1).clone(),
            level2,
        )
        .unwrap();
        assert!(matches!(
            transition_rates(&m),
            Err(Error::Identifiability { .. })
        ));
    }

    #[test]
    fn decoherence_examples() {
        let d = decoherence_rates(&models::fig1(10.0)).unwrap();
        assert!((d[(0, 1)] - 100.0).abs() < 1e-10);
        assert!((d[(0, 2)] - 400.0).abs() < 1e-10);
        assert_eq!(d[(1, 1)], 0.0);

        let imaginary = diag(&[Complex64::new(0.0, 1.0), Complex64::new(0.0, 3.0)]);
        let level2 = GkslSpec::new(CMatrix::zeros(2, 2), vec![imaginary], vec![1.0]).unwrap();
        let d = decoherence_rates(&level2_only(level2)).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));

        let d = decoherence_rates(
            &ThreeScaleModel::new(
                3.0,
                GkslSpec::empty(2),
                GkslSpec::empty(2),
                GkslSpec::empty(2),
            )
            .unwrap(),
        )
        .unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn compressed_generator_examples() {
        let spec =
            GkslSpec::new(CMatrix::zeros(2, 2), vec![elementary(2, 1, 0)], vec![0.0]).unwrap();
        let q = markov_from_pi_l_pi(&spec);
        assert_eq!(
            q.rates(),
            &DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.0])
        );

        let h = GkslSpec::new(diag(&[re(1.0), re(-2.0), re(0.5)]), vec![], vec![]).unwrap();
        assert!(markov_from_pi_l_pi(&h).rates().iter().all(|&x| x == 0.0));
        assert!(markov_from_pi_l_pi(&GkslSpec::empty(3))
            .rates()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn compressed_generator_matches_superoperator() {
        let mut rng = rand::rng();
        let spec = models::random_gksl(&mut rng, 3, 2);
        let q = markov_from_pi_l_pi(&spec);
        let l = lindblad_from_gksl(&spec);
        for i in 0..3 {
            let out = l.apply(&elementary(3, i, i)).unwrap();
            for j in 0..3 {
                assert!((out[(j, j)].re - q.rate(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn markov_generator_validation() {
        assert!(
            MarkovGenerator::new(DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.5, -0.5])).is_ok()
        );
        assert!(
            MarkovGenerator::new(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 0.0])).is_err()
        );
        assert!(
            MarkovGenerator::new(DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 1.0])).is_err()
        );
    }

    #[test]
    fn model_json_round_trip() {
        let m = models::rabi(7.0);
        let js = serde_json::to_string(&m).unwrap();
        let back: ThreeScaleModel = serde_json::from_str(&js).unwrap();
        assert_eq!(back, m);
    }
}
