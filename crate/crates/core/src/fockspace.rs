//! Truncated qubit ⊗ Fock space.
//!
//! Basis states are stored with flat index `2 * n + s`, where `s = 0` is the
//! ground level `g` and `s = 1` the excited level `e`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_N_MAX: usize = 32;
pub const EPS_NORM: f64 = 1e-9;
pub const EPS_LEAK: f64 = 1e-8;
const EPS_CONDITIONAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qubit {
    G,
    E,
}

impl Qubit {
    pub fn index(self) -> usize {
        match self {
            Qubit::G => 0,
            Qubit::E => 1,
        }
    }

    pub fn flipped(self) -> Qubit {
        match self {
            Qubit::G => Qubit::E,
            Qubit::E => Qubit::G,
        }
    }

    /// σ_z eigenvalue: +1 for e, −1 for g.
    pub fn sigma_z(self) -> f64 {
        match self {
            Qubit::G => -1.0,
            Qubit::E => 1.0,
        }
    }
}

#[inline]
pub fn basis_index(q: Qubit, n: usize) -> usize {
    2 * n + q.index()
}

#[inline]
pub fn dim(n_max: usize) -> usize {
    2 * (n_max + 1)
}

fn check_cutoff(n_max: usize) -> Result<()> {
    if n_max < 2 {
        Err(Error::InvalidCutoff(n_max))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Wire {
    n_max: usize,
    amps: Vec<[f64; 2]>,
}

impl Wire {
    fn pack(n_max: usize, data: &[Complex64]) -> Wire {
        Wire {
            n_max,
            amps: data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    fn unpack(self, len: usize) -> Result<(usize, Vec<Complex64>)> {
        check_cutoff(self.n_max)?;
        if self.amps.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: self.amps.len(),
            });
        }
        let v = self
            .amps
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        Ok((self.n_max, v))
    }
}

impl TryFrom<Wire> for JointState {
    type Error = Error;
    fn try_from(w: Wire) -> Result<Self> {
        let len = dim(w.n_max);
        let (n_max, amps) = w.unpack(len)?;
        Ok(JointState { n_max, amps })
    }
}

impl From<JointState> for Wire {
    fn from(s: JointState) -> Wire {
        Wire::pack(s.n_max, &s.amps)
    }
}

/// Pure state of the qubit and the truncated oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Wire", into = "Wire")]
pub struct JointState {
    n_max: usize,
    amps: Vec<Complex64>,
}

impl JointState {
    /// `|g,0⟩`.
    pub fn new_ground(n_max: usize) -> Result<Self> {
        Self::basis(n_max, Qubit::G, 0)
    }

    pub fn basis(n_max: usize, q: Qubit, n: usize) -> Result<Self> {
        check_cutoff(n_max)?;
        if n > n_max {
            return Err(Error::InvalidInput(format!("Fock index {n} above cutoff {n_max}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim(n_max)];
        amps[basis_index(q, n)] = Complex64::new(1.0, 0.0);
        Ok(JointState { n_max, amps })
    }

    pub fn from_amplitudes(n_max: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_cutoff(n_max)?;
        if amps.len() != dim(n_max) {
            return Err(Error::DimensionMismatch {
                expected: dim(n_max),
                found: amps.len(),
            });
        }
        Ok(JointState { n_max, amps })
    }

    /// Builds a state from `(qubit, n, amplitude)` terms and normalizes it.
    pub fn from_terms(n_max: usize, terms: &[(Qubit, usize, Complex64)]) -> Result<Self> {
        check_cutoff(n_max)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); dim(n_max)];
        for &(q, n, c) in terms {
            if n > n_max {
                return Err(Error::InvalidInput(format!("Fock index {n} above cutoff {n_max}")));
            }
            amps[basis_index(q, n)] += c;
        }
        let mut s = JointState { n_max, amps };
        s.normalize()?;
        Ok(s)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn amp(&self, q: Qubit, n: usize) -> Complex64 {
        self.amps[basis_index(q, n)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero state".into()));
        }
        for z in &mut self.amps {
            *z /= n;
        }
        Ok(())
    }

    /// Population in the two highest Fock levels.
    pub fn leakage(&self) -> f64 {
        let d = self.amps.len();
        self.amps[d - 4..].iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn check_leakage(&self, tolerance: f64) -> Result<()> {
        let leakage = self.leakage();
        if leakage > tolerance {
            Err(Error::CutoffViolation { leakage, tolerance })
        } else {
            Ok(())
        }
    }

    /// Weight on `(g, odd n)` and `(e, even n)`.
    pub fn off_parity_weight(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let (n, s) = (i / 2, i % 2);
                (n + s) % 2 == 1
            })
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    pub fn is_parity_locked(&self) -> bool {
        self.off_parity_weight() == 0.0
    }

    pub fn to_density(&self) -> JointDensity {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        JointDensity {
            n_max: self.n_max,
            matrix: &v * v.adjoint(),
        }
    }

    /// Same state on a different cutoff; fails if populated levels would be dropped.
    pub fn with_cutoff(&self, n_max: usize) -> Result<Self> {
        check_cutoff(n_max)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); dim(n_max)];
        for (i, z) in self.amps.iter().enumerate() {
            if i < amps.len() {
                amps[i] = *z;
            } else if z.norm_sqr() > 0.0 {
                return Err(Error::CutoffViolation {
                    leakage: z.norm_sqr(),
                    tolerance: 0.0,
                });
            }
        }
        Ok(JointState { n_max, amps })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serialization")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// `⟨a|b⟩`, conjugating the first argument.
pub fn overlap(a: &JointState, b: &JointState) -> Result<Complex64> {
    if a.n_max != b.n_max {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// Random parity-locked pure state: complex Gaussian amplitudes on
/// `(g, even n)` and `(e, odd n)` for `n ≤ max_fock`.
pub fn random_parity_locked<R: Rng + ?Sized>(rng: &mut R, max_fock: usize, n_max: usize) -> Result<JointState> {
    if max_fock > n_max {
        return Err(Error::InvalidInput(format!("support {max_fock} above cutoff {n_max}")));
    }
    let terms: Vec<_> = (0..=max_fock)
        .map(|n| {
            let q = if n % 2 == 0 { Qubit::G } else { Qubit::E };
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            (q, n, Complex64::new(re, im))
        })
        .collect();
    JointState::from_terms(n_max, &terms)
}

/// Random mixture of `rank` parity-locked pure states with random weights.
pub fn random_parity_locked_density<R: Rng + ?Sized>(
    rng: &mut R,
    rank: usize,
    max_fock: usize,
    n_max: usize,
) -> Result<JointDensity> {
    let d = dim(n_max);
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    let weights: Vec<f64> = (0..rank.max(1)).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let s = random_parity_locked(rng, max_fock, n_max)?;
        m += s.to_density().matrix * Complex64::new(w / total, 0.0);
    }
    JointDensity::from_matrix(n_max, m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Wire", into = "Wire")]
pub struct JointDensity {
    n_max: usize,
    matrix: DMatrix<Complex64>,
}

impl TryFrom<Wire> for JointDensity {
    type Error = Error;
    fn try_from(w: Wire) -> Result<Self> {
        let d = dim(w.n_max);
        let (n_max, v) = w.unpack(d * d)?;
        Ok(JointDensity {
            n_max,
            matrix: DMatrix::from_row_slice(d, d, &v),
        })
    }
}

impl From<JointDensity> for Wire {
    fn from(r: JointDensity) -> Wire {
        let d = r.matrix.nrows();
        let rows: Vec<Complex64> = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| r.matrix[(i, j)])
            .collect();
        Wire::pack(r.n_max, &rows)
    }
}

impl JointDensity {
    pub fn from_matrix(n_max: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        check_cutoff(n_max)?;
        let d = dim(n_max);
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.nrows(),
            });
        }
        Ok(JointDensity { n_max, matrix })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn purity(&self) -> f64 {
        // tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Checks Hermiticity, unit trace and positivity.
    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_error();
        if h > 1e-12 {
            return Err(Error::InvalidInput(format!("not Hermitian (error {h:.3e})")));
        }
        let t = self.trace();
        if (t - 1.0).abs() > EPS_NORM {
            return Err(Error::InvalidInput(format!("trace {t}")));
        }
        let min = self.eigenvalues()[0];
        if min < -1e-10 {
            return Err(Error::InvalidInput(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Partial trace over the qubit.
    pub fn reduce_oscillator(&self) -> DMatrix<Complex64> {
        let m = self.n_max + 1;
        DMatrix::from_fn(m, m, |n, k| {
            self.matrix[(2 * n, 2 * k)] + self.matrix[(2 * n + 1, 2 * k + 1)]
        })
    }

    /// Partial trace over the oscillator.
    pub fn reduce_qubit(&self) -> nalgebra::Matrix2<Complex64> {
        let mut q = nalgebra::Matrix2::zeros();
        for n in 0..=self.n_max {
            for s in 0..2 {
                for t in 0..2 {
                    q[(s, t)] += self.matrix[(2 * n + s, 2 * n + t)];
                }
            }
        }
        q
    }

    /// Diagonal part in the joint basis.
    pub fn dephased(&self) -> JointDensity {
        let d = self.dim();
        let matrix = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                self.matrix[(i, i)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        JointDensity {
            n_max: self.n_max,
            matrix,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("density serialization")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Anything with per-level populations `P(s, n)`.
pub trait Populations {
    fn n_max(&self) -> usize;
    fn population(&self, q: Qubit, n: usize) -> f64;
}

impl Populations for JointState {
    fn n_max(&self) -> usize {
        self.n_max
    }
    fn population(&self, q: Qubit, n: usize) -> f64 {
        self.amps[basis_index(q, n)].norm_sqr()
    }
}

impl Populations for JointDensity {
    fn n_max(&self) -> usize {
        self.n_max
    }
    fn population(&self, q: Qubit, n: usize) -> f64 {
        let i = basis_index(q, n);
        self.matrix[(i, i)].re
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockDistribution {
    pub probs: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl FockDistribution {
    pub fn from_probs(probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        let (mean, std) = if total > 0.0 {
            let mean = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total;
            let var = probs
                .iter()
                .enumerate()
                .map(|(n, p)| (n as f64 - mean).powi(2) * p)
                .sum::<f64>()
                / total;
            (mean, var.max(0.0).sqrt())
        } else {
            (0.0, 0.0)
        };
        FockDistribution { probs, mean, std }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn parity(&self) -> f64 {
        let s: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(n, p)| if n % 2 == 0 { *p } else { -*p })
            .sum();
        s / self.total()
    }

    /// Elementwise mean of several distributions, padded with zeros.
    pub fn average<'a, I: IntoIterator<Item = &'a FockDistribution>>(items: I) -> Self {
        let mut acc: Vec<f64> = Vec::new();
        let mut count = 0usize;
        for d in items {
            if acc.len() < d.probs.len() {
                acc.resize(d.probs.len(), 0.0);
            }
            for (a, p) in acc.iter_mut().zip(&d.probs) {
                *a += p;
            }
            count += 1;
        }
        if count > 0 {
            for a in &mut acc {
                *a /= count as f64;
            }
        }
        FockDistribution::from_probs(acc)
    }
}

pub fn fock_distribution<P: Populations + ?Sized>(x: &P) -> FockDistribution {
    let probs = (0..=x.n_max())
        .map(|n| x.population(Qubit::G, n) + x.population(Qubit::E, n))
        .collect();
    FockDistribution::from_probs(probs)
}

/// Fock distribution conditioned on the qubit level, renormalized.
pub fn conditional_fock<P: Populations + ?Sized>(x: &P, q: Qubit) -> Result<FockDistribution> {
    let probs: Vec<f64> = (0..=x.n_max()).map(|n| x.population(q, n)).collect();
    let total: f64 = probs.iter().sum();
    if total < EPS_CONDITIONAL {
        return Err(Error::UndefinedConditional(total));
    }
    Ok(FockDistribution::from_probs(
        probs.into_iter().map(|p| p / total).collect(),
    ))
}

/// `Σ_n (−1)^n P(n | condition)`.
pub fn parity_expectation<P: Populations + ?Sized>(x: &P, condition: Option<Qubit>) -> Result<f64> {
    match condition {
        None => Ok(fock_distribution(x).parity()),
        Some(q) => Ok(conditional_fock(x, q)?.parity()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ground_state() {
        let s = JointState::new_ground(20).unwrap();
        let d = fock_distribution(&s);
        assert_eq!(d.probs[0], 1.0);
        assert_eq!(d.mean, 0.0);
        assert_eq!(d.std, 0.0);
        assert_eq!(parity_expectation(&s, None).unwrap(), 1.0);
        assert_eq!(parity_expectation(&s, Some(Qubit::G)).unwrap(), 1.0);
        assert!(matches!(
            parity_expectation(&s, Some(Qubit::E)),
            Err(Error::UndefinedConditional(_))
        ));
    }

    #[test]
    fn small_cutoff_rejected() {
        assert_eq!(JointState::new_ground(1), Err(Error::InvalidCutoff(1)));
    }

    #[test]
    fn equal_superposition() {
        let s = JointState::from_terms(5, &[(Qubit::G, 0, c(1.0, 0.0)), (Qubit::E, 1, c(1.0, 0.0))])
            .unwrap();
        let d = fock_distribution(&s);
        assert_abs_diff_eq!(d.probs[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.probs[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.mean, 0.5, epsilon = 1e-15);
        assert!(s.is_parity_locked());
        assert_eq!(parity_expectation(&s, Some(Qubit::E)).unwrap(), -1.0);
    }

    #[test]
    fn overlaps() {
        let g0 = JointState::basis(4, Qubit::G, 0).unwrap();
        let e1 = JointState::basis(4, Qubit::E, 1).unwrap();
        assert_eq!(overlap(&g0, &e1).unwrap(), c(0.0, 0.0));
        assert_eq!(overlap(&g0, &g0).unwrap(), c(1.0, 0.0));
        let other = JointState::new_ground(5).unwrap();
        assert!(matches!(overlap(&g0, &other), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn reductions() {
        let p = JointState::new_ground(3).unwrap().to_density();
        let ro = p.reduce_oscillator();
        assert_eq!(ro[(0, 0)], c(1.0, 0.0));
        assert_abs_diff_eq!(ro.iter().map(|z| z.norm()).sum::<f64>(), 1.0);

        let a = JointState::basis(3, Qubit::G, 0).unwrap().to_density();
        let b = JointState::basis(3, Qubit::E, 1).unwrap().to_density();
        let mixed = JointDensity::from_matrix(
            3,
            (a.matrix() + b.matrix()) * c(0.5, 0.0),
        )
        .unwrap();
        let ro = mixed.reduce_oscillator();
        assert_eq!(ro[(0, 0)], c(0.5, 0.0));
        assert_eq!(ro[(1, 1)], c(0.5, 0.0));
        assert_eq!(ro[(0, 1)], c(0.0, 0.0));
        assert_abs_diff_eq!(mixed.purity(), 0.5);
    }

    #[test]
    fn json_round_trip() {
        let s = JointState::from_terms(
            3,
            &[(Qubit::G, 0, c(0.1, 1.0 / 3.0)), (Qubit::E, 3, c(std::f64::consts::PI, -1e-300))],
        )
        .unwrap();
        let back = JointState::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
        let r = s.to_density();
        let back = JointDensity::from_json(&r.to_json()).unwrap();
        assert_eq!(r, back);
        assert!(JointState::from_json(r#"{"n_max":2,"amps":[[1,0]]}"#).is_err());
    }

    #[test]
    fn leakage_detects_top_levels() {
        let s = JointState::basis(6, Qubit::E, 5).unwrap();
        assert!(s.check_leakage(EPS_LEAK).is_err());
        assert!(JointState::basis(6, Qubit::E, 4).unwrap().check_leakage(EPS_LEAK).is_ok());
    }
}
