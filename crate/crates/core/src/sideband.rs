//! Sideband and carrier pulses on the truncated qubit ⊗ Fock space.
//!
//! A pulse rotates each coupled pair `(g, n) ↔ (e, n')` by the mixing angle
//! `a = Ω t / 2`. With the pulse phase `φ` the 2×2 block acting on
//! `(c_g, c_e)` is
//!
//! ```text
//! [  cos a          −e^{−iφ} sin a ]
//! [  e^{iφ} sin a    cos a         ]
//! ```
//!
//! Under the Lamb-Dicke model the angle is `(A/2)·√m` with `m` the larger Fock
//! index of the pair, so `A = π/2` transfers half the population on
//! `(g,0) ↔ (e,1)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{basis_index, dim, JointDensity, JointState, Qubit, EPS_LEAK};

/// Area giving 50 % transfer on `(g,0) ↔ (e,1)`.
pub const HALF_TRANSFER_AREA: f64 = FRAC_PI_2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SidebandKind {
    #[serde(rename = "RSB", alias = "rsb", alias = "red")]
    Red,
    #[serde(rename = "BSB", alias = "bsb", alias = "blue")]
    Blue,
    #[serde(rename = "Carrier", alias = "carrier")]
    Carrier,
}

impl SidebandKind {
    /// Fock index change accompanying `g → e`.
    pub fn l(self) -> i32 {
        match self {
            SidebandKind::Red => -1,
            SidebandKind::Blue => 1,
            SidebandKind::Carrier => 0,
        }
    }

    pub fn letter(self) -> char {
        match self {
            SidebandKind::Red => 'R',
            SidebandKind::Blue => 'B',
            SidebandKind::Carrier => 'C',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum RabiModel {
    #[default]
    LambDicke,
    #[serde(rename = "BeyondLD")]
    BeyondLambDicke { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct PulseWire {
    kind: SidebandKind,
    area: f64,
    phase: f64,
    #[serde(default)]
    rabi_model: RabiModel,
}

/// One pulse. Sideband areas are `ηΩ₀t`; carrier areas are `Ω₀t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PulseWire", into = "PulseWire")]
pub struct PulseSpec {
    kind: SidebandKind,
    area: f64,
    phase: f64,
    rabi_model: RabiModel,
}

impl TryFrom<PulseWire> for PulseSpec {
    type Error = Error;
    fn try_from(w: PulseWire) -> Result<Self> {
        PulseSpec::with_model(w.kind, w.area, w.phase, w.rabi_model)
    }
}

impl From<PulseSpec> for PulseWire {
    fn from(p: PulseSpec) -> Self {
        PulseWire {
            kind: p.kind,
            area: p.area,
            phase: p.phase,
            rabi_model: p.rabi_model,
        }
    }
}

pub fn normalize_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl PulseSpec {
    pub fn new(kind: SidebandKind, area: f64, phase: f64) -> Result<Self> {
        Self::with_model(kind, area, phase, RabiModel::LambDicke)
    }

    pub fn with_model(kind: SidebandKind, area: f64, phase: f64, rabi_model: RabiModel) -> Result<Self> {
        if !area.is_finite() || area < 0.0 {
            return Err(Error::InvalidInput(format!("pulse area must be finite and ≥ 0, got {area}")));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidPhases(format!("non-finite pulse phase {phase}")));
        }
        if let RabiModel::BeyondLambDicke { eta } = rabi_model {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::InvalidInput(format!("Lamb-Dicke parameter must be > 0, got {eta}")));
            }
        }
        Ok(PulseSpec {
            kind,
            area,
            phase: normalize_phase(phase),
            rabi_model,
        })
    }

    pub fn red(area: f64, phase: f64) -> Result<Self> {
        Self::new(SidebandKind::Red, area, phase)
    }

    pub fn blue(area: f64, phase: f64) -> Result<Self> {
        Self::new(SidebandKind::Blue, area, phase)
    }

    pub fn kind(&self) -> SidebandKind {
        self.kind
    }
    pub fn area(&self) -> f64 {
        self.area
    }
    pub fn phase(&self) -> f64 {
        self.phase
    }
    pub fn rabi_model(&self) -> RabiModel {
        self.rabi_model
    }
}

/// `|⟨m|e^{iη(a+a†)}|n⟩|` for all `m, n < size`, from the eigenbasis of `a+a†`
/// truncated at `size`.
pub fn displacement_magnitudes(eta: f64, size: usize) -> DMatrix<f64> {
    let x = DMatrix::<f64>::from_fn(size, size, |i, j| {
        if j == i + 1 {
            (j as f64).sqrt()
        } else if i == j + 1 {
            (i as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = x.symmetric_eigen();
    let v = &eig.eigenvectors;
    let ph: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|l| Complex64::from_polar(1.0, eta * l))
        .collect();
    DMatrix::from_fn(size, size, |m, n| {
        let mut acc = ZERO;
        for k in 0..size {
            acc += ph[k] * (v[(m, k)] * v[(n, k)]);
        }
        acc.norm()
    })
}

fn displacement_size(n: usize) -> usize {
    (3 * (n + 2)).max(n + 40)
}

/// Rabi frequency of `n → n + l`: units of `ηΩ₀` under Lamb-Dicke, `Ω₀` otherwise.
pub fn rabi_frequency(n: usize, l: i32, model: RabiModel) -> Result<f64> {
    let target = match l {
        1 => n + 1,
        -1 => {
            if n == 0 {
                return Err(Error::NoTransition { n, l });
            }
            n - 1
        }
        0 => n,
        _ => return Err(Error::NoTransition { n, l }),
    };
    Ok(match model {
        RabiModel::LambDicke => match l {
            0 => 1.0,
            _ => (n.max(target) as f64).sqrt(),
        },
        RabiModel::BeyondLambDicke { eta } => {
            displacement_magnitudes(eta, displacement_size(n.max(target)))[(target, n)]
        }
    })
}

/// Mixing angle per coupled pair. Sideband pairs are keyed by the larger Fock
/// index `m ∈ 1..=n_max`; carrier pairs by `n ∈ 0..=n_max`.
fn mixing_angles(kind: SidebandKind, area: f64, model: RabiModel, n_max: usize) -> Vec<f64> {
    match (kind, model) {
        (SidebandKind::Carrier, RabiModel::LambDicke) => vec![area / 2.0; n_max + 1],
        (_, RabiModel::LambDicke) => (0..=n_max).map(|m| area / 2.0 * (m as f64).sqrt()).collect(),
        (SidebandKind::Carrier, RabiModel::BeyondLambDicke { eta }) => {
            let d = displacement_magnitudes(eta, displacement_size(n_max));
            (0..=n_max).map(|n| area / 2.0 * d[(n, n)]).collect()
        }
        (_, RabiModel::BeyondLambDicke { eta }) => {
            let d = displacement_magnitudes(eta, displacement_size(n_max));
            (0..=n_max)
                .map(|m| if m == 0 { 0.0 } else { area / (2.0 * eta) * d[(m, m - 1)] })
                .collect()
        }
    }
}

/// Unitary made of 2×2 blocks: row `i` has `diag[i]` at column `i` and
/// `off[i]` at column `partner[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockUnitary {
    diag: Vec<Complex64>,
    off: Vec<Complex64>,
    partner: Vec<Option<usize>>,
}

impl BlockUnitary {
    pub fn identity(d: usize) -> Self {
        BlockUnitary {
            diag: vec![ONE; d],
            off: vec![ZERO; d],
            partner: vec![None; d],
        }
    }

    pub fn from_pulse(pulse: &PulseSpec, n_max: usize) -> Self {
        let mut u = Self::identity(dim(n_max));
        if pulse.area == 0.0 {
            return u;
        }
        let angles = mixing_angles(pulse.kind, pulse.area, pulse.rabi_model, n_max);
        let ep = Complex64::from_polar(1.0, pulse.phase);
        let mut set = |g: usize, e: usize, a: f64| {
            let (s, c) = a.sin_cos();
            u.diag[g] = Complex64::new(c, 0.0);
            u.diag[e] = Complex64::new(c, 0.0);
            u.off[g] = -ep.conj() * s;
            u.off[e] = ep * s;
            u.partner[g] = Some(e);
            u.partner[e] = Some(g);
        };
        match pulse.kind {
            SidebandKind::Blue => {
                for n in 0..n_max {
                    set(basis_index(Qubit::G, n), basis_index(Qubit::E, n + 1), angles[n + 1]);
                }
            }
            SidebandKind::Red => {
                for n in 1..=n_max {
                    set(basis_index(Qubit::G, n), basis_index(Qubit::E, n - 1), angles[n]);
                }
            }
            SidebandKind::Carrier => {
                for n in 0..=n_max {
                    set(basis_index(Qubit::G, n), basis_index(Qubit::E, n), angles[n]);
                }
            }
        }
        u
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Same unitary with the pulse phase advanced by `dphi`.
    pub fn shifted(&self, dphi: f64) -> BlockUnitary {
        let ep = Complex64::from_polar(1.0, dphi);
        let off = self
            .off
            .iter()
            .enumerate()
            .map(|(i, z)| if i % 2 == 0 { z * ep.conj() } else { z * ep })
            .collect();
        BlockUnitary {
            diag: self.diag.clone(),
            off,
            partner: self.partner.clone(),
        }
    }

    pub fn apply(&self, v: &mut [Complex64]) {
        for i in 0..v.len() {
            if let Some(j) = self.partner[i] {
                if i < j {
                    let (a, b) = (v[i], v[j]);
                    v[i] = self.diag[i] * a + self.off[i] * b;
                    v[j] = self.diag[j] * b + self.off[j] * a;
                }
            }
        }
    }

    /// Row `i` as `(column, value)` entries.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        std::iter::once((i, self.diag[i])).chain(self.partner[i].map(|j| (j, self.off[i])))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for (j, z) in self.row(i) {
                m[(i, j)] = z;
            }
        }
        m
    }

    /// `U ρ U†` in place.
    pub fn conjugate(&self, rho: &mut DMatrix<Complex64>) {
        let d = self.dim();
        for c in 0..d {
            let mut col = rho.column_mut(c);
            self.apply(col.as_mut_slice());
        }
        for i in 0..d {
            if let Some(j) = self.partner[i] {
                if i < j {
                    let (di, oi, dj, oj) = (
                        self.diag[i].conj(),
                        self.off[i].conj(),
                        self.diag[j].conj(),
                        self.off[j].conj(),
                    );
                    for r in 0..d {
                        let (a, b) = (rho[(r, i)], rho[(r, j)]);
                        rho[(r, i)] = a * di + b * oi;
                        rho[(r, j)] = b * dj + a * oj;
                    }
                }
            }
        }
    }
}

/// Applies a pulse without the cutoff check.
pub fn apply_pulse_in_place(amps: &mut [Complex64], pulse: &PulseSpec, n_max: usize) {
    BlockUnitary::from_pulse(pulse, n_max).apply(amps);
}

pub fn apply_pulse(state: &JointState, pulse: &PulseSpec) -> Result<JointState> {
    let mut out = state.clone();
    apply_pulse_in_place(out.amps_mut(), pulse, state.n_max());
    out.check_leakage(EPS_LEAK)?;
    Ok(out)
}

pub fn apply_pulse_density(rho: &JointDensity, pulse: &PulseSpec) -> Result<JointDensity> {
    let n_max = rho.n_max();
    let mut m = rho.matrix().clone();
    BlockUnitary::from_pulse(pulse, n_max).conjugate(&mut m);
    let d = m.nrows();
    let leakage: f64 = (d - 4..d).map(|i| m[(i, i)].re).sum();
    if leakage > EPS_LEAK {
        return Err(Error::CutoffViolation {
            leakage,
            tolerance: EPS_LEAK,
        });
    }
    JointDensity::from_matrix(n_max, m)
}

pub fn pulse_matrix(pulse: &PulseSpec, n_max: usize) -> DMatrix<Complex64> {
    BlockUnitary::from_pulse(pulse, n_max).to_dense()
}

/// Qubit phase `θ` and oscillator phase `Θ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseRotation {
    pub theta: f64,
    #[serde(rename = "Theta")]
    pub big_theta: f64,
}

impl PhaseRotation {
    pub fn new(theta: f64, big_theta: f64) -> Result<Self> {
        if !(theta.is_finite() && big_theta.is_finite()) {
            return Err(Error::InvalidPhases("non-finite rotation".into()));
        }
        Ok(PhaseRotation { theta, big_theta })
    }

    pub fn factor(&self, q: Qubit, n: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.theta / 2.0 * q.sigma_z() + self.big_theta * n as f64)
    }

    pub fn factors(&self, n_max: usize) -> Vec<Complex64> {
        (0..dim(n_max))
            .map(|i| {
                let q = if i % 2 == 0 { Qubit::G } else { Qubit::E };
                self.factor(q, i / 2)
            })
            .collect()
    }

    /// Shift of a pulse phase equivalent to commuting this rotation through
    /// the pulse: `U(φ)·R = R·U(φ + shift)`.
    pub fn pulse_phase_shift(&self, kind: SidebandKind) -> f64 {
        match kind {
            SidebandKind::Red => -self.theta + self.big_theta,
            SidebandKind::Blue => -self.theta - self.big_theta,
            SidebandKind::Carrier => -self.theta,
        }
    }
}

pub fn apply_phase_rotation(state: &JointState, rot: &PhaseRotation) -> JointState {
    let f = rot.factors(state.n_max());
    let amps = state.amps().iter().zip(&f).map(|(a, b)| a * b).collect();
    JointState::from_amplitudes(state.n_max(), amps).expect("same dimension")
}

pub fn apply_phase_rotation_density(rho: &JointDensity, rot: &PhaseRotation) -> JointDensity {
    let f = rot.factors(rho.n_max());
    let d = rho.dim();
    let m = DMatrix::from_fn(d, d, |i, j| f[i] * rho.matrix()[(i, j)] * f[j].conj());
    JointDensity::from_matrix(rho.n_max(), m).expect("same dimension")
}

/// Which sideband a phase rotation is pushed through, and whether the
/// rotation acts on the qubit (`θ`) or the oscillator (`Θ`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommutationIdentity {
    RedQubitPhase,
    RedOscillatorPhase,
    BlueQubitPhase,
    BlueOscillatorPhase,
}

impl CommutationIdentity {
    pub const ALL: [CommutationIdentity; 4] = [
        CommutationIdentity::RedQubitPhase,
        CommutationIdentity::RedOscillatorPhase,
        CommutationIdentity::BlueQubitPhase,
        CommutationIdentity::BlueOscillatorPhase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommutationIdentity::RedQubitPhase => "red-qubit-phase",
            CommutationIdentity::RedOscillatorPhase => "red-oscillator-phase",
            CommutationIdentity::BlueQubitPhase => "blue-qubit-phase",
            CommutationIdentity::BlueOscillatorPhase => "blue-oscillator-phase",
        }
    }

    pub fn kind(self) -> SidebandKind {
        match self {
            CommutationIdentity::RedQubitPhase | CommutationIdentity::RedOscillatorPhase => SidebandKind::Red,
            _ => SidebandKind::Blue,
        }
    }

    pub fn rotation(self, angle: f64) -> PhaseRotation {
        match self {
            CommutationIdentity::RedQubitPhase | CommutationIdentity::BlueQubitPhase => PhaseRotation {
                theta: angle,
                big_theta: 0.0,
            },
            _ => PhaseRotation {
                theta: 0.0,
                big_theta: angle,
            },
        }
    }

    /// Sign `s` in `φ → φ + s·angle` for the generator phase.
    pub fn shift_sign(self) -> f64 {
        match self {
            CommutationIdentity::RedOscillatorPhase => -1.0,
            _ => 1.0,
        }
    }
}

/// Hermitian sideband generator `σ₊a e^{−iψ} + h.c.` (red) or
/// `σ₊a† e^{−iψ} + h.c.` (blue). `exp(i(A/2)G(ψ))` equals the pulse with
/// phase `π/2 − ψ`.
pub fn sideband_generator(kind: SidebandKind, psi: f64, n_max: usize) -> DMatrix<Complex64> {
    let d = dim(n_max);
    let mut g = DMatrix::zeros(d, d);
    let ph = Complex64::from_polar(1.0, -psi);
    let mut put = |gi: usize, ei: usize, m: usize| {
        let v = ph * (m as f64).sqrt();
        g[(ei, gi)] = v;
        g[(gi, ei)] = v.conj();
    };
    match kind {
        SidebandKind::Red => {
            for n in 1..=n_max {
                put(basis_index(Qubit::G, n), basis_index(Qubit::E, n - 1), n);
            }
        }
        SidebandKind::Blue => {
            for n in 0..n_max {
                put(basis_index(Qubit::G, n), basis_index(Qubit::E, n + 1), n + 1);
            }
        }
        SidebandKind::Carrier => {
            for n in 0..=n_max {
                g[(basis_index(Qubit::E, n), basis_index(Qubit::G, n))] = ph;
                g[(basis_index(Qubit::G, n), basis_index(Qubit::E, n))] = ph.conj();
            }
        }
    }
    g
}

/// Generator phase equivalent to a pulse phase.
pub fn generator_phase(pulse_phase: f64) -> f64 {
    FRAC_PI_2 - pulse_phase
}

pub fn expm_hermitian_generator(g: &DMatrix<Complex64>, kappa: f64) -> DMatrix<Complex64> {
    (g * Complex64::new(0.0, kappa)).exp()
}

/// Max interior deviation between both sides of a commutation identity.
pub fn verify_commutation_identity(
    id: CommutationIdentity,
    area: f64,
    angle: f64,
    phi: f64,
    n_max: usize,
) -> f64 {
    verify_commutation_identity_with_sign(id, area, angle, phi, n_max, id.shift_sign())
}

/// As [`verify_commutation_identity`] with an explicit phase-shift sign.
pub fn verify_commutation_identity_with_sign(
    id: CommutationIdentity,
    area: f64,
    angle: f64,
    phi: f64,
    n_max: usize,
    sign: f64,
) -> f64 {
    let kappa = area / 2.0;
    let kind = id.kind();
    let rot = DMatrix::from_diagonal(&DVector::from_vec(id.rotation(angle).factors(n_max)));
    let left = expm_hermitian_generator(&sideband_generator(kind, phi, n_max), kappa) * &rot;
    let shifted = phi + sign * angle;
    let right = &rot * expm_hermitian_generator(&sideband_generator(kind, shifted, n_max), kappa);
    let interior = dim(n_max) - 4;
    let mut worst = 0.0f64;
    for i in 0..interior {
        for j in 0..interior {
            worst = worst.max((left[(i, j)] - right[(i, j)]).norm());
        }
    }
    worst
}

/// Fock indices at which a pulse of the given area acts as a full cycle,
/// i.e. transfers less than `tol` of the population.
pub fn full_cycle_levels(kind: SidebandKind, area: f64, n_max: usize, tol: f64) -> Vec<usize> {
    let angles = mixing_angles(kind, area, RabiModel::LambDicke, n_max);
    (1..=n_max)
        .filter(|&m| angles[m].sin().powi(2) < tol)
        .collect()
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use approx::assert_abs_diff_eq;

    fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
        let mut l0 = 1.0;
        if n == 0 {
            return l0;
        }
        let mut l1 = 1.0 + alpha - x;
        for k in 1..n {
            let k = k as f64;
            let l2 = ((2.0 * k + 1.0 + alpha - x) * l1 - (k + alpha) * l0) / (k + 1.0);
            l0 = l1;
            l1 = l2;
        }
        l1
    }

    fn blue_element_oracle(eta: f64, n: usize) -> f64 {
        let x = eta * eta;
        ((-x / 2.0).exp() * eta * laguerre(n, 1.0, x) / ((n + 1) as f64).sqrt()).abs()
    }

    #[test]
    fn bsb_on_ground() {
        let t = 0.83;
        let s = JointState::new_ground(6).unwrap();
        let out = apply_pulse(&s, &PulseSpec::blue(t, 1.1).unwrap()).unwrap();
        assert_abs_diff_eq!(out.amp(Qubit::G, 0).norm_sqr(), (t / 2.0).cos().powi(2), epsilon = 1e-15);
        assert_abs_diff_eq!(out.amp(Qubit::E, 1).norm_sqr(), (t / 2.0).sin().powi(2), epsilon = 1e-15);
        let z = out.amp(Qubit::E, 1) / (t / 2.0).sin();
        assert_abs_diff_eq!(z.arg(), 1.1, epsilon = 1e-12);
    }

    #[test]
    fn rsb_leaves_ground() {
        let s = JointState::new_ground(6).unwrap();
        let out = apply_pulse(&s, &PulseSpec::red(2.3, 0.4).unwrap()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn rsb_on_e1() {
        let t = 0.9;
        let s = JointState::basis(6, Qubit::E, 1).unwrap();
        let out = apply_pulse(&s, &PulseSpec::red(t, 0.0).unwrap()).unwrap();
        let a = t / 2f64.sqrt();
        assert_abs_diff_eq!(out.amp(Qubit::E, 1).norm_sqr(), a.cos().powi(2), epsilon = 1e-15);
        assert_abs_diff_eq!(out.amp(Qubit::G, 2).norm_sqr(), a.sin().powi(2), epsilon = 1e-15);
    }

    #[test]
    fn opposite_phase_undoes() {
        for kind in [SidebandKind::Red, SidebandKind::Blue, SidebandKind::Carrier] {
            let a = pulse_matrix(&PulseSpec::new(kind, 1.7, 0.3).unwrap(), 8);
            let b = pulse_matrix(&PulseSpec::new(kind, 1.7, 0.3 + PI).unwrap(), 8);
            let p = b * a;
            let err = max_abs_diff(&p, &DMatrix::<Complex64>::identity(18, 18));
            assert!(err < 1e-12, "{kind:?}: {err}");
        }
    }

    #[test]
    fn shifted_matches_rebuilt() {
        for kind in [SidebandKind::Red, SidebandKind::Blue, SidebandKind::Carrier] {
            let a = BlockUnitary::from_pulse(&PulseSpec::new(kind, 1.1, 0.4).unwrap(), 6).shifted(2.0);
            let b = BlockUnitary::from_pulse(&PulseSpec::new(kind, 1.1, 2.4).unwrap(), 6);
            assert!(max_abs_diff(&a.to_dense(), &b.to_dense()) < 1e-15);
        }
    }

    #[test]
    fn pulse_matches_generator_exponential() {
        let n_max = 12;
        for kind in [SidebandKind::Red, SidebandKind::Blue, SidebandKind::Carrier] {
            let p = PulseSpec::new(kind, 1.3, 2.2).unwrap();
            let dense = pulse_matrix(&p, n_max);
            let g = sideband_generator(kind, generator_phase(p.phase()), n_max);
            let e = expm_hermitian_generator(&g, p.area() / 2.0);
            assert!(max_abs_diff(&dense, &e) < 1e-12);
        }
    }

    #[test]
    fn rabi_frequencies() {
        assert_eq!(rabi_frequency(0, 1, RabiModel::LambDicke).unwrap(), 1.0);
        assert_abs_diff_eq!(rabi_frequency(2, -1, RabiModel::LambDicke).unwrap(), 2f64.sqrt());
        assert!(matches!(
            rabi_frequency(0, -1, RabiModel::LambDicke),
            Err(Error::NoTransition { .. })
        ));
        let eta = 0.0629;
        let m = RabiModel::BeyondLambDicke { eta };
        for n in [0usize, 1, 4, 11] {
            let got = rabi_frequency(n, 1, m).unwrap();
            assert_abs_diff_eq!(got, blue_element_oracle(eta, n), epsilon = 1e-10);
            let red = rabi_frequency(n + 1, -1, m).unwrap();
            assert_abs_diff_eq!(red, got, epsilon = 1e-10);
        }
        let big = RabiModel::BeyondLambDicke { eta: 0.4 };
        assert_abs_diff_eq!(
            rabi_frequency(3, 1, big).unwrap(),
            blue_element_oracle(0.4, 3),
            epsilon = 1e-10
        );
    }

    #[test]
    fn beyond_ld_small_eta_limit() {
        for eta in [1e-2, 5e-3] {
            let m = RabiModel::BeyondLambDicke { eta };
            for n in 0..6 {
                let r = rabi_frequency(n, 1, m).unwrap() / eta;
                let ld = rabi_frequency(n, 1, RabiModel::LambDicke).unwrap();
                assert!((r - ld).abs() < 3.0 * (n as f64 + 1.0).powi(2) * eta * eta);
            }
        }
    }

    #[test]
    fn phase_rotation_examples() {
        let s = JointState::from_terms(
            4,
            &[(Qubit::G, 0, Complex64::new(1.0, 0.0)), (Qubit::G, 2, Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let r = apply_phase_rotation(&s, &PhaseRotation::new(0.0, PI).unwrap());
        for (a, b) in r.amps().iter().zip(s.amps()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }
        let e1 = JointState::basis(4, Qubit::E, 1).unwrap();
        let r = apply_phase_rotation(&e1, &PhaseRotation::new(0.0, FRAC_PI_2).unwrap());
        assert_abs_diff_eq!((r.amp(Qubit::E, 1) - Complex64::i()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn identities_hold() {
        for id in CommutationIdentity::ALL {
            assert_eq!(verify_commutation_identity(id, 0.7, 0.0, 0.2, 10), 0.0);
            let dev = verify_commutation_identity(id, 0.7, 1.3, 0.2, 20);
            assert!(dev < 1e-10, "{}: {dev}", id.name());
        }
        let bad = verify_commutation_identity_with_sign(CommutationIdentity::RedOscillatorPhase, 0.7, 1.3, 0.2, 20, 1.0);
        assert!(bad > 1e-3);
    }

    #[test]
    fn density_conjugation_matches_dense() {
        let s = JointState::from_terms(
            5,
            &[
                (Qubit::G, 0, Complex64::new(0.3, 0.1)),
                (Qubit::E, 1, Complex64::new(-0.2, 0.7)),
                (Qubit::G, 2, Complex64::new(0.5, -0.4)),
            ],
        )
        .unwrap();
        let p = PulseSpec::blue(1.1, 0.9).unwrap();
        let via_state = apply_pulse(&s, &p).unwrap().to_density();
        let via_rho = apply_pulse_density(&s.to_density(), &p).unwrap();
        assert!(max_abs_diff(via_state.matrix(), via_rho.matrix()) < 1e-14);
    }

    #[test]
    fn pulse_json() {
        let p = PulseSpec::with_model(SidebandKind::Red, 1.2, -0.5, RabiModel::BeyondLambDicke { eta: 0.06 })
            .unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"RSB\"") && s.contains("\"BeyondLD\""));
        assert_eq!(serde_json::from_str::<PulseSpec>(&s).unwrap(), p);
        assert!(serde_json::from_str::<PulseSpec>(r#"{"kind":"BSB","area":-1,"phase":0}"#).is_err());
        let q: PulseSpec = serde_json::from_str(r#"{"kind":"BSB","area":1,"phase":7,"rabi_model":{"type":"LambDicke"}}"#).unwrap();
        assert_abs_diff_eq!(q.phase(), 7.0 - TAU, epsilon = 1e-15);
    }

    #[test]
    fn full_cycle_exists() {
        // √m·π/4 ≈ kπ at m = 16
        let levels = full_cycle_levels(SidebandKind::Blue, HALF_TRANSFER_AREA, 32, 1e-3);
        assert!(levels.contains(&16));
    }
}
