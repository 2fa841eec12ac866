//! Phenomenological decoherence models acting on a prepared pure state.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{JointDensity, JointState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// `w|Ψ⟩⟨Ψ| + (1−w)·diag`.
    WMixture,
    /// Off-diagonals scaled by `w^{|n−m|}`.
    WPower,
    /// Qubit coherences removed, oscillator coherence kept in each branch.
    QubitDephase,
    /// Diagonal in the joint basis.
    FullDephase,
    /// `w|Ψ⟩⟨Ψ|` plus `(1−w)` of the qubit-dephased mixture.
    ClassicalMixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelWire", into = "ModelWire")]
pub struct DecoherenceModel {
    kind: NoiseKind,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelWire {
    kind: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<f64>,
}

impl TryFrom<ModelWire> for DecoherenceModel {
    type Error = Error;
    fn try_from(m: ModelWire) -> Result<Self> {
        DecoherenceModel::new(m.kind, m.w.unwrap_or(1.0))
    }
}

impl From<DecoherenceModel> for ModelWire {
    fn from(m: DecoherenceModel) -> Self {
        let w = match m.kind {
            NoiseKind::QubitDephase | NoiseKind::FullDephase => None,
            _ => Some(m.w),
        };
        ModelWire { kind: m.kind, w }
    }
}

impl DecoherenceModel {
    pub fn new(kind: NoiseKind, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidInput(format!("w must lie in [0, 1], got {w}")));
        }
        Ok(DecoherenceModel { kind, w })
    }

    pub fn w_mixture(w: f64) -> Result<Self> {
        Self::new(NoiseKind::WMixture, w)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn w(&self) -> f64 {
        self.w
    }
}

fn fock_of(i: usize) -> usize {
    i / 2
}

fn qubit_of(i: usize) -> usize {
    i % 2
}

fn require_parity_lock(state: &JointState) -> Result<()> {
    let off = state.off_parity_weight();
    if off > 1e-12 {
        Err(Error::NotParityLocked(off))
    } else {
        Ok(())
    }
}

pub fn apply_model(pure: &JointState, model: &DecoherenceModel) -> Result<JointDensity> {
    let n_max = pure.n_max();
    let rho = pure.to_density();
    let w = model.w;
    let m = rho.matrix();
    let d = m.nrows();
    let zero = Complex64::new(0.0, 0.0);
    let out = match model.kind {
        NoiseKind::WMixture => DMatrix::from_fn(d, d, |i, j| if i == j { m[(i, j)] } else { m[(i, j)] * w }),
        NoiseKind::WPower => DMatrix::from_fn(d, d, |i, j| {
            let k = fock_of(i).abs_diff(fock_of(j));
            if k == 0 {
                m[(i, j)]
            } else {
                m[(i, j)] * w.powi(k as i32)
            }
        }),
        NoiseKind::FullDephase => DMatrix::from_fn(d, d, |i, j| if i == j { m[(i, j)] } else { zero }),
        NoiseKind::QubitDephase => {
            require_parity_lock(pure)?;
            DMatrix::from_fn(d, d, |i, j| if qubit_of(i) == qubit_of(j) { m[(i, j)] } else { zero })
        }
        NoiseKind::ClassicalMixture => {
            require_parity_lock(pure)?;
            DMatrix::from_fn(d, d, |i, j| {
                if qubit_of(i) == qubit_of(j) {
                    m[(i, j)]
                } else {
                    m[(i, j)] * w
                }
            })
        }
    };
    JointDensity::from_matrix(n_max, out)
}

pub fn purity(rho: &JointDensity) -> f64 {
    rho.purity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{fock_distribution, Qubit};
    use crate::preparation::{build_half_transfer_sequence, prepare, sample_phase_vector};
    use approx::assert_abs_diff_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn mixture_limits() {
        let s = prepare(&build_half_transfer_sequence(3, &[0.1, 0.5, 2.0]).unwrap(), 10).unwrap();
        let one = apply_model(&s, &DecoherenceModel::w_mixture(1.0).unwrap()).unwrap();
        assert_eq!(one, s.to_density());
        let zero = apply_model(&s, &DecoherenceModel::w_mixture(0.0).unwrap()).unwrap();
        assert_eq!(zero, s.to_density().dephased());
    }

    #[test]
    fn power_law_on_distance_three() {
        let s = JointState::from_terms(6, &[(Qubit::G, 0, c(1.0)), (Qubit::G, 3, c(1.0))]).unwrap();
        let r = apply_model(&s, &DecoherenceModel::new(NoiseKind::WPower, 0.8).unwrap()).unwrap();
        assert_abs_diff_eq!(r.matrix()[(0, 6)].norm(), 0.5 * 0.8f64.powi(3), epsilon = 1e-15);
    }

    #[test]
    fn purity_closed_form() {
        // M equal-weight components: tr ρ² = w² + (1 − w²)/M
        let m = 5usize;
        let terms: Vec<_> = (0..m).map(|n| (if n % 2 == 0 { Qubit::G } else { Qubit::E }, n, c(1.0))).collect();
        let s = JointState::from_terms(8, &terms).unwrap();
        for w in [0.0, 0.3, 0.9, 1.0] {
            let r = apply_model(&s, &DecoherenceModel::w_mixture(w).unwrap()).unwrap();
            assert_abs_diff_eq!(purity(&r), w * w + (1.0 - w * w) / m as f64, epsilon = 1e-12);
        }
        let half = JointState::from_terms(3, &[(Qubit::G, 0, c(1.0)), (Qubit::G, 1, c(1.0))]).unwrap();
        let r = apply_model(&half, &DecoherenceModel::new(NoiseKind::FullDephase, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(purity(&r), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn n8_purity_at_point_nine() {
        let mut acc = 0.0;
        let k = 64;
        for i in 0..k {
            let s = prepare(&build_half_transfer_sequence(8, &sample_phase_vector(8, 11, i)).unwrap(), 32).unwrap();
            acc += purity(&apply_model(&s, &DecoherenceModel::w_mixture(0.9).unwrap()).unwrap());
        }
        let p = acc / k as f64;
        assert!((p - 0.82).abs() < 0.03, "purity {p}");
    }

    #[test]
    fn requires_parity_lock() {
        let s = JointState::from_terms(4, &[(Qubit::G, 0, c(1.0)), (Qubit::G, 1, c(1.0))]).unwrap();
        for kind in [NoiseKind::QubitDephase, NoiseKind::ClassicalMixture] {
            assert!(matches!(
                apply_model(&s, &DecoherenceModel::new(kind, 0.5).unwrap()),
                Err(Error::NotParityLocked(_))
            ));
        }
    }

    #[test]
    fn diagonals_preserved() {
        let s = prepare(&build_half_transfer_sequence(4, &[0.3, 1.0, 4.0, 2.0]).unwrap(), 10).unwrap();
        let p0 = fock_distribution(&s);
        for kind in [
            NoiseKind::WMixture,
            NoiseKind::WPower,
            NoiseKind::QubitDephase,
            NoiseKind::FullDephase,
            NoiseKind::ClassicalMixture,
        ] {
            let r = apply_model(&s, &DecoherenceModel::new(kind, 0.6).unwrap()).unwrap();
            assert_eq!(fock_distribution(&r).probs, p0.probs);
            r.validate().unwrap();
        }
    }

    #[test]
    fn model_json() {
        let m: DecoherenceModel = serde_json::from_str(r#"{"kind":"w-mixture","w":0.9}"#).unwrap();
        assert_eq!(m, DecoherenceModel::w_mixture(0.9).unwrap());
        let d: DecoherenceModel = serde_json::from_str(r#"{"kind":"full-dephase"}"#).unwrap();
        assert_eq!(serde_json::to_string(&d).unwrap(), r#"{"kind":"full-dephase"}"#);
        assert!(serde_json::from_str::<DecoherenceModel>(r#"{"kind":"w-power","w":1.5}"#).is_err());
    }
}
