//! Alternating blue/red sideband preparation from `|g,0⟩`.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indices, sample_rng, Execution};
use crate::fockspace::{fock_distribution, FockDistribution, JointState, DEFAULT_N_MAX, EPS_LEAK};
use crate::sideband::{apply_pulse_in_place, PulseSpec, SidebandKind, HALF_TRANSFER_AREA};

pub const DEFAULT_SAMPLES: usize = 512;

/// Kind of the `j`-th pulse (0-based) in a preparation sequence.
pub fn kind_at(j: usize) -> SidebandKind {
    if j.is_multiple_of(2) {
        SidebandKind::Blue
    } else {
        SidebandKind::Red
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PulseSpec>", into = "Vec<PulseSpec>")]
pub struct SequenceSpec {
    pulses: Vec<PulseSpec>,
}

impl TryFrom<Vec<PulseSpec>> for SequenceSpec {
    type Error = Error;
    fn try_from(p: Vec<PulseSpec>) -> Result<Self> {
        SequenceSpec::new(p)
    }
}

impl From<SequenceSpec> for Vec<PulseSpec> {
    fn from(s: SequenceSpec) -> Self {
        s.pulses
    }
}

impl SequenceSpec {
    /// Validates that the pulses alternate blue, red, blue, ...
    pub fn new(pulses: Vec<PulseSpec>) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::InvalidInput("empty preparation sequence".into()));
        }
        for (j, p) in pulses.iter().enumerate() {
            if p.kind() != kind_at(j) {
                return Err(Error::InvalidInput(format!(
                    "pulse {j} is {:?}, expected {:?}",
                    p.kind(),
                    kind_at(j)
                )));
            }
        }
        Ok(SequenceSpec { pulses })
    }

    pub fn pulses(&self) -> &[PulseSpec] {
        &self.pulses
    }

    pub fn n_prep(&self) -> usize {
        self.pulses.len()
    }

    pub fn phase_vector(&self) -> Vec<f64> {
        self.pulses.iter().map(|p| p.phase()).collect()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.pulses.iter().map(|p| p.area()).collect()
    }
}

pub fn build_sequence(phases: &[f64], areas: &[f64]) -> Result<SequenceSpec> {
    if phases.len() != areas.len() {
        return Err(Error::InvalidPhases(format!(
            "{} phases for {} pulses",
            phases.len(),
            areas.len()
        )));
    }
    let pulses = phases
        .iter()
        .zip(areas)
        .enumerate()
        .map(|(j, (&phi, &a))| PulseSpec::new(kind_at(j), a, phi))
        .collect::<Result<Vec<_>>>()?;
    SequenceSpec::new(pulses)
}

pub fn build_half_transfer_sequence(n: usize, phases: &[f64]) -> Result<SequenceSpec> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    if phases.len() != n {
        return Err(Error::InvalidPhases(format!("{} phases for N={n}", phases.len())));
    }
    build_sequence(phases, &vec![HALF_TRANSFER_AREA; n])
}

/// How pulse areas are assigned along a sequence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaPolicy {
    #[default]
    HalfTransfer,
    /// Pulse `j` (1-based) gets `A/√j`, so the newly reached top transition
    /// `(j−1) ↔ j` always sees a half-transfer pulse.
    SqrtCompensated,
    Custom(Vec<f64>),
}

impl AreaPolicy {
    pub fn areas(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            AreaPolicy::HalfTransfer => Ok(vec![HALF_TRANSFER_AREA; n]),
            AreaPolicy::SqrtCompensated => {
                Ok((1..=n).map(|j| HALF_TRANSFER_AREA / (j as f64).sqrt()).collect())
            }
            AreaPolicy::Custom(a) => {
                if a.len() == n {
                    Ok(a.clone())
                } else {
                    Err(Error::InvalidInput(format!("{} areas for N={n}", a.len())))
                }
            }
        }
    }
}

/// Preparation length plus area assignment; phases are supplied per realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepConfig {
    pub n: usize,
    #[serde(default)]
    pub areas: AreaPolicy,
}

impl PrepConfig {
    pub fn half_transfer(n: usize) -> Self {
        PrepConfig {
            n,
            areas: AreaPolicy::HalfTransfer,
        }
    }

    pub fn sequence(&self, phases: &[f64]) -> Result<SequenceSpec> {
        build_sequence(phases, &self.areas.areas(self.n)?)
    }
}

pub fn prepare(seq: &SequenceSpec, n_max: usize) -> Result<JointState> {
    let mut s = JointState::new_ground(n_max)?;
    for p in seq.pulses() {
        apply_pulse_in_place(s.amps_mut(), p, n_max);
    }
    s.check_leakage(EPS_LEAK)?;
    Ok(s)
}

/// Uniform phases for sample `index` of a run.
pub fn sample_phase_vector(n: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = sample_rng(seed, index);
    (0..n).map(|_| rng.random_range(0.0..TAU)).collect()
}

pub fn sample_phase_vectors(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count as u64).map(|i| sample_phase_vector(n, seed, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub n: usize,
    /// Mean phonon number of the phase-averaged distribution.
    pub mean: f64,
    /// Standard deviation of the phase-averaged distribution.
    pub std: f64,
    /// Mean over realizations of the per-realization standard deviation.
    pub realization_std: f64,
    pub distribution: FockDistribution,
}

pub fn growth_curve(
    n_list: &[usize],
    areas: &AreaPolicy,
    samples: usize,
    seed: u64,
    n_max: usize,
    exec: Execution,
) -> Result<Vec<GrowthPoint>> {
    n_list
        .iter()
        .map(|&n| {
            let cfg = PrepConfig {
                n,
                areas: areas.clone(),
            };
            let dists = map_indices(exec, samples, |i| {
                let phases = sample_phase_vector(n, seed, i as u64);
                prepare(&cfg.sequence(&phases)?, n_max).map(|s| fock_distribution(&s))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let avg = FockDistribution::average(&dists);
            Ok(GrowthPoint {
                n,
                mean: avg.mean,
                std: avg.std,
                realization_std: dists.iter().map(|d| d.std).sum::<f64>() / dists.len() as f64,
                distribution: avg,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKeyword {
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseSource {
    Named(PhaseKeyword),
    Fixed(Vec<f64>),
}

impl Default for PhaseSource {
    fn default() -> Self {
        PhaseSource::Named(PhaseKeyword::Random)
    }
}

/// `{N, areas, phases: "random" | [...], samples, seed, n_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub areas: Option<Vec<f64>>,
    #[serde(default)]
    pub phases: PhaseSource,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_n_max() -> usize {
    DEFAULT_N_MAX
}

impl Scenario {
    pub fn prep_config(&self) -> PrepConfig {
        PrepConfig {
            n: self.n,
            areas: match &self.areas {
                Some(a) => AreaPolicy::Custom(a.clone()),
                None => AreaPolicy::HalfTransfer,
            },
        }
    }

    /// Phase vectors of this scenario: one fixed vector, or `samples` random ones.
    pub fn phase_vectors(&self) -> Result<Vec<Vec<f64>>> {
        match &self.phases {
            PhaseSource::Fixed(p) => {
                if p.len() != self.n {
                    return Err(Error::InvalidPhases(format!("{} phases for N={}", p.len(), self.n)));
                }
                Ok(vec![p.clone()])
            }
            PhaseSource::Named(PhaseKeyword::Random) => Ok(sample_phase_vectors(self.n, self.samples, self.seed)),
        }
    }
}
