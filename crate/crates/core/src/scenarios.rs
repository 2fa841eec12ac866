//! Rabi-gate instability comparison, cat-state fringe theory and
//! detection-area optimization.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indices, sample_rng, Execution};
use crate::fockspace::{basis_index, fock_distribution, JointState, Qubit, EPS_LEAK};
use crate::interferometry::{fringe_metrics, mean_stderr, scan_fringe, uniform_grid, VerificationSpec};
use crate::linalg::operator_norm;
use crate::preparation::{build_sequence, kind_at, prepare};
use crate::sideband::{
    apply_pulse_in_place, expm_hermitian_generator, sideband_generator, BlockUnitary, PhaseRotation, PulseSpec, SidebandKind,
    HALF_TRANSFER_AREA,
};

pub const DEFAULT_TROTTER_STEPS: usize = 64;
/// Gate time whose single-sideband rotation matches a half-transfer pulse.
pub const DEFAULT_GATE_DURATION: f64 = FRAC_PI_4;

/// `exp[it(e^{iφ_R}σ₊a + e^{iφ_B}σ₊a† + h.c.)]` built from alternating
/// sideband micro-pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiGateSpec {
    pub duration: f64,
    pub phi_r: f64,
    pub phi_b: f64,
    pub trotter_steps: usize,
    pub dphi: f64,
}

impl Default for RabiGateSpec {
    fn default() -> Self {
        RabiGateSpec {
            duration: DEFAULT_GATE_DURATION,
            phi_r: 0.0,
            phi_b: 0.0,
            trotter_steps: DEFAULT_TROTTER_STEPS,
            dphi: 0.0,
        }
    }
}

impl RabiGateSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trotter_steps == 0 {
            return Err(Error::InvalidInput("trotter_steps must be ≥ 1".into()));
        }
        if !(self.dphi >= 0.0 && self.duration >= 0.0) {
            return Err(Error::InvalidInput("dphi and duration must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// Dense Rabi Hamiltonian `e^{iφ_R}σ₊a + e^{iφ_B}σ₊a† + h.c.`.
pub fn rabi_hamiltonian(phi_r: f64, phi_b: f64, n_max: usize) -> DMatrix<Complex64> {
    sideband_generator(SidebandKind::Red, -phi_r, n_max) + sideband_generator(SidebandKind::Blue, -phi_b, n_max)
}

pub fn exact_rabi_gate(duration: f64, phi_r: f64, phi_b: f64, n_max: usize) -> DMatrix<Complex64> {
    expm_hermitian_generator(&rabi_hamiltonian(phi_r, phi_b, n_max), duration)
}

fn matrix_power(m: &DMatrix<Complex64>, mut k: usize) -> DMatrix<Complex64> {
    let mut acc = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// Trotterized gate at zero phases: `(B(κ)R(κ))^steps` with `κ = t/steps`.
pub fn trotter_gate(duration: f64, steps: usize, n_max: usize) -> Result<DMatrix<Complex64>> {
    if steps == 0 {
        return Err(Error::InvalidInput("trotter_steps must be ≥ 1".into()));
    }
    let area = 2.0 * duration / steps as f64;
    // generator phase 0 is pulse phase π/2
    let r = BlockUnitary::from_pulse(&PulseSpec::red(area, FRAC_PI_2)?, n_max).to_dense();
    let b = BlockUnitary::from_pulse(&PulseSpec::blue(area, FRAC_PI_2)?, n_max).to_dense();
    Ok(matrix_power(&(b * r), steps))
}

/// Operator-norm distance between the Trotterized and exact gates. Both are
/// phase covariant, so phases do not matter.
pub fn trotter_error(duration: f64, steps: usize, n_max: usize) -> Result<f64> {
    let u = trotter_gate(duration, steps, n_max)?;
    Ok(operator_norm(&(u - exact_rabi_gate(duration, 0.0, 0.0, n_max))))
}

pub fn check_trotter(spec: &RabiGateSpec, n_max: usize, tolerance: f64) -> Result<f64> {
    spec.validate()?;
    let achieved = trotter_error(spec.duration, spec.trotter_steps, n_max)?;
    if achieved > tolerance {
        return Err(Error::TrotterTolerance {
            achieved,
            tolerance,
            steps: spec.trotter_steps,
        });
    }
    Ok(achieved)
}

/// Phase frame `D` with `U(φ_R, φ_B) = D U(0, 0) D†`.
fn gate_frame(phi_r: f64, phi_b: f64, n_max: usize) -> Vec<Complex64> {
    PhaseRotation::new((phi_r + phi_b) / 2.0, (phi_b - phi_r) / 2.0)
        .expect("finite phases")
        .factors(n_max)
}

/// `D U₀ D† ψ`.
fn apply_framed(u0: &DMatrix<Complex64>, frame: &[Complex64], amps: &[Complex64]) -> Vec<Complex64> {
    let v = nalgebra::DVector::from_iterator(amps.len(), amps.iter().zip(frame).map(|(a, f)| a * f.conj()));
    (u0 * v).iter().zip(frame).map(|(a, f)| a * f).collect()
}

fn offset<R: Rng + ?Sized>(rng: &mut R, dphi: f64) -> f64 {
    if dphi > 0.0 {
        rng.random_range(-dphi..dphi)
    } else {
        0.0
    }
}

/// One gate with offsets drawn uniformly from `[−δφ, δφ]`, held fixed across
/// the micro-pulses.
pub fn apply_rabi_gate<R: Rng + ?Sized>(state: &JointState, spec: &RabiGateSpec, rng: &mut R) -> Result<JointState> {
    spec.validate()?;
    let u0 = trotter_gate(spec.duration, spec.trotter_steps, state.n_max())?;
    apply_gate_with(state, &u0, spec.phi_r + offset(rng, spec.dphi), spec.phi_b + offset(rng, spec.dphi))
}

fn apply_gate_with(state: &JointState, u0: &DMatrix<Complex64>, phi_r: f64, phi_b: f64) -> Result<JointState> {
    let frame = gate_frame(phi_r, phi_b, state.n_max());
    let out = JointState::from_amplitudes(state.n_max(), apply_framed(u0, &frame, state.amps()))?;
    out.check_leakage(EPS_LEAK)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstabilityMethod {
    /// Alternating sideband preparation read by the red–blue pulse pair.
    Sideband,
    /// Rabi-gate preparation read by one Rabi gate.
    RabiGate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    #[serde(rename = "N")]
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub n_max: usize,
    /// Verification phases per axis.
    pub grid: usize,
    pub gate_duration: f64,
    pub trotter_steps: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            n: 8,
            samples: 64,
            seed: 0,
            n_max: 96,
            grid: 16,
            gate_duration: DEFAULT_GATE_DURATION,
            trotter_steps: DEFAULT_TROTTER_STEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dphi: f64,
    pub mean_contrast: f64,
    pub mean_visibility: f64,
    pub stderr: f64,
    pub mean_phonon: f64,
}

struct Realization {
    contrast: f64,
    visibility: f64,
    phonon: f64,
}

fn sideband_realization(s: &SweepSettings, dphi: f64, index: u64) -> Result<Realization> {
    let mut rng = sample_rng(s.seed, index);
    let phases: Vec<f64> = (0..s.n).map(|_| offset(&mut rng, dphi)).collect();
    let state = prepare(&build_sequence(&phases, &vec![HALF_TRANSFER_AREA; s.n])?, s.n_max)?;
    let m = scan_fringe(&state, &VerificationSpec::two_pulse(HALF_TRANSFER_AREA, HALF_TRANSFER_AREA, s.grid))?.metrics();
    Ok(Realization {
        contrast: m.contrast,
        visibility: m.visibility,
        phonon: fock_distribution(&state).mean,
    })
}

fn rabi_realization(s: &SweepSettings, u0: &DMatrix<Complex64>, dphi: f64, index: u64) -> Result<Realization> {
    let mut rng = sample_rng(s.seed, index);
    let mut state = JointState::new_ground(s.n_max)?;
    for _ in 0..s.n {
        let (r, b) = (offset(&mut rng, dphi), offset(&mut rng, dphi));
        state = apply_gate_with(&state, u0, r, b)?;
    }
    let grid = uniform_grid(s.grid);
    let mut pg = Vec::with_capacity(s.grid * s.grid);
    for &pr in &grid {
        for &pb in &grid {
            let out = apply_framed(u0, &gate_frame(pr, pb, s.n_max), state.amps());
            pg.push((0..=s.n_max).map(|n| out[basis_index(Qubit::G, n)].norm_sqr()).sum::<f64>());
        }
    }
    let m = fringe_metrics(&pg, false)?;
    Ok(Realization {
        contrast: m.contrast,
        visibility: m.visibility,
        phonon: fock_distribution(&state).mean,
    })
}

/// Mean maximum contrast against the phase-instability scale.
pub fn instability_sweep(method: InstabilityMethod, settings: &SweepSettings, dphi_grid: &[f64], exec: Execution) -> Result<Vec<SweepRow>> {
    if settings.samples == 0 || settings.grid == 0 {
        return Err(Error::InvalidInput("samples and grid must be ≥ 1".into()));
    }
    let u0 = match method {
        InstabilityMethod::RabiGate => Some(trotter_gate(settings.gate_duration, settings.trotter_steps, settings.n_max)?),
        InstabilityMethod::Sideband => None,
    };
    dphi_grid
        .iter()
        .map(|&dphi| {
            if dphi < 0.0 {
                return Err(Error::InvalidInput("dphi must be ≥ 0".into()));
            }
            // without instability every realization is identical
            let count = if dphi > 0.0 { settings.samples } else { 1 };
            let runs = map_indices(exec, count, |i| match &u0 {
                None => sideband_realization(settings, dphi, i as u64),
                Some(u) => rabi_realization(settings, u, dphi, i as u64),
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let c: Vec<f64> = runs.iter().map(|r| r.contrast).collect();
            let (mean_contrast, stderr) = mean_stderr(&c);
            Ok(SweepRow {
                dphi,
                mean_contrast,
                mean_visibility: runs.iter().map(|r| r.visibility).sum::<f64>() / runs.len() as f64,
                stderr,
                mean_phonon: runs.iter().map(|r| r.phonon).sum::<f64>() / runs.len() as f64,
            })
        })
        .collect()
}

/// `√w|e⟩|α⟩ + e^{iφ}√(1−w)|g⟩|−β⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatSpec {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub weight: f64,
    pub rel_phase: f64,
}

impl CatSpec {
    pub fn new(alpha: Complex64, beta: Complex64, weight: f64, rel_phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidInput(format!("weight must lie in [0, 1], got {weight}")));
        }
        Ok(CatSpec {
            alpha,
            beta,
            weight,
            rel_phase,
        })
    }

    pub fn balanced(alpha: Complex64) -> Self {
        CatSpec {
            alpha,
            beta: alpha,
            weight: 0.5,
            rel_phase: 0.0,
        }
    }

    /// The same branches read with equal measurement weights.
    pub fn balanced_measurement(&self) -> Self {
        CatSpec { weight: 0.5, ..*self }
    }

    /// Measurement with swapped weights `w′ = 1 − w`.
    pub fn swapped_measurement(&self) -> Self {
        CatSpec {
            weight: 1.0 - self.weight,
            ..*self
        }
    }
}

/// `F(φ) = a + b cos(φ + φ₀)` for a measurement projector scanned in its
/// relative phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatMetrics {
    pub a: f64,
    pub b: f64,
    pub contrast: f64,
    pub visibility: f64,
}

/// `⟨α|β⟩ = exp(−(|α|² + |β|²)/2 + α*β)`.
pub fn coherent_overlap(alpha: Complex64, beta: Complex64) -> Complex64 {
    (-(alpha.norm_sqr() + beta.norm_sqr()) / 2.0 + alpha.conj() * beta).exp()
}

fn metrics_from_overlaps(state: &CatSpec, meas: &CatSpec, o_e: Complex64, o_g: Complex64) -> Result<CatMetrics> {
    let (w, wp) = (state.weight, meas.weight);
    let a = w * wp * o_e.norm_sqr() + (1.0 - w) * (1.0 - wp) * o_g.norm_sqr();
    let b = 2.0 * (w * wp * (1.0 - w) * (1.0 - wp)).sqrt() * o_e.norm() * o_g.norm();
    if a <= 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok(CatMetrics {
        a,
        b,
        contrast: 2.0 * b,
        visibility: b / a,
    })
}

pub fn cat_metrics(state: &CatSpec, measurement: &CatSpec) -> Result<CatMetrics> {
    metrics_from_overlaps(
        state,
        measurement,
        coherent_overlap(measurement.alpha, state.alpha),
        coherent_overlap(-measurement.beta, -state.beta),
    )
}

/// Truncation needed to represent `|α⟩` faithfully.
pub fn coherent_cutoff(alpha: Complex64) -> usize {
    let r = alpha.norm();
    (r * r + 6.0 * r + 10.0).ceil() as usize
}

pub fn coherent_state_fock(alpha: Complex64, cutoff: usize) -> Vec<Complex64> {
    let mut v = Vec::with_capacity(cutoff + 1);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v.push(c);
    for n in 1..=cutoff {
        c = c * alpha / (n as f64).sqrt();
        v.push(c);
    }
    v
}

fn fock_overlap(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// [`cat_metrics`] with overlaps taken in a truncated Fock basis.
pub fn cat_metrics_fock(state: &CatSpec, measurement: &CatSpec) -> Result<CatMetrics> {
    let cutoff = [state.alpha, state.beta, measurement.alpha, measurement.beta]
        .into_iter()
        .map(coherent_cutoff)
        .max()
        .unwrap_or(10);
    let f = |z: Complex64| coherent_state_fock(z, cutoff);
    metrics_from_overlaps(
        state,
        measurement,
        fock_overlap(&f(measurement.alpha), &f(state.alpha)),
        fock_overlap(&f(-measurement.beta), &f(-state.beta)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionOptions {
    pub samples: usize,
    pub seed: u64,
    pub n_max: usize,
    /// Points in the scanned first detection phase.
    pub grid: usize,
    /// Fringe evaluations allowed per realization.
    pub budget: usize,
    pub rounds: usize,
    /// Upper bound of each detection area.
    pub max_area: f64,
}

impl Default for DetectionOptions {
    fn default() -> Self {
        DetectionOptions {
            samples: 64,
            seed: 0,
            n_max: 32,
            grid: 16,
            budget: 2000,
            rounds: 3,
            max_area: PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRealization {
    pub areas: Vec<f64>,
    pub baseline_visibility: f64,
    pub visibility: f64,
    pub contrast: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub mean_visibility: f64,
    pub mean_contrast: f64,
    pub visibility_stderr: f64,
    pub contrast_stderr: f64,
    pub baseline_visibility: f64,
    pub realizations: Vec<DetectionRealization>,
}

/// Detection fringe for one realization: kinds are the preparation kinds in
/// reverse order; the first detection phase is scanned.
struct DetectionProblem {
    prepared: JointState,
    kinds: Vec<SidebandKind>,
    phases: Vec<f64>,
    scan: Vec<f64>,
}

impl DetectionProblem {
    fn new(n: usize, opts: &DetectionOptions, index: u64) -> Result<Self> {
        let mut rng = sample_rng(opts.seed, index);
        let prep: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let phases: Vec<f64> = (0..n).map(|j| if j == 0 { 0.0 } else { rng.random_range(0.0..TAU) }).collect();
        Ok(DetectionProblem {
            prepared: prepare(&build_sequence(&prep, &vec![HALF_TRANSFER_AREA; n])?, opts.n_max)?,
            kinds: (0..n).rev().map(kind_at).collect(),
            phases,
            scan: uniform_grid(opts.grid),
        })
    }

    fn fringe(&self, areas: &[f64]) -> Result<(f64, f64)> {
        let n_max = self.prepared.n_max();
        let mut pg = Vec::with_capacity(self.scan.len());
        for &s in &self.scan {
            let mut amps = self.prepared.amps().to_vec();
            for (j, (&kind, &area)) in self.kinds.iter().zip(areas).enumerate() {
                let phase = if j == 0 { s } else { self.phases[j] };
                apply_pulse_in_place(&mut amps, &PulseSpec::new(kind, area, phase)?, n_max);
            }
            pg.push((0..=n_max).map(|n| amps[basis_index(Qubit::G, n)].norm_sqr()).sum::<f64>());
        }
        let m = fringe_metrics(&pg, false)?;
        Ok((m.visibility, m.contrast))
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Coordinate-wise golden-section ascent of the visibility, starting from
/// half-transfer areas. A coordinate only moves when it improves the best
/// value, so the result never falls below the starting point.
fn optimize_realization(p: &DetectionProblem, opts: &DetectionOptions) -> Result<DetectionRealization> {
    let n = p.kinds.len();
    let mut areas = vec![HALF_TRANSFER_AREA; n];
    let (v0, c0) = p.fringe(&areas)?;
    let (mut best_v, mut best_c) = (v0, c0);
    let mut evals = 1usize;
    let per_line = 24usize;
    'outer: for _ in 0..opts.rounds {
        for k in 0..n {
            if evals + per_line > opts.budget {
                break 'outer;
            }
            let mut eval = |x: f64| -> Result<(f64, f64)> {
                let mut t = areas.clone();
                t[k] = x;
                evals += 1;
                p.fringe(&t)
            };
            let (mut lo, mut hi) = (0.0, opts.max_area);
            let mut x1 = hi - GOLDEN * (hi - lo);
            let mut x2 = lo + GOLDEN * (hi - lo);
            let mut f1 = eval(x1)?;
            let mut f2 = eval(x2)?;
            for _ in 0..per_line - 2 {
                if f1.0 > f2.0 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - GOLDEN * (hi - lo);
                    f1 = eval(x1)?;
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + GOLDEN * (hi - lo);
                    f2 = eval(x2)?;
                }
            }
            let (x, f) = if f1.0 > f2.0 { (x1, f1) } else { (x2, f2) };
            if f.0 > best_v {
                areas[k] = x;
                best_v = f.0;
                best_c = f.1;
            }
        }
    }
    Ok(DetectionRealization {
        areas,
        baseline_visibility: v0,
        visibility: best_v,
        contrast: best_c,
        evaluations: evals,
    })
}

/// Phase-averaged visibility and contrast after optimizing the detection
/// areas of each random-phase realization.
pub fn optimize_detection_areas(n: usize, opts: &DetectionOptions, exec: Execution) -> Result<DetectionReport> {
    if n == 0 || opts.samples == 0 || opts.grid < 3 {
        return Err(Error::InvalidInput("need N ≥ 1, samples ≥ 1 and grid ≥ 3".into()));
    }
    if opts.budget == 0 {
        return Err(Error::InvalidInput("optimizer budget must be ≥ 1".into()));
    }
    let realizations = map_indices(exec, opts.samples, |i| {
        let p = DetectionProblem::new(n, opts, i as u64)?;
        optimize_realization(&p, opts)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let v: Vec<f64> = realizations.iter().map(|r| r.visibility).collect();
    let c: Vec<f64> = realizations.iter().map(|r| r.contrast).collect();
    let (mean_visibility, visibility_stderr) = mean_stderr(&v);
    let (mean_contrast, contrast_stderr) = mean_stderr(&c);
    Ok(DetectionReport {
        n,
        mean_visibility,
        mean_contrast,
        visibility_stderr,
        contrast_stderr,
        baseline_visibility: realizations.iter().map(|r| r.baseline_visibility).sum::<f64>() / realizations.len() as f64,
        realizations,
    })
}
