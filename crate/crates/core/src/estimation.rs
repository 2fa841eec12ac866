//! Rabi-flop phonon fits, conditional distributions and coherence-factor
//! estimation from single-pulse fringes.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indices, sample_rng, Execution};
use crate::fockspace::{conditional_fock, FockDistribution, JointDensity, JointState, Populations, Qubit};
use crate::interferometry::{measure_with, uniform_grid, FringeSurface, Measured, PulseOrder, VerificationMode, VerificationSpec, Verifier};
use crate::noise::{apply_model, DecoherenceModel};
use crate::preparation::{build_sequence, prepare};
use crate::sideband::{apply_pulse_density, rabi_frequency, PulseSpec, RabiModel, SidebandKind};

pub const DEFAULT_SHOTS: u32 = 100;
pub const DEFAULT_N_FIT_MAX: usize = 12;
pub const DEFAULT_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiFlopRecord {
    /// Milliseconds.
    pub times: Vec<f64>,
    pub pg: Vec<f64>,
    pub shots_per_point: u32,
}

impl RabiFlopRecord {
    pub fn new(times: Vec<f64>, pg: Vec<f64>, shots_per_point: u32) -> Result<Self> {
        let r = RabiFlopRecord {
            times,
            pg,
            shots_per_point,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.pg.len() {
            return Err(Error::DimensionMismatch {
                expected: self.times.len(),
                found: self.pg.len(),
            });
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("times must be strictly increasing".into()));
        }
        if self.pg.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidInput("populations must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Blue-sideband flop model `P_g(t) = ½[1 + Σ_n P_n cos(Ω_n t) e^{−γ_n t}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlopModel {
    /// Angular frequency in rad/ms: `ηΩ₀` under Lamb-Dicke, `Ω₀` otherwise.
    pub omega0: f64,
    /// 1/ms.
    pub gamma0: f64,
    pub gamma_exponent: f64,
    pub rabi_model: RabiModel,
}

pub const LAMB_DICKE_ETA: f64 = 0.0629;

impl Default for FlopModel {
    fn default() -> Self {
        FlopModel {
            omega0: TAU * 21.7,
            gamma0: 0.1,
            gamma_exponent: 0.7,
            rabi_model: RabiModel::BeyondLambDicke { eta: LAMB_DICKE_ETA },
        }
    }
}

impl FlopModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.gamma0 >= 0.0) {
            return Err(Error::InvalidInput("omega0 must be > 0 and gamma0 ≥ 0".into()));
        }
        Ok(())
    }

    /// `Ω_{n,n+1}` in rad/ms.
    pub fn frequency(&self, n: usize) -> f64 {
        self.omega0 * rabi_frequency(n, 1, self.rabi_model).expect("blue transition exists")
    }

    pub fn frequencies(&self, n_count: usize) -> Vec<f64> {
        match self.rabi_model {
            RabiModel::LambDicke => (0..n_count).map(|n| self.frequency(n)).collect(),
            RabiModel::BeyondLambDicke { eta } => {
                let size = (3 * (n_count + 2)).max(n_count + 40);
                let d = crate::sideband::displacement_magnitudes(eta, size);
                (0..n_count).map(|n| self.omega0 * d[(n + 1, n)]).collect()
            }
        }
    }

    /// `γ_n = γ₀(n+1)^p`.
    pub fn decay(&self, n: usize) -> f64 {
        self.gamma0 * ((n + 1) as f64).powf(self.gamma_exponent)
    }

    /// Column `n` of the model: `½ cos(Ω_n t) e^{−γ_n t}`.
    pub fn design(&self, times: &[f64], n_count: usize) -> DMatrix<f64> {
        let f = self.frequencies(n_count);
        DMatrix::from_fn(times.len(), n_count, |i, n| {
            let t = times[i];
            0.5 * (f[n] * t).cos() * (-self.decay(n) * t).exp()
        })
    }

    pub fn curve(&self, probs: &[f64], times: &[f64]) -> Vec<f64> {
        let x = self.design(times, probs.len());
        let p = DVector::from_column_slice(probs);
        (x * p).iter().map(|v| 0.5 + v).collect()
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Default sampling: 200 points over 3 ms.
pub fn default_times() -> Vec<f64> {
    linspace(0.0, 3.0, 200)
}

fn binomial_fraction<R: Rng + ?Sized>(rng: &mut R, shots: u32, p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let k = Binomial::new(shots as u64, p).expect("valid binomial").sample(rng);
    k as f64 / shots as f64
}

/// Model curve plus binomial shot noise.
pub fn simulate_rabi_flop(dist: &FockDistribution, model: &FlopModel, times: &[f64], shots: u32, seed: u64) -> Result<RabiFlopRecord> {
    model.validate()?;
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be ≥ 1".into()));
    }
    let curve = model.curve(&dist.probs, times);
    let mut rng = sample_rng(seed, 0);
    let pg = curve.iter().map(|&p| binomial_fraction(&mut rng, shots, p)).collect();
    RabiFlopRecord::new(times.to_vec(), pg, shots)
}

/// Lawson–Hanson active-set solver for `min ‖Ax − b‖` subject to `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 10.0 * f64::EPSILON * a.norm() * m.max(n) as f64;
    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(m, cols.len(), |i, k| a[(i, cols[k])]);
        let z = sub.svd(true, true).solve(b, 1e-14).expect("svd solve");
        let mut full = DVector::zeros(n);
        for (k, &j) in cols.iter().enumerate() {
            full[j] = z[k];
        }
        full
    };
    for _ in 0..3 * n {
        let w = a.tr_mul(&(b - a * &x));
        let pick = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = pick else { break };
        passive[j] = true;
        for _ in 0..3 * n {
            let z = solve_passive(&passive);
            if (0..n).filter(|&k| passive[k]).all(|k| z[k] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for k in 0..n {
                if passive[k] && z[k] <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[k]));
                }
            }
            x += (z - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k] <= tol {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub n_fit_max: usize,
    pub resamples: usize,
    pub seed: u64,
    /// Minimum ratio of smallest to largest singular value of the design.
    pub min_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            n_fit_max: DEFAULT_N_FIT_MAX,
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
            min_condition: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitFlag {
    /// Fitted populations sum well below one: the record barely oscillates.
    LowModulation,
    /// Fitted populations sum above one beyond statistical slack.
    ExcessPopulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhononFit {
    pub probs: Vec<f64>,
    pub uncertainties: Vec<f64>,
    /// RMS deviation between record and fitted curve.
    pub residual: f64,
    pub flags: Vec<FitFlag>,
}

fn fit_once(x: &DMatrix<f64>, pg: &[f64]) -> DVector<f64> {
    let y = DVector::from_iterator(pg.len(), pg.iter().map(|p| p - 0.5));
    nnls(x, &y)
}

pub fn fit_phonon_distribution(record: &RabiFlopRecord, model: &FlopModel, opts: &FitOptions) -> Result<PhononFit> {
    record.validate()?;
    model.validate()?;
    let k = opts.n_fit_max + 1;
    if record.len() < opts.n_fit_max + 2 {
        return Err(Error::InvalidInput(format!(
            "record has {} points, need at least {}",
            record.len(),
            opts.n_fit_max + 2
        )));
    }
    let x = model.design(&record.times, k);
    let sv = x.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if ratio < opts.min_condition {
        return Err(Error::UnresolvedFrequencies(ratio));
    }
    let p = fit_once(&x, &record.pg);
    let fitted: Vec<f64> = (&x * &p).iter().map(|v| (0.5 + v).clamp(0.0, 1.0)).collect();
    let residual = (record
        .pg
        .iter()
        .zip(&fitted)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / record.len() as f64)
        .sqrt();
    let shots = record.shots_per_point.max(1);
    let replicas = map_indices(Execution::Sequential, opts.resamples, |r| {
        let mut rng = sample_rng(opts.seed, r as u64);
        let pg: Vec<f64> = fitted.iter().map(|&q| binomial_fraction(&mut rng, shots, q)).collect();
        fit_once(&x, &pg)
    });
    let uncertainties = (0..k)
        .map(|n| {
            if replicas.len() < 2 {
                return 0.0;
            }
            let m = replicas.iter().map(|v| v[n]).sum::<f64>() / replicas.len() as f64;
            (replicas.iter().map(|v| (v[n] - m).powi(2)).sum::<f64>() / (replicas.len() - 1) as f64).sqrt()
        })
        .collect();
    let total: f64 = p.iter().sum();
    let mut flags = Vec::new();
    if total < 0.5 {
        flags.push(FitFlag::LowModulation);
    }
    if total > 1.0 + 3.0 / (shots as f64).sqrt() {
        flags.push(FitFlag::ExcessPopulation);
    }
    Ok(PhononFit {
        probs: p.iter().copied().collect(),
        uncertainties,
        residual,
        flags,
    })
}

/// Phonon distribution after post-selecting the qubit outcome, optionally
/// preceded by an ideal carrier π flip.
pub fn conditional_distribution(rho: &JointDensity, outcome: Qubit, carrier_flip: bool) -> Result<FockDistribution> {
    if carrier_flip {
        let flipped = apply_pulse_density(rho, &PulseSpec::new(SidebandKind::Carrier, PI, 0.0)?)?;
        conditional_fock(&flipped, outcome)
    } else {
        conditional_fock(rho, outcome)
    }
}

/// Sampled single-period fringe `P_g(φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fringe1D {
    pub phases: Vec<f64>,
    pub pg: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u32>,
}

impl TryFrom<&FringeSurface> for Fringe1D {
    type Error = Error;
    fn try_from(s: &FringeSurface) -> Result<Self> {
        if s.mode != VerificationMode::SinglePulse {
            return Err(Error::InvalidInput("expected a single-pulse fringe".into()));
        }
        Ok(Fringe1D {
            phases: s.grid1.clone(),
            pg: s.pg.iter().map(|r| r[0]).collect(),
            shots: None,
        })
    }
}

impl Fringe1D {
    /// DC level and first-harmonic amplitude of a uniformly sampled period.
    /// With a known shot count the binomial noise power is subtracted from
    /// `|c₁|²` before taking the root.
    pub fn harmonics(&self) -> Result<(f64, f64)> {
        let n = self.phases.len();
        if n < 3 || self.pg.len() != n {
            return Err(Error::InvalidInput("fringe needs ≥ 3 samples over one period".into()));
        }
        let step = TAU / n as f64;
        let uniform = self
            .phases
            .iter()
            .enumerate()
            .all(|(i, p)| (p - self.phases[0] - step * i as f64).abs() < 1e-9);
        if !uniform {
            return Err(Error::InvalidInput("fringe must sample one full period uniformly".into()));
        }
        let dc = self.pg.iter().sum::<f64>() / n as f64;
        let c: Complex64 = self
            .phases
            .iter()
            .zip(&self.pg)
            .map(|(p, v)| *v * Complex64::from_polar(1.0, -p))
            .sum::<Complex64>()
            / n as f64;
        let noise = match self.shots {
            Some(s) if s > 1 => self.pg.iter().map(|p| p * (1.0 - p)).sum::<f64>() / ((s - 1) as f64 * (n * n) as f64),
            _ => 0.0,
        };
        Ok((dc, 2.0 * (c.norm_sqr() - noise).max(0.0).sqrt()))
    }
}

/// Single verification pulse used for a coherence-factor estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleVerification {
    pub kind: SidebandKind,
    pub area: f64,
}

impl SingleVerification {
    fn spec(&self, grid: usize) -> VerificationSpec {
        let order = match self.kind {
            SidebandKind::Blue => PulseOrder::BlueRed,
            _ => PulseOrder::RedBlue,
        };
        VerificationSpec::single_pulse(self.area, grid).with_order(order)
    }

    fn verifier(&self, area: f64, n_max: usize) -> Result<Verifier> {
        Verifier::new(&SingleVerification { area, ..*self }.spec(1), n_max)
    }
}

/// What is known about the prepared state independently of the fringe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WReference {
    /// Fitted phonon populations; qubit levels follow the parity lock.
    Populations(FockDistribution),
    /// The ideal pure state.
    State(JointState),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WEstimateOptions {
    /// Area search range as a fraction of the nominal area.
    pub area_range: (f64, f64),
    /// Relative 1σ width of the calibration prior on the verification area.
    pub area_prior: f64,
    /// Accepted DC mismatch at the best area; `None` derives it from shots.
    pub dc_tolerance: Option<f64>,
}

impl Default for WEstimateOptions {
    fn default() -> Self {
        WEstimateOptions {
            area_range: (0.7, 1.3),
            area_prior: 0.05,
            dc_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WEstimate {
    pub w_hat: f64,
    pub w_raw: f64,
    pub clipped: bool,
    /// Estimated verification areas.
    pub areas: Vec<f64>,
    pub measured_amplitude: f64,
    pub ideal_amplitude: f64,
    pub dc_measured: f64,
    pub dc_model: f64,
    /// More than one coupled pair contributes; the population-only ideal
    /// amplitude is then an upper bound.
    pub multi_pathway: bool,
}

/// Parity-locked populations `P(s, n)` from a phonon distribution.
struct LockedPopulations<'a>(&'a FockDistribution);

impl Populations for LockedPopulations<'_> {
    fn n_max(&self) -> usize {
        self.0.probs.len() - 1
    }
    fn population(&self, q: Qubit, n: usize) -> f64 {
        let locked = if n.is_multiple_of(2) { Qubit::G } else { Qubit::E };
        if q == locked {
            self.0.probs[n]
        } else {
            0.0
        }
    }
}

fn ref_cutoff(reference: &WReference) -> usize {
    match reference {
        WReference::Populations(d) => (d.probs.len() + 2).max(4),
        WReference::State(s) => s.n_max(),
    }
}

/// Diagonal of the reference in the joint basis.
fn diagonal_reference(reference: &WReference, n_max: usize) -> Result<JointDensity> {
    let d = crate::fockspace::dim(n_max);
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    match reference {
        WReference::Populations(dist) => {
            let p = LockedPopulations(dist);
            for n in 0..dist.probs.len().min(n_max + 1) {
                for q in [Qubit::G, Qubit::E] {
                    let i = crate::fockspace::basis_index(q, n);
                    m[(i, i)] = Complex64::new(p.population(q, n), 0.0);
                }
            }
        }
        WReference::State(s) => {
            for (i, a) in s.amps().iter().enumerate() {
                m[(i, i)] = Complex64::new(a.norm_sqr(), 0.0);
            }
        }
    }
    JointDensity::from_matrix(n_max, m)
}

/// Ideal modulation amplitude and whether several pathways contribute.
fn ideal_amplitude(reference: &WReference, v: &SingleVerification, area: f64, n_max: usize) -> Result<(f64, bool)> {
    match reference {
        WReference::State(s) => {
            let f = single_fringe(s, v, area, 16)?;
            Ok((f.harmonics()?.1, false))
        }
        WReference::Populations(dist) => {
            let p = LockedPopulations(dist);
            let top = dist.probs.len() - 1;
            let mut amp = 0.0;
            let mut pathways = 0;
            for m in 0..=top {
                let (g, e, larger) = match v.kind {
                    SidebandKind::Blue => (m, m + 1, m + 1),
                    SidebandKind::Red if m >= 1 => (m, m - 1, m),
                    _ => continue,
                };
                if e > top {
                    continue;
                }
                let pg = p.population(Qubit::G, g);
                let pe = p.population(Qubit::E, e);
                if pg > 1e-12 && pe > 1e-12 {
                    pathways += 1;
                    amp += (pg * pe).sqrt() * (area * (larger as f64).sqrt()).sin().abs();
                }
            }
            let _ = n_max;
            Ok((amp, pathways > 1))
        }
    }
}

fn single_fringe<T: Measured>(x: &T, v: &SingleVerification, area: f64, grid: usize) -> Result<Fringe1D> {
    let ver = v.verifier(area, x.n_max())?;
    let phases = uniform_grid(grid);
    let pg = phases
        .iter()
        .map(|&p| measure_with(x, &ver, p, 0.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(Fringe1D { phases, pg, shots: None })
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Estimates the verification area from the fringe DC level, then `w` as the
/// ratio of measured to ideal modulation amplitude.
pub fn estimate_w(fringe: &Fringe1D, reference: &WReference, verification: &SingleVerification, opts: &WEstimateOptions) -> Result<WEstimate> {
    let (dc_meas, amp_meas) = fringe.harmonics()?;
    let n_max = ref_cutoff(reference);
    let diag = diagonal_reference(reference, n_max)?;
    let dc_at = |area: f64| -> f64 {
        let v = verification.verifier(area, n_max).expect("valid verification");
        measure_with(&diag, &v, 0.0, 0.0).expect("matching cutoff")
    };
    let nominal = verification.area;
    let (lo, hi) = (nominal * opts.area_range.0, nominal * opts.area_range.1);
    // the DC level alone can be nearly flat in the area, so a calibration
    // prior keeps the fit near the nominal value when the data cannot
    let dc_sigma = match fringe.shots {
        Some(s) => (0.25 / (s as f64 * fringe.pg.len() as f64)).sqrt(),
        None => 1e-6,
    };
    let objective = |a: f64| {
        ((dc_at(a) - dc_meas) / dc_sigma).powi(2) + ((a - nominal) / (opts.area_prior * nominal)).powi(2)
    };
    let steps = 240;
    let mut best = (nominal, objective(nominal));
    for i in 0..=steps {
        let a = lo + (hi - lo) * i as f64 / steps as f64;
        let v = objective(a);
        if v < best.1 {
            best = (a, v);
        }
    }
    let h = (hi - lo) / steps as f64;
    let area = golden_min(objective, (best.0 - h).max(lo), (best.0 + h).min(hi), 60);
    let dc_model = dc_at(area);
    let tol = opts.dc_tolerance.unwrap_or(5.0 * dc_sigma + 1e-9);
    if (dc_model - dc_meas).abs() > tol {
        return Err(Error::InconsistentPopulations(format!(
            "DC level {dc_meas:.6} unreachable: closest model value {dc_model:.6} at area {area:.4}"
        )));
    }
    let (ideal, multi_pathway) = ideal_amplitude(reference, verification, area, n_max)?;
    if ideal <= 1e-12 {
        return Err(Error::InconsistentPopulations("reference has no readable coherence".into()));
    }
    let w_raw = amp_meas / ideal;
    let w_hat = w_raw.clamp(0.0, 1.0);
    Ok(WEstimate {
        w_hat,
        w_raw,
        clipped: w_hat != w_raw,
        areas: vec![area],
        measured_amplitude: amp_meas,
        ideal_amplitude: ideal,
        dc_measured: dc_meas,
        dc_model,
        multi_pathway,
    })
}

/// Single-pulse fringe of a state after a decoherence model, with optional
/// binomial shot noise.
pub fn synthesize_fringe(
    state: &JointState,
    noise: Option<&DecoherenceModel>,
    verification: &SingleVerification,
    grid: usize,
    shots: Option<u32>,
    seed: u64,
) -> Result<Fringe1D> {
    let mut f = match noise {
        None => single_fringe(state, verification, verification.area, grid)?,
        Some(m) => single_fringe(&apply_model(state, m)?, verification, verification.area, grid)?,
    };
    if let Some(s) = shots {
        let mut rng = sample_rng(seed, 0);
        for p in &mut f.pg {
            *p = binomial_fraction(&mut rng, s, *p);
        }
        f.shots = Some(s);
    }
    Ok(f)
}

/// A synthetic dataset for [`fit_w_ledger`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WScenario {
    #[serde(rename = "N")]
    pub n: usize,
    pub w: f64,
    pub prep_areas: Vec<f64>,
    pub phases: Vec<f64>,
    pub verification: SingleVerification,
    /// Area actually applied when synthesizing; defaults to the nominal one.
    #[serde(default)]
    pub true_verification_area: Option<f64>,
    #[serde(default)]
    pub shots: Option<u32>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ledger_cutoff")]
    pub n_max: usize,
}

fn default_grid() -> usize {
    32
}

fn default_ledger_cutoff() -> usize {
    16
}

impl WScenario {
    /// Half-transfer preparation of length `n` read by the given single pulse.
    pub fn standard(n: usize, w: f64, kind: SidebandKind, seed: u64) -> Self {
        WScenario {
            n,
            w,
            prep_areas: vec![crate::sideband::HALF_TRANSFER_AREA; n],
            phases: crate::preparation::sample_phase_vector(n, seed, 0),
            verification: SingleVerification {
                kind,
                area: crate::sideband::HALF_TRANSFER_AREA,
            },
            true_verification_area: None,
            shots: None,
            grid: 32,
            seed,
            n_max: 16,
        }
    }

    pub fn state(&self) -> Result<JointState> {
        prepare(&build_sequence(&self.phases, &self.prep_areas)?, self.n_max)
    }

    pub fn fringe(&self) -> Result<Fringe1D> {
        let truth = SingleVerification {
            area: self.true_verification_area.unwrap_or(self.verification.area),
            ..self.verification
        };
        synthesize_fringe(
            &self.state()?,
            Some(&DecoherenceModel::w_mixture(self.w)?),
            &truth,
            self.grid,
            self.shots,
            self.seed,
        )
    }

    /// Estimate using the exact phonon populations as the independent input.
    pub fn estimate(&self) -> Result<WEstimate> {
        let dist = crate::fockspace::fock_distribution(&self.state()?);
        estimate_w(
            &self.fringe()?,
            &WReference::Populations(dist),
            &self.verification,
            &WEstimateOptions::default(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WLedgerRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub w_true: f64,
    pub w_hat: f64,
    pub one_minus_w: f64,
    pub clipped: bool,
}

/// Runs [`estimate_w`] over a batch of synthetic datasets.
pub fn fit_w_ledger(scenarios: &[WScenario]) -> Result<Vec<WLedgerRow>> {
    scenarios
        .iter()
        .map(|s| {
            let e = s.estimate()?;
            Ok(WLedgerRow {
                n: s.n,
                w_true: s.w,
                w_hat: e.w_hat,
                one_minus_w: 1.0 - e.w_hat,
                clipped: e.clipped,
            })
        })
        .collect()
}
