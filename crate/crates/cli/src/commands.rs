use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qubit_parity::estimation::{
    estimate_w, fit_phonon_distribution, linspace, simulate_rabi_flop, FitOptions, FlopModel, SingleVerification, WEstimate,
    WEstimateOptions, WReference, WScenario, DEFAULT_N_FIT_MAX, DEFAULT_RESAMPLES,
};
use qubit_parity::exec::{map_indices, Execution};
use qubit_parity::fockspace::{conditional_fock, fock_distribution, parity_expectation, JointState, Qubit, DEFAULT_N_MAX};
use qubit_parity::interferometry::{
    averaged_metrics, fourier_spectrum, scan_fringe, FringeSurface, PulseOrder, VerificationSpec, DEFAULT_GRID,
};
use qubit_parity::noise::{apply_model, DecoherenceModel, NoiseKind};
use qubit_parity::preparation::{prepare as prepare_sequence, sample_phase_vector, AreaPolicy, PrepConfig, DEFAULT_SAMPLES};
use qubit_parity::scenarios::{
    cat_metrics, instability_sweep, optimize_detection_areas, CatSpec, DetectionOptions, InstabilityMethod, SweepSettings,
    DEFAULT_GATE_DURATION, DEFAULT_TROTTER_STEPS,
};
use qubit_parity::sideband::{CommutationIdentity, SidebandKind, HALF_TRANSFER_AREA};
use qubit_parity::validation::{run_validation, ValidationOptions};

use crate::config::{resolve, CliError, CliResult, Globals, Header};
use crate::io::{read_fringe, read_rabi_flop, Output};
use crate::{CatFlags, DetectFlags, FitFlags, FringeFlags, PrepareFlags, RabiFlopFlags, SweepFlags, ValidateFlags};

fn default_n_max() -> usize {
    DEFAULT_N_MAX
}

fn half_transfer() -> f64 {
    HALF_TRANSFER_AREA
}

fn one() -> f64 {
    1.0
}

fn prep_config(n: usize, areas: &Option<Vec<f64>>, compensated: bool) -> CliResult<PrepConfig> {
    let policy = match (areas, compensated) {
        (Some(_), true) => return Err(CliError::Usage("--areas and --compensated are exclusive".into())),
        (Some(a), false) => AreaPolicy::Custom(a.clone()),
        (None, true) => AreaPolicy::SqrtCompensated,
        (None, false) => AreaPolicy::HalfTransfer,
    };
    Ok(PrepConfig { n, areas: policy })
}

fn prepared_state(n: usize, phases: &Option<Vec<f64>>, prep: &PrepConfig, seed: u64, n_max: usize) -> CliResult<(Vec<f64>, JointState)> {
    let phases = phases.clone().unwrap_or_else(|| sample_phase_vector(n, seed, 0));
    let state = prepare_sequence(&prep.sequence(&phases)?, n_max)?;
    Ok((phases, state))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrepareConfig {
    #[serde(rename = "N")]
    n: usize,
    #[serde(default)]
    phases: Option<Vec<f64>>,
    #[serde(default)]
    areas: Option<Vec<f64>>,
    #[serde(default)]
    compensated: bool,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_n_max")]
    n_max: usize,
}

#[derive(Serialize)]
struct DistributionRow {
    n: usize,
    p: f64,
    p_g: f64,
    p_e: f64,
}

pub fn prepare(g: &Globals, f: &PrepareFlags) -> CliResult<()> {
    let c: PrepareConfig = resolve(g, f)?;
    let prep = prep_config(c.n, &c.areas, c.compensated)?;
    let (phases, state) = prepared_state(c.n, &c.phases, &prep, c.seed, c.n_max)?;
    let dist = fock_distribution(&state);
    let rows: Vec<DistributionRow> = (0..=c.n_max)
        .map(|n| DistributionRow {
            n,
            p: dist.probs[n],
            p_g: state.amp(Qubit::G, n).norm_sqr(),
            p_e: state.amp(Qubit::E, n).norm_sqr(),
        })
        .collect();
    let conditional = |q| parity_expectation(&state, Some(q)).ok();
    let summary = serde_json::json!({
        "phases": phases,
        "areas": prep.areas.areas(c.n)?,
        "mean_phonon": dist.mean,
        "std_phonon": dist.std,
        "parity": parity_expectation(&state, None)?,
        "parity_given_g": conditional(Qubit::G),
        "parity_given_e": conditional(Qubit::E),
        "ground_population": rows.iter().map(|r| r.p_g).sum::<f64>(),
    });
    let mut out = Output::new(&g.out, Header::new("prepare", &c))?;
    out.json("state.json", &state)?;
    out.csv("distribution.csv", &rows)?;
    out.json("summary.json", &summary)?;
    out.report();
    out!("N={} ⟨n⟩={:.4} Δn={:.4}", c.n, dist.mean, dist.std);
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    #[serde(alias = "single-pulse")]
    Single,
    #[serde(alias = "two-pulse")]
    Two,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FringeConfig {
    #[serde(rename = "N")]
    n: usize,
    #[serde(default = "one")]
    w: f64,
    #[serde(default = "default_model")]
    model: NoiseKind,
    #[serde(default = "default_mode")]
    mode: Mode,
    #[serde(default = "half_transfer")]
    t1: f64,
    #[serde(default = "half_transfer")]
    t2: f64,
    #[serde(default)]
    order: PulseOrder,
    #[serde(default = "default_grid")]
    grid: usize,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    phases: Option<Vec<f64>>,
    #[serde(default = "yes")]
    harmonics: bool,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_n_max")]
    n_max: usize,
}

fn default_model() -> NoiseKind {
    NoiseKind::WMixture
}

fn default_mode() -> Mode {
    Mode::Two
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn yes() -> bool {
    true
}

#[derive(Serialize)]
struct FringeRow {
    phi1: f64,
    phi2: f64,
    pg: f64,
}

fn fringe_rows(s: &FringeSurface) -> Vec<FringeRow> {
    let mut rows = Vec::new();
    for (i, &phi1) in s.grid1.iter().enumerate() {
        for (j, &phi2) in s.grid2.iter().enumerate() {
            rows.push(FringeRow { phi1, phi2, pg: s.pg[i][j] });
        }
    }
    rows
}

fn parse_enum<T: for<'de> Deserialize<'de>>(what: &str, s: &str) -> CliResult<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| CliError::Usage(format!("unknown {what} '{s}'")))
}

pub fn fringe(g: &Globals, f: &FringeFlags) -> CliResult<()> {
    let c: FringeConfig = resolve(g, f)?;
    let spec = match c.mode {
        Mode::Single => VerificationSpec::single_pulse(c.t1, c.grid),
        Mode::Two => VerificationSpec::two_pulse(c.t1, c.t2, c.grid),
    }
    .with_order(c.order);
    let model = DecoherenceModel::new(c.model, c.w)?;
    let noisy = model.kind() != NoiseKind::WMixture || model.w() < 1.0;
    let prep = PrepConfig::half_transfer(c.n);
    let want_spectrum = c.harmonics && c.mode == Mode::Two;
    let mut out = Output::new(&g.out, Header::new("fringe", &c))?;
    if c.phases.is_some() {
        let (_, state) = prepared_state(c.n, &c.phases, &prep, c.seed, c.n_max)?;
        let surface = if noisy {
            scan_fringe(&apply_model(&state, &model)?, &spec)?
        } else {
            scan_fringe(&state, &spec)?
        };
        let spectrum = if want_spectrum { Some(fourier_spectrum(&surface)?) } else { None };
        let metrics = serde_json::json!({
            "contrast": surface.contrast,
            "visibility": surface.visibility,
            "sum_axis": surface.sum_axis_fringe.as_ref().map(|a| a.metrics),
            "diff_axis": surface.diff_axis_fringe.as_ref().map(|a| a.metrics),
        });
        out.csv("fringe.csv", &fringe_rows(&surface))?;
        out.json("metrics.json", &metrics)?;
        if let Some(s) = spectrum {
            out.json("spectrum.json", &s)?;
        }
        out!("C={:.4} V={:.4}", surface.contrast, surface.visibility);
    } else {
        let noise = if noisy { Some(&model) } else { None };
        let m = averaged_metrics(&prep, noise, &spec, c.samples, c.seed, c.n_max, Execution::Parallel)?;
        if want_spectrum {
            // mean readable-harmonic magnitudes over the same realizations
            let spectra = map_indices(Execution::Parallel, c.samples, |i| -> qubit_parity::Result<[f64; 4]> {
                let phases = sample_phase_vector(c.n, c.seed, i as u64);
                let state = prepare_sequence(&prep.sequence(&phases)?, c.n_max)?;
                let s = match noise {
                    Some(m) => scan_fringe(&apply_model(&state, m)?, &spec)?,
                    None => scan_fringe(&state, &spec)?,
                };
                Ok(fourier_spectrum(&s)?.magnitudes())
            })
            .into_iter()
            .collect::<qubit_parity::Result<Vec<_>>>()?;
            let mut mean = [0.0; 4];
            for s in &spectra {
                for (m, v) in mean.iter_mut().zip(s) {
                    *m += v / spectra.len() as f64;
                }
            }
            out.json("spectrum.json", &serde_json::json!({ "mean_R": mean, "samples": c.samples }))?;
        }
        out.json("metrics.json", &m)?;
        print!("⟨C⟩={:.4} ⟨V⟩={:.4}", m.grid.contrast, m.grid.visibility);
        if let (Some(s), Some(d)) = (&m.sum_axis, &m.diff_axis) {
            print!(" qubit-oscillator ⟨V⟩={:.4} internal-oscillator ⟨V⟩={:.4}", s.visibility, d.visibility);
        }
        out!();
    }
    out.report();
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateConfig {
    #[serde(default)]
    quick: bool,
    #[serde(default)]
    fault: Option<String>,
    #[serde(default)]
    seed: u64,
}

pub fn validate(g: &Globals, f: &ValidateFlags) -> CliResult<()> {
    let c: ValidateConfig = resolve(g, f)?;
    let fault = match &c.fault {
        Some(s) => Some(parse_enum::<CommutationIdentity>("identity", s)?),
        None => None,
    };
    let report = run_validation(&ValidationOptions {
        quick: c.quick,
        seed: c.seed,
        fault,
    });
    for r in &report.checks {
        out!(
            "{} {:<58} {:.3e} (tolerance {:.1e})",
            if r.passed { "ok  " } else { "FAIL" },
            r.name,
            r.error,
            r.tolerance
        );
    }
    let mut out = Output::new(&g.out, Header::new("validate", &c))?;
    out.json("validation.json", &report)?;
    out.report();
    let failures = report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        let names: Vec<&str> = failures.iter().map(|r| r.name.as_str()).collect();
        Err(CliError::Numerical(format!("failed checks: {}", names.join(", "))))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitConfig {
    #[serde(default)]
    input: Option<String>,
    #[serde(default)]
    fringe: Option<String>,
    #[serde(default)]
    demo: bool,
    #[serde(rename = "N", default = "demo_n")]
    n: usize,
    #[serde(default = "demo_w")]
    w: f64,
    #[serde(default = "demo_shots")]
    shots: u32,
    #[serde(default = "blue")]
    verification: SidebandKind,
    #[serde(default = "half_transfer")]
    verification_area: f64,
    #[serde(default = "fit_max")]
    n_fit_max: usize,
    #[serde(default = "resamples")]
    resamples: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_n_max")]
    n_max: usize,
}

fn demo_n() -> usize {
    1
}

fn demo_w() -> f64 {
    0.9
}

fn demo_shots() -> u32 {
    100
}

fn blue() -> SidebandKind {
    SidebandKind::Blue
}

fn fit_max() -> usize {
    DEFAULT_N_FIT_MAX
}

fn resamples() -> usize {
    DEFAULT_RESAMPLES
}

#[derive(Serialize)]
struct FitReport {
    probs: Vec<f64>,
    sigmas: Vec<f64>,
    residual: f64,
    flags: Vec<qubit_parity::estimation::FitFlag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_true: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_estimate: Option<WEstimate>,
}

pub fn fit(g: &Globals, f: &FitFlags) -> CliResult<()> {
    let c: FitConfig = resolve(g, f)?;
    let model = FlopModel::default();
    let opts = FitOptions {
        n_fit_max: c.n_fit_max,
        resamples: c.resamples,
        seed: c.seed,
        ..Default::default()
    };
    let verification = SingleVerification {
        kind: c.verification,
        area: c.verification_area,
    };
    let (record, fringe, w_true) = match (&c.input, c.demo) {
        (Some(_), true) => return Err(CliError::Usage("--input and --demo are exclusive".into())),
        (None, false) => return Err(CliError::Usage("give --input CSV or --demo".into())),
        (Some(path), false) => {
            let record = read_rabi_flop(Path::new(path))?;
            let fringe = match &c.fringe {
                Some(p) => Some(read_fringe(Path::new(p))?),
                None => None,
            };
            (record, fringe, None)
        }
        (None, true) => {
            let scenario = WScenario {
                shots: Some(c.shots),
                n_max: c.n_max,
                verification,
                ..WScenario::standard(c.n, c.w, c.verification, c.seed)
            };
            let dist = fock_distribution(&scenario.state()?);
            let record = simulate_rabi_flop(&dist, &model, &qubit_parity::estimation::default_times(), c.shots, c.seed)?;
            (record, Some(scenario.fringe()?), Some(c.w))
        }
    };
    let fit = fit_phonon_distribution(&record, &model, &opts)?;
    let w_estimate = match &fringe {
        Some(fr) => {
            let reference = WReference::Populations(qubit_parity::fockspace::FockDistribution::from_probs(fit.probs.clone()));
            Some(estimate_w(fr, &reference, &verification, &WEstimateOptions::default())?)
        }
        None => None,
    };
    let report = FitReport {
        probs: fit.probs.clone(),
        sigmas: fit.uncertainties.clone(),
        residual: fit.residual,
        flags: fit.flags.clone(),
        w_true,
        w_estimate,
    };
    let mut out = Output::new(&g.out, Header::new("fit", &c))?;
    out.json("fit.json", &report)?;
    out.report();
    for (n, (p, s)) in fit.probs.iter().zip(&fit.uncertainties).enumerate() {
        out!("P({n}) = {p:.4} ± {s:.4}");
    }
    if let Some(e) = &report.w_estimate {
        out!("w_hat = {:.4} (raw {:.4})", e.w_hat, e.w_raw);
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RabiFlopConfig {
    #[serde(rename = "N")]
    n: usize,
    #[serde(default)]
    phases: Option<Vec<f64>>,
    #[serde(default = "demo_shots")]
    shots: u32,
    #[serde(default = "t_max")]
    t_max: f64,
    #[serde(default = "points")]
    points: usize,
    #[serde(default = "gamma0")]
    gamma0: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_n_max")]
    n_max: usize,
}

fn t_max() -> f64 {
    3.0
}

fn points() -> usize {
    200
}

fn gamma0() -> f64 {
    FlopModel::default().gamma0
}

#[derive(Serialize)]
struct FlopRow {
    time_ms: f64,
    pg: f64,
    shots: u32,
}

pub fn rabi_flop(g: &Globals, f: &RabiFlopFlags) -> CliResult<()> {
    let c: RabiFlopConfig = resolve(g, f)?;
    let (_, state) = prepared_state(c.n, &c.phases, &PrepConfig::half_transfer(c.n), c.seed, c.n_max)?;
    let model = FlopModel {
        gamma0: c.gamma0,
        ..FlopModel::default()
    };
    model.validate()?;
    let times = linspace(0.0, c.t_max, c.points);
    let rec = simulate_rabi_flop(&fock_distribution(&state), &model, &times, c.shots, c.seed)?;
    let rows: Vec<FlopRow> = rec
        .times
        .iter()
        .zip(&rec.pg)
        .map(|(&time_ms, &pg)| FlopRow { time_ms, pg, shots: c.shots })
        .collect();
    let mut out = Output::new(&g.out, Header::new("rabi-flop", &c))?;
    out.csv("rabi_flop.csv", &rows)?;
    let conditional = [Qubit::G, Qubit::E].map(|q| conditional_fock(&state, q).ok());
    out.json(
        "populations.json",
        &serde_json::json!({
            "joint": fock_distribution(&state),
            "given_g": conditional[0],
            "given_e": conditional[1],
        }),
    )?;
    out.report();
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    #[serde(default = "sideband")]
    method: InstabilityMethod,
    #[serde(rename = "N", default = "sweep_n")]
    n: usize,
    #[serde(default = "dphi_grid")]
    dphi: Vec<f64>,
    #[serde(default = "sweep_samples")]
    samples: usize,
    #[serde(default = "sweep_grid")]
    grid: usize,
    #[serde(default = "gate_duration")]
    gate_duration: f64,
    #[serde(default = "trotter_steps")]
    trotter_steps: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "sweep_n_max")]
    n_max: usize,
}

fn sideband() -> InstabilityMethod {
    InstabilityMethod::Sideband
}

fn sweep_n() -> usize {
    SweepSettings::default().n
}

fn dphi_grid() -> Vec<f64> {
    (0..=8).map(|k| 0.2 * k as f64).collect()
}

fn sweep_samples() -> usize {
    SweepSettings::default().samples
}

fn sweep_grid() -> usize {
    SweepSettings::default().grid
}

fn gate_duration() -> f64 {
    DEFAULT_GATE_DURATION
}

fn trotter_steps() -> usize {
    DEFAULT_TROTTER_STEPS
}

fn sweep_n_max() -> usize {
    SweepSettings::default().n_max
}

pub fn sweep_instability(g: &Globals, f: &SweepFlags) -> CliResult<()> {
    let c: SweepConfig = resolve(g, f)?;
    let settings = SweepSettings {
        n: c.n,
        samples: c.samples,
        seed: c.seed,
        n_max: c.n_max,
        grid: c.grid,
        gate_duration: c.gate_duration,
        trotter_steps: c.trotter_steps,
    };
    let rows = instability_sweep(c.method, &settings, &c.dphi, Execution::Parallel)?;
    for r in &rows {
        out!("δφ={:.3} ⟨C⟩={:.4} ± {:.4}", r.dphi, r.mean_contrast, r.stderr);
    }
    let mut out = Output::new(&g.out, Header::new("sweep-instability", &c))?;
    out.csv("sweep.csv", &rows)?;
    out.report();
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Measurement {
    /// The state's own weights and amplitudes.
    Same,
    /// Equal weights with the state's amplitudes.
    #[serde(alias = "matched")]
    Balanced,
    /// Weight `1 − w`.
    Swapped,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatConfig {
    #[serde(default = "default_alpha")]
    alpha: Vec<f64>,
    #[serde(default)]
    beta: Option<Vec<f64>>,
    #[serde(default = "default_weights")]
    weights: Vec<f64>,
    #[serde(default = "balanced")]
    measurement: Measurement,
    #[serde(default)]
    rel_phase: f64,
}

fn default_alpha() -> Vec<f64> {
    vec![2.0]
}

fn default_weights() -> Vec<f64> {
    (1..10).map(|k| 0.1 * k as f64).collect()
}

fn balanced() -> Measurement {
    Measurement::Balanced
}

fn complex_arg(name: &str, v: &[f64]) -> CliResult<Complex64> {
    match v {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(CliError::Usage(format!("{name} takes re or re,im"))),
    }
}

#[derive(Serialize)]
struct CatRow {
    weight: f64,
    a: f64,
    b: f64,
    contrast: f64,
    visibility: f64,
}

pub fn cat_visibility(g: &Globals, f: &CatFlags) -> CliResult<()> {
    let c: CatConfig = resolve(g, f)?;
    let alpha = complex_arg("alpha", &c.alpha)?;
    let beta = match &c.beta {
        Some(b) => complex_arg("beta", b)?,
        None => alpha,
    };
    let mut rows = Vec::with_capacity(c.weights.len());
    for &w in &c.weights {
        let state = CatSpec::new(alpha, beta, w, c.rel_phase)?;
        let meas = match c.measurement {
            Measurement::Same => state,
            Measurement::Balanced => state.balanced_measurement(),
            Measurement::Swapped => state.swapped_measurement(),
        };
        let m = cat_metrics(&state, &meas)?;
        out!("w={w:.3} C={:.4} V={:.4}", m.contrast, m.visibility);
        rows.push(CatRow {
            weight: w,
            a: m.a,
            b: m.b,
            contrast: m.contrast,
            visibility: m.visibility,
        });
    }
    let mut out = Output::new(&g.out, Header::new("cat-visibility", &c))?;
    out.csv("cat.csv", &rows)?;
    out.report();
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectConfig {
    #[serde(rename = "N", default = "detect_n")]
    n: usize,
    #[serde(default = "detect_samples")]
    samples: usize,
    #[serde(default = "detect_grid")]
    grid: usize,
    #[serde(default = "budget")]
    budget: usize,
    #[serde(default = "rounds")]
    rounds: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "detect_n_max")]
    n_max: usize,
}

fn detect_n() -> usize {
    4
}

fn detect_samples() -> usize {
    DetectionOptions::default().samples
}

fn detect_grid() -> usize {
    DetectionOptions::default().grid
}

fn budget() -> usize {
    DetectionOptions::default().budget
}

fn rounds() -> usize {
    DetectionOptions::default().rounds
}

fn detect_n_max() -> usize {
    DetectionOptions::default().n_max
}

#[derive(Serialize)]
struct DetectRow {
    realization: usize,
    baseline_visibility: f64,
    visibility: f64,
    contrast: f64,
    evaluations: usize,
    areas: String,
}

pub fn optimize_detection(g: &Globals, f: &DetectFlags) -> CliResult<()> {
    let c: DetectConfig = resolve(g, f)?;
    let opts = DetectionOptions {
        samples: c.samples,
        seed: c.seed,
        n_max: c.n_max,
        grid: c.grid,
        budget: c.budget,
        rounds: c.rounds,
        ..Default::default()
    };
    let report = optimize_detection_areas(c.n, &opts, Execution::Parallel)?;
    let rows: Vec<DetectRow> = report
        .realizations
        .iter()
        .enumerate()
        .map(|(i, r)| DetectRow {
            realization: i,
            baseline_visibility: r.baseline_visibility,
            visibility: r.visibility,
            contrast: r.contrast,
            evaluations: r.evaluations,
            areas: r.areas.iter().map(|a| format!("{a:.6}")).collect::<Vec<_>>().join(";"),
        })
        .collect();
    out!(
        "N={} ⟨V⟩={:.4} ± {:.4} ⟨C⟩={:.4} ± {:.4} (half-transfer ⟨V⟩={:.4})",
        report.n, report.mean_visibility, report.visibility_stderr, report.mean_contrast, report.contrast_stderr, report.baseline_visibility
    );
    let mut out = Output::new(&g.out, Header::new("optimize-detection", &c))?;
    out.json("detection.json", &report)?;
    out.csv("detection.csv", &rows)?;
    out.report();
    Ok(())
}
