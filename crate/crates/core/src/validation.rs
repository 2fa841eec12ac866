//! Self-checks of operator identities, POVM equivalence and closed-form
//! oracles.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec::sample_rng;
use crate::fockspace::{random_parity_locked, random_parity_locked_density, JointState};
use crate::interferometry::{
    analytic_spectrum, fit_phase_offsets, fourier_spectrum, measure_pg, measure_pg_state, measure_with, povm_ground, scan_fringe,
    PovmFamily, PulseOrder, VerificationSpec, Verifier, READABLE,
};
use crate::linalg::max_abs;
use crate::noise::{apply_model, DecoherenceModel};
use crate::preparation::{build_sequence, prepare};
use crate::scenarios::{exact_rabi_gate, trotter_gate};
use crate::sideband::{
    apply_phase_rotation, verify_commutation_identity_with_sign, wrap_pi, CommutationIdentity, PhaseRotation, SidebandKind,
};

pub const IDENTITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct ValidationOptions {
    pub quick: bool,
    pub seed: u64,
    /// Flip the phase-shift sign of one identity; a negative control.
    pub fault: Option<CommutationIdentity>,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: impl Into<String>, error: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            error,
            tolerance,
            passed: error.is_finite() && error < tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// `P_g` for a blue preparation pulse read by a blue pulse.
pub fn closed_form_blue_blue(t1: f64, tb: f64, w: f64, phi_prep: f64, phi_ver: f64) -> f64 {
    0.5 * (1.0 + t1.cos() * tb.cos() - w * t1.sin() * tb.sin() * (phi_prep - phi_ver).cos())
}

/// `P_g` for blue–red preparation read by a red pulse.
pub fn closed_form_blue_red_red(t1: f64, t2: f64, tr: f64, w: f64, phi2: f64, phi_ver: f64) -> f64 {
    let r2 = 2f64.sqrt();
    0.25 * (2.0
        * (t1 / 2.0).sin().powi(2)
        * (w * (r2 * t2).sin() * (r2 * tr).sin() * (phi2 - phi_ver).cos() - (r2 * t2).cos() * (r2 * tr).cos())
        + t1.cos()
        + 3.0)
}

fn identity_checks(opts: &ValidationOptions, out: &mut Vec<CheckResult>) {
    let (n_max, draws) = if opts.quick { (16, 4) } else { (40, 20) };
    for (k, id) in CommutationIdentity::ALL.into_iter().enumerate() {
        let mut rng = sample_rng(opts.seed, 100 + k as u64);
        let sign = if opts.fault == Some(id) { -id.shift_sign() } else { id.shift_sign() };
        let worst = (0..draws)
            .map(|_| {
                let area = rng.random_range(0.1..TAU);
                let angle = rng.random_range(-PI..PI);
                let phi = rng.random_range(0.0..TAU);
                verify_commutation_identity_with_sign(id, area, angle, phi, n_max, sign)
            })
            .fold(0.0, f64::max);
        out.push(CheckResult::new(id.name(), worst, IDENTITY_TOLERANCE));
    }
}

/// Oscillator rotation must shift the red and blue fringe phases in opposite
/// directions.
fn opposite_shift_check(opts: &ValidationOptions, out: &mut Vec<CheckResult>) {
    let mut rng = sample_rng(opts.seed, 200);
    let s = prepare(
        &build_sequence(&(0..4).map(|_| rng.random_range(0.0..TAU)).collect::<Vec<_>>(), &[PI / 2.0; 4]).expect("valid"),
        16,
    )
    .expect("prepared");
    let big_theta = 0.7;
    let rot = PhaseRotation::new(0.0, big_theta).expect("finite");
    let rotated = apply_phase_rotation(&s, &rot);
    let spec = VerificationSpec::two_pulse(PI / 2.0, PI / 2.0, 16);
    let worst = match (
        scan_fringe(&s, &spec).and_then(|f| fourier_spectrum(&f)),
        scan_fringe(&rotated, &spec).and_then(|f| fourier_spectrum(&f)),
    ) {
        (Ok(a), Ok(b)) => {
            let (d1, d2) = fit_phase_offsets(&a, &b);
            let e1 = wrap_pi(d1 - rot.pulse_phase_shift(SidebandKind::Red)).abs();
            let e2 = wrap_pi(d2 - rot.pulse_phase_shift(SidebandKind::Blue)).abs();
            let sign = if d1 * d2 < 0.0 { 0.0 } else { f64::INFINITY };
            e1.max(e2).max(sign)
        }
        _ => f64::INFINITY,
    };
    out.push(CheckResult::new("oscillator rotation shifts red and blue fringes oppositely", worst, 1e-6));
}

fn povm_checks(opts: &ValidationOptions, out: &mut Vec<CheckResult>) {
    let count = if opts.quick { 10 } else { 100 };
    let n_max = 12;
    let mut rng = sample_rng(opts.seed, 300);
    let mut worst: f64 = 0.0;
    let mut spectrum: f64 = 0.0;
    for _ in 0..count {
        let rho = random_parity_locked_density(&mut rng, 3, 8, n_max).expect("density");
        let (t1, t2) = (rng.random_range(0.0..PI), rng.random_range(0.0..PI));
        let (p1, p2) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        let direct = measure_pg(&rho, t1, t2, p1, p2).expect("measurable");
        worst = worst.max((povm_ground(t1, t2, p1, p2, n_max).expectation(&rho) - direct).abs());
        let a = analytic_spectrum(&rho, t1, t2);
        let f = scan_fringe(&rho, &VerificationSpec::two_pulse(t1, t2, 16))
            .and_then(|s| fourier_spectrum(&s))
            .expect("spectrum");
        for h in READABLE {
            spectrum = spectrum.max((a.coefficient(h) - f.coefficient(h)).norm());
        }
    }
    out.push(CheckResult::new("POVM vs direct evolution", worst, 1e-10));
    out.push(CheckResult::new("analytic vs DFT spectrum", spectrum, 1e-10));
    let reduced = povm_ground(1.1, 0.0, 0.4, 2.0, n_max);
    let r = max_abs(&reduced.family(PovmFamily::Second)).max(max_abs(&reduced.family(PovmFamily::Third)));
    out.push(CheckResult::new("single-pulse reduction", r, 1e-14));
}

fn oracle_checks(opts: &ValidationOptions, out: &mut Vec<CheckResult>) {
    let mut rng = sample_rng(opts.seed, 400);
    let grid: Vec<f64> = (0..32).map(|k| TAU * k as f64 / 32.0).collect();
    let mut n1: f64 = 0.0;
    let mut n2: f64 = 0.0;
    let verifier = |tv: f64| Verifier::new(&VerificationSpec::single_pulse(tv, 1).with_order(PulseOrder::BlueRed), 6).expect("verifier");
    for _ in 0..5 {
        let (t1, t2, tv) = (rng.random_range(0.0..PI), rng.random_range(0.0..PI), rng.random_range(0.0..PI));
        let (pa, pb) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        for w in [1.0, 0.9, 0.5] {
            let model = DecoherenceModel::w_mixture(w).expect("w");
            let s1 = prepare(&build_sequence(&[pa], &[t1]).expect("seq"), 6).expect("state");
            let r1 = apply_model(&s1, &model).expect("mixture");
            let s2 = prepare(&build_sequence(&[pa, pb], &[t1, t2]).expect("seq"), 6).expect("state");
            let r2 = apply_model(&s2, &model).expect("mixture");
            for &phi in &grid {
                let sim1 = measure_with(&r1, &verifier(tv), phi, 0.0).expect("pg");
                n1 = n1.max((sim1 - closed_form_blue_blue(t1, tv, w, pa, phi)).abs());
                let sim2 = measure_pg(&r2, tv, 0.0, phi, 0.0).expect("pg");
                n2 = n2.max((sim2 - closed_form_blue_red_red(t1, t2, tv, w, pb, phi)).abs());
            }
        }
    }
    out.push(CheckResult::new("N=1 blue|blue closed form", n1, 1e-10));
    out.push(CheckResult::new("N=2 blue-red|red closed form", n2, 1e-10));
}

fn parity_check(opts: &ValidationOptions, out: &mut Vec<CheckResult>) {
    let count = if opts.quick { 100 } else { 1000 };
    let mut rng = sample_rng(opts.seed, 500);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let n = rng.random_range(1..=12);
        let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let areas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..PI)).collect();
        let s = prepare(&build_sequence(&phases, &areas).expect("seq"), 24).expect("state");
        worst = worst.max(s.off_parity_weight());
    }
    // must vanish exactly
    out.push(CheckResult::new("parity lock", worst, f64::MIN_POSITIVE));
}

fn misc_checks(opts: &ValidationOptions, out: &mut Vec<CheckResult>) {
    let n_max = 6;
    let steps = if opts.quick { 1 << 20 } else { 1 << 24 };
    let u = trotter_gate(FRAC_PI_4, steps, n_max).expect("trotter");
    let exact = exact_rabi_gate(FRAC_PI_4, 0.0, 0.0, n_max);
    let g = JointState::new_ground(n_max).expect("ground");
    let v = nalgebra::DVector::from_column_slice(g.amps());
    out.push(CheckResult::new("Rabi gate Trotter limit", (u * &v - exact * &v).norm(), 1e-6));
    let mut rng = sample_rng(opts.seed, 600);
    let s = random_parity_locked(&mut rng, 6, 10).expect("state");
    let direct = measure_pg_state(&s, 0.9, 1.3, 0.2, 2.2).expect("pg");
    let via_density = measure_pg(&s.to_density(), 0.9, 1.3, 0.2, 2.2).expect("pg");
    out.push(CheckResult::new("state vs density measurement", (direct - via_density).abs(), 1e-12));
}

/// Runs the full suite, or a reduced one with `quick`.
pub fn run_validation(opts: &ValidationOptions) -> ValidationReport {
    let mut checks = Vec::new();
    identity_checks(opts, &mut checks);
    opposite_shift_check(opts, &mut checks);
    povm_checks(opts, &mut checks);
    oracle_checks(opts, &mut checks);
    parity_check(opts, &mut checks);
    misc_checks(opts, &mut checks);
    ValidationReport { checks }
}
