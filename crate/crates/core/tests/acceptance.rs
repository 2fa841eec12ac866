//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use qubit_parity::estimation::WScenario;
use qubit_parity::exec::{map_indices, sample_rng, Execution};
use qubit_parity::fockspace::{basis_index, parity_expectation, random_parity_locked_density, JointDensity, Qubit};
use qubit_parity::interferometry::{
    analytic_spectrum, averaged_metrics, contrast_regression, fit_phase_offsets, fourier_spectrum, povm_ground, scan_fringe,
    PovmFamily, PulseOrder, VerificationSpec, PREDICTOR_COEFFICIENTS, READABLE,
};
use qubit_parity::linalg::max_abs;
use qubit_parity::noise::{apply_model, DecoherenceModel};
use qubit_parity::preparation::{build_half_transfer_sequence, build_sequence, growth_curve, prepare, AreaPolicy, PrepConfig};
use qubit_parity::scenarios::{
    cat_metrics, instability_sweep, optimize_detection_areas, CatSpec, DetectionOptions, InstabilityMethod, SweepSettings,
};
use qubit_parity::sideband::{
    apply_phase_rotation, apply_pulse_density, verify_commutation_identity, CommutationIdentity, PhaseRotation, PulseSpec,
    SidebandKind,
};

const SEED: u64 = 20_250_101;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn oracle_blue_blue(t1: f64, tb: f64, w: f64, phi_prep: f64, phi_ver: f64) -> f64 {
    0.5 * (1.0 + t1.cos() * tb.cos() - w * t1.sin() * tb.sin() * (phi_prep - phi_ver).cos())
}

fn oracle_blue_red_red(t1: f64, t2: f64, tr: f64, w: f64, phi2: f64, phi_ver: f64) -> f64 {
    let s = 2f64.sqrt();
    let inner = w * (s * t2).sin() * (s * tr).sin() * (phi2 - phi_ver).cos() - (s * t2).cos() * (s * tr).cos();
    0.25 * (2.0 * (t1 / 2.0).sin().powi(2) * inner + t1.cos() + 3.0)
}

fn analytic_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = sample_rng(SEED, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let (t1, t2, tv) = (rng.random_range(0.1..PI), rng.random_range(0.1..PI), rng.random_range(0.1..PI));
        let (pa, pb) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        for w in [1.0, 0.9, 0.6] {
            let model = DecoherenceModel::w_mixture(w).unwrap();
            let r1 = apply_model(&prepare(&build_sequence(&[pa], &[t1]).unwrap(), 8).unwrap(), &model).unwrap();
            let s1 = scan_fringe(&r1, &VerificationSpec::single_pulse(tv, 32).with_order(PulseOrder::BlueRed)).unwrap();
            let r2 = apply_model(&prepare(&build_sequence(&[pa, pb], &[t1, t2]).unwrap(), 8).unwrap(), &model).unwrap();
            let s2 = scan_fringe(&r2, &VerificationSpec::single_pulse(tv, 32)).unwrap();
            for (i, &phi) in s1.grid1.iter().enumerate() {
                worst = worst.max((s1.pg[i][0] - oracle_blue_blue(t1, tv, w, pa, phi)).abs());
                worst = worst.max((s2.pg[i][0] - oracle_blue_red_red(t1, t2, tv, w, pb, phi)).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst < 1e-10 && secs < 1.0, format!("max |ΔP_g| = {worst:.2e}, {secs:.2} s"))
}

fn parity_lock() -> Outcome {
    let start = Instant::now();
    let mut rng = sample_rng(SEED, 2);
    let mut violations = 0usize;
    let mut parity_dev: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=12);
        let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let areas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let s = prepare(&build_sequence(&phases, &areas).unwrap(), 16).unwrap();
        for (i, a) in s.amps().iter().enumerate() {
            let (q, m) = (i % 2, i / 2);
            if q != m % 2 && *a != Complex64::new(0.0, 0.0) {
                violations += 1;
            }
        }
        for (q, expect) in [(Qubit::G, 1.0), (Qubit::E, -1.0)] {
            if let Ok(p) = parity_expectation(&s, Some(q)) {
                parity_dev = parity_dev.max((p - expect).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        violations == 0 && parity_dev == 0.0 && secs < 10.0,
        format!("{violations} nonzero off-parity amplitudes, parity deviation {parity_dev:e}, {secs:.2} s"),
    )
}

fn operator_identities() -> Outcome {
    let mut rng = sample_rng(SEED, 3);
    let mut worst: f64 = 0.0;
    for id in CommutationIdentity::ALL {
        for _ in 0..20 {
            let area = rng.random_range(0.1..TAU);
            let angle = rng.random_range(-PI..PI);
            let phi = rng.random_range(0.0..TAU);
            worst = worst.max(verify_commutation_identity(id, area, angle, phi, 40));
        }
    }
    // an oscillator rotation moves the red and blue fringe phases oppositely
    let mut offset_err: f64 = 0.0;
    let mut opposite = true;
    for k in 0..5 {
        let s = prepare(&build_half_transfer_sequence(4, &[0.3 + k as f64, 1.1, 2.9, 5.0]).unwrap(), 16).unwrap();
        let big = rng.random_range(0.2..1.2);
        let rotated = apply_phase_rotation(&s, &PhaseRotation::new(0.0, big).unwrap());
        let spec = VerificationSpec::two_pulse(FRAC_PI_2, FRAC_PI_2, 16);
        let a = fourier_spectrum(&scan_fringe(&s, &spec).unwrap()).unwrap();
        let b = fourier_spectrum(&scan_fringe(&rotated, &spec).unwrap()).unwrap();
        let (d1, d2) = fit_phase_offsets(&a, &b);
        opposite &= d1 * d2 < 0.0;
        offset_err = offset_err.max((d1 - big).abs()).max((d2 + big).abs());
    }
    outcome(
        worst < 1e-10 && offset_err < 1e-6 && opposite,
        format!("identity deviation {worst:.2e}, red/blue offset error {offset_err:.2e}, opposite signs {opposite}"),
    )
}

fn ground_population(rho: &JointDensity) -> f64 {
    (0..=rho.n_max())
        .map(|n| {
            let i = basis_index(Qubit::G, n);
            rho.matrix()[(i, i)].re
        })
        .sum()
}

fn povm_equivalence() -> Outcome {
    let mut rng = sample_rng(SEED, 4);
    let n_max = 14;
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let rho = random_parity_locked_density(&mut rng, 1 + k % 4, 10, n_max).unwrap();
        let t1 = rng.random_range(0.0..PI);
        let t2 = if k % 10 == 0 { 0.0 } else { rng.random_range(0.0..PI) };
        let (p1, p2) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        let evolved = apply_pulse_density(&rho, &PulseSpec::red(t1, p1).unwrap()).unwrap();
        let evolved = apply_pulse_density(&evolved, &PulseSpec::blue(t2, p2).unwrap()).unwrap();
        let povm = povm_ground(t1, t2, p1, p2, n_max);
        worst = worst.max((povm.expectation(&rho) - ground_population(&evolved)).abs());
    }
    let reduced = povm_ground(1.3, 0.0, 0.7, 2.2, n_max);
    let vanishing = max_abs(&reduced.family(PovmFamily::Second)).max(max_abs(&reduced.family(PovmFamily::Third)));
    outcome(
        worst < 1e-10 && vanishing == 0.0,
        format!("max |tr(Πρ) − direct| = {worst:.2e}, single-pulse higher families {vanishing:e}"),
    )
}

fn phonon_saturation() -> Outcome {
    let start = Instant::now();
    let half = growth_curve(&[8], &AreaPolicy::HalfTransfer, 512, SEED, 32, Execution::Parallel).unwrap();
    let comp = growth_curve(&[4, 8, 12, 16], &AreaPolicy::SqrtCompensated, 128, SEED, 40, Execution::Parallel).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (mean, ratio, ratio_real) = (half[0].mean, half[0].std / half[0].mean, half[0].realization_std / half[0].mean);
    let growing = comp.windows(2).all(|w| w[1].mean > w[0].mean);
    let comp_means: Vec<String> = comp.iter().map(|p| format!("{:.2}", p.mean)).collect();
    outcome(
        within(mean, 3.5, 4.6) && within(ratio, 0.8, 1.2) && growing && secs < 30.0,
        format!(
            "⟨n⟩ = {mean:.3} (want 3.5–4.6), Δn/⟨n⟩ = {ratio:.3} (want 0.8–1.2; per-realization {ratio_real:.3}), compensated ⟨n⟩ at N=4,8,12,16: [{}], {secs:.1} s",
            comp_means.join(", ")
        ),
    )
}

fn visibility_ceilings() -> Outcome {
    let start = Instant::now();
    let m = averaged_metrics(&PrepConfig::half_transfer(8), None, &VerificationSpec::default(), 512, SEED, 32, Execution::Parallel).unwrap();
    let internal = m.diff_axis.unwrap().visibility;
    let qubit_osc = m.sum_axis.unwrap().visibility;
    let single: Vec<f64> = [8, 10, 12]
        .iter()
        .map(|&n| {
            averaged_metrics(&PrepConfig::half_transfer(n), None, &VerificationSpec::single_pulse(FRAC_PI_2, 32), 512, SEED, 32, Execution::Parallel)
                .unwrap()
                .grid
                .contrast
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let pass = within(internal, 0.42, 0.52) && within(qubit_osc, 0.17, 0.27) && single.iter().all(|c| within(*c, 0.15, 0.25)) && secs < 300.0;
    outcome(
        pass,
        format!(
            "internal-oscillator ⟨V⟩ = {internal:.3} (want 0.47±0.05), qubit-oscillator ⟨V⟩ = {qubit_osc:.3} (want 0.22±0.05), single-pulse ⟨C⟩ at N=8,10,12 = {:.3}/{:.3}/{:.3} (want 0.2±0.05), {secs:.1} s",
            single[0], single[1], single[2]
        ),
    )
}

fn fourier_regression() -> Outcome {
    let start = Instant::now();
    let rows = map_indices(Execution::Parallel, 256, |i| {
        let mut rng = sample_rng(SEED + 7, i as u64);
        let n = rng.random_range(1..=12);
        let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let s = prepare(&build_half_transfer_sequence(n, &phases).unwrap(), 24).unwrap();
        let spec = analytic_spectrum(&s.to_density(), FRAC_PI_2, FRAC_PI_2);
        let truth = scan_fringe(&s, &VerificationSpec::two_pulse(FRAC_PI_2, FRAC_PI_2, 48)).unwrap().contrast;
        (spec.magnitudes(), truth)
    });
    let r = contrast_regression(&rows).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let coeff_ok = r.coefficients.iter().zip(PREDICTOR_COEFFICIENTS).all(|(a, b)| (a - b).abs() <= 0.3);
    outcome(
        r.r_squared_refit >= 0.90 && coeff_ok && secs < 120.0,
        format!(
            "R² = {:.3} over {} states, refit coefficients [{:.2}, {:.2}, {:.2}, {:.2}] vs [1.73, 1.07, 1.14, 1.87] ±0.3, fixed-predictor corr² {:.3}, {secs:.1} s",
            r.r_squared_refit, r.samples, r.coefficients[0], r.coefficients[1], r.coefficients[2], r.coefficients[3], r.r_squared_predictor
        ),
    )
}

fn third_order_signature() -> Outcome {
    let spec = VerificationSpec::two_pulse(FRAC_PI_2, FRAC_PI_2, 16).with_order(PulseOrder::BlueRed);
    let r3 = map_indices(Execution::Parallel, 256, |i| {
        let mut rng = sample_rng(SEED + 8, i as u64);
        let phases: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..TAU)).collect();
        let s = prepare(&build_half_transfer_sequence(3, &phases).unwrap(), 16).unwrap();
        fourier_spectrum(&scan_fringe(&s, &spec).unwrap()).unwrap().r3()
    });
    let mean = r3.iter().sum::<f64>() / r3.len() as f64;
    let spread = r3.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    outcome(
        within(mean, 0.085, 0.105),
        format!("(2φ₁−φ₂) amplitude {mean:.4} (want 0.095±0.01), spread over phases {spread:.1e}"),
    )
}

fn w_round_trip() -> Outcome {
    let cases = [
        (1, SidebandKind::Blue),
        (2, SidebandKind::Red),
        (2, SidebandKind::Blue),
        (3, SidebandKind::Red),
    ];
    let mut noiseless: f64 = 0.0;
    for (n, kind) in cases {
        for w in [0.8, 0.9, 1.0] {
            let e = WScenario::standard(n, w, kind, SEED).estimate().unwrap();
            noiseless = noiseless.max((e.w_hat - w).abs());
        }
    }
    let mut bias: f64 = 0.0;
    let mut rms_worst: f64 = 0.0;
    for (n, kind) in [(1, SidebandKind::Blue), (2, SidebandKind::Red)] {
        for w in [0.8, 0.9, 1.0] {
            let est = map_indices(Execution::Parallel, 100, |i| {
                let mut sc = WScenario::standard(n, w, kind, SEED);
                sc.shots = Some(100);
                sc.seed = SEED + i as u64;
                sc.estimate().unwrap().w_raw
            });
            let mean = est.iter().sum::<f64>() / est.len() as f64;
            let rms = (est.iter().map(|v| (v - w).powi(2)).sum::<f64>() / est.len() as f64).sqrt();
            bias = bias.max((mean - w).abs());
            rms_worst = rms_worst.max(rms);
        }
    }
    let mut shift: f64 = 0.0;
    for (n, kind) in cases {
        let base = WScenario::standard(n, 0.9, kind, SEED).estimate().unwrap().w_hat;
        for f in [0.99, 1.01] {
            let mut sc = WScenario::standard(n, 0.9, kind, SEED);
            sc.true_verification_area = Some(sc.verification.area * f);
            shift = shift.max((sc.estimate().unwrap().w_hat - base).abs() / base);
        }
    }
    outcome(
        noiseless <= 0.01 && bias <= 0.03 && shift <= 0.02,
        format!(
            "noiseless error {noiseless:.1e}, 100-shot mean error {bias:.4} (single-replica RMS up to {rms_worst:.3}), 1% area shift moves w by {:.2}%",
            100.0 * shift
        ),
    )
}

fn cat_formulas() -> Outcome {
    let mut rng = sample_rng(SEED, 10);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let alpha = Complex64::from_polar(rng.random_range(0.1..3.0), rng.random_range(0.0..TAU));
        let mut s = CatSpec::balanced(alpha);
        s.rel_phase = rng.random_range(0.0..TAU);
        worst = worst.max((cat_metrics(&s, &s).unwrap().visibility - 1.0).abs());
    }
    for _ in 0..10 {
        let w = rng.random_range(0.01..0.99);
        let alpha = Complex64::from_polar(rng.random_range(0.1..3.0), rng.random_range(0.0..TAU));
        let s = CatSpec::new(alpha, alpha, w, 0.0).unwrap();
        let matched = cat_metrics(&s, &s.balanced_measurement()).unwrap();
        let swapped = cat_metrics(&s, &s.swapped_measurement()).unwrap();
        worst = worst
            .max((matched.visibility - 2.0 * (w * (1.0 - w)).sqrt()).abs())
            .max((swapped.visibility - 1.0).abs())
            .max((swapped.contrast - 4.0 * w * (1.0 - w)).abs());
    }
    let opt = optimize_detection_areas(
        4,
        &DetectionOptions {
            samples: 64,
            seed: SEED,
            ..Default::default()
        },
        Execution::Parallel,
    )
    .unwrap();
    let gap = opt.mean_visibility - opt.mean_contrast;
    outcome(
        worst < 1e-10 && gap > 0.2,
        format!(
            "formula deviation {worst:.1e}; optimized N=4 ⟨V⟩ = {:.3}, ⟨C⟩ = {:.3} (baseline ⟨V⟩ {:.3})",
            opt.mean_visibility, opt.mean_contrast, opt.baseline_visibility
        ),
    )
}

fn rabi_gate_comparison() -> Outcome {
    let settings = SweepSettings {
        seed: SEED,
        ..Default::default()
    };
    let change = |method, n| {
        let rows = instability_sweep(method, &SweepSettings { n, ..settings }, &[0.0, 0.8], Execution::Parallel).unwrap();
        (rows[0].mean_contrast, rows[1].mean_contrast, rows[1].mean_contrast / rows[0].mean_contrast - 1.0)
    };
    let (s0, s8, sd) = change(InstabilityMethod::Sideband, settings.n);
    let (r0, r8, rd) = change(InstabilityMethod::RabiGate, settings.n);
    let (_, _, sd4) = change(InstabilityMethod::Sideband, 4);
    let (_, _, rd4) = change(InstabilityMethod::RabiGate, 4);
    outcome(
        sd.abs() <= 0.1 && -rd > -sd,
        format!(
            "N={}: sideband {s0:.3} → {s8:.3} ({:+.1}%), Rabi gate {r0:.3} → {r8:.3} ({:+.1}%); at N=4 {:+.1}% and {:+.1}%",
            settings.n,
            100.0 * sd,
            100.0 * rd,
            100.0 * sd4,
            100.0 * rd4
        ),
    )
}

fn linearity_in_w() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, phases) in [(3usize, vec![0.4, 2.0, 5.1]), (8, vec![0.1, 1.7, 2.2, 4.0, 0.9, 3.3, 5.8, 2.6])] {
        let s = prepare(&build_half_transfer_sequence(n, &phases).unwrap(), 32).unwrap();
        for order in [PulseOrder::RedBlue, PulseOrder::BlueRed] {
            let spec = VerificationSpec::two_pulse(FRAC_PI_2, FRAC_PI_2, 16).with_order(order);
            let reference = fourier_spectrum(&scan_fringe(&s, &spec).unwrap()).unwrap();
            for w in [0.25, 0.5, 1.0] {
                let rho = apply_model(&s, &DecoherenceModel::w_mixture(w).unwrap()).unwrap();
                let sp = fourier_spectrum(&scan_fringe(&rho, &spec).unwrap()).unwrap();
                for h in READABLE {
                    let c1 = reference.coefficient(h);
                    if c1.norm() > 1e-9 {
                        worst = worst.max((sp.coefficient(h) - c1 * w).norm() / (c1.norm() * w));
                    }
                }
            }
        }
    }
    outcome(worst < 1e-6, format!("max relative deviation from w-scaling {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("closed-form oracles", analytic_oracles),
        ("parity lock", parity_lock),
        ("operator identities", operator_identities),
        ("POVM equivalence", povm_equivalence),
        ("phonon saturation", phonon_saturation),
        ("visibility ceilings", visibility_ceilings),
        ("Fourier regression", fourier_regression),
        ("third-order signature", third_order_signature),
        ("w round trip", w_round_trip),
        ("cat-state formulas", cat_formulas),
        ("Rabi-gate comparison", rabi_gate_comparison),
        ("linearity in w", linearity_in_w),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
