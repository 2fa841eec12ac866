use qubit_parity::estimation::{
    default_times, fit_phonon_distribution, simulate_rabi_flop, FitOptions, FlopModel, WScenario, DEFAULT_N_FIT_MAX,
};
use qubit_parity::exec::{map_indices, Execution};
use qubit_parity::fockspace::{fock_distribution, FockDistribution};
use qubit_parity::preparation::{build_half_transfer_sequence, prepare, sample_phase_vector};
use qubit_parity::sideband::SidebandKind;

fn eight_pulse_distribution(index: u64) -> FockDistribution {
    let phases = sample_phase_vector(8, 11, index);
    let s = prepare(&build_half_transfer_sequence(8, &phases).unwrap(), 32).unwrap();
    let mut d = fock_distribution(&s);
    d.probs.truncate(DEFAULT_N_FIT_MAX + 1);
    FockDistribution::from_probs(d.probs)
}

#[test]
fn shot_limited_fit_covers_truth() {
    let model = FlopModel::default();
    let times = default_times();
    let (mut inside, mut total) = (0usize, 0usize);
    for k in 0..8u64 {
        let truth = eight_pulse_distribution(k);
        let record = simulate_rabi_flop(&truth, &model, &times, 100, 100 + k).unwrap();
        let fit = fit_phonon_distribution(&record, &model, &FitOptions { seed: k, ..Default::default() }).unwrap();
        for (n, (&p, &s)) in fit.probs.iter().zip(&fit.uncertainties).enumerate() {
            let t = truth.probs.get(n).copied().unwrap_or(0.0);
            total += 1;
            if (p - t).abs() <= 2.0 * s.max(1e-3) {
                inside += 1;
            }
        }
    }
    let coverage = inside as f64 / total as f64;
    assert!(coverage >= 0.9, "coverage {coverage}");
}

#[test]
fn many_shots_approach_model_curve() {
    let model = FlopModel::default();
    let times = default_times();
    let truth = eight_pulse_distribution(3);
    let curve = model.curve(&truth.probs, &times);
    let shots = 1_000_000;
    let record = simulate_rabi_flop(&truth, &model, &times, shots, 5).unwrap();
    for (p, c) in record.pg.iter().zip(&curve) {
        let sigma = (c * (1.0 - c) / shots as f64).sqrt().max(1e-9);
        assert!((p - c).abs() < 5.0 * sigma);
    }
}

#[test]
fn w_estimator_is_unbiased_at_desk_scale() {
    for (n, kind) in [(1, SidebandKind::Blue), (2, SidebandKind::Red)] {
        for w in [0.8, 0.9, 1.0] {
            let est = map_indices(Execution::Parallel, 100, |i| {
                let mut sc = WScenario::standard(n, w, kind, 1);
                sc.shots = Some(100);
                sc.seed = 1_000 + i as u64;
                sc.estimate().unwrap().w_raw
            });
            let mean = est.iter().sum::<f64>() / est.len() as f64;
            assert!((mean - w).abs() <= 0.01, "N={n} {kind:?} w={w}: mean {mean}");
        }
    }
}
