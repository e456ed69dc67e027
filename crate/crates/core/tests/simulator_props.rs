mod common;

use common::{naive_partition, naive_pmf, random_model, rng, tv};
use qcgm::metrics::{empirical_distribution, fidelity};
use qcgm::model::brute_force_pmf;
use qcgm::simulator::{exact_conditional, prepare_plus, sample_shots, ReadoutNoise};
use qcgm::suite::structure;
use qcgm::{build_circuit, GraphicalModel, NoiseConfig, Simulator};

#[test]
fn plus_state_examples() {
    let s = prepare_plus(1).unwrap();
    for a in s.amplitudes() {
        assert!((a.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15 && a.im == 0.0);
    }
    let s = prepare_plus(3).unwrap();
    assert!(s.amplitudes().iter().all(|a| (a.re - 0.353_553_390_593_273_8).abs() < 1e-15));
    assert!(s.probabilities().iter().all(|&p| (p - 0.125).abs() < 1e-15));
    assert_eq!(Simulator::with_limit(4).prepare_plus(5).unwrap_err().kind(), "simulator_limit");
}

#[test]
fn conditional_is_exact_on_random_models() {
    let mut r = rng(51);
    for _ in 0..50 {
        let m = random_model(&mut r, 4, 3, -5.0, 0.0);
        let ex = exact_conditional(&build_circuit(&m).unwrap()).unwrap();
        let pmf = naive_pmf(&m);
        assert!(tv(ex.distribution.probabilities(), &pmf) <= 1e-10);
    }
}

#[test]
fn single_vertex_example() {
    let m = GraphicalModel::new(1, vec![vec![0]], vec![-1.0, 0.0]).unwrap();
    let ex = exact_conditional(&build_circuit(&m).unwrap()).unwrap();
    assert!((ex.distribution.get(0) - 0.268_941_421_369_995_1).abs() < 1e-12);
    assert!((ex.success_prob - 0.683_939_720_585_721_2).abs() < 1e-12);
}

#[test]
fn success_identity_holds() {
    let mut r = rng(52);
    for _ in 0..50 {
        let m = random_model(&mut r, 4, 3, -5.0, 5.0);
        let ex = exact_conditional(&build_circuit(&m).unwrap()).unwrap();
        let want = naive_partition(&m.normalize_for_circuit()) / (1u64 << m.n()) as f64;
        assert!((ex.success_prob - want).abs() <= 1e-10 * want);
    }
}

#[test]
fn conditional_does_not_depend_on_embedding_bit() {
    let mut r = rng(53);
    for _ in 0..50 {
        let m = random_model(&mut r, 4, 3, -5.0, 0.0);
        let ex = exact_conditional(&build_circuit(&m).unwrap()).unwrap();
        let [w0, w1] = &ex.by_embed;
        let (s0, s1): (f64, f64) = (w0.iter().sum(), w1.iter().sum());
        assert!(s0 > 1e-15 && s1 > 1e-15);
        for (a, b) in w0.iter().zip(w1) {
            assert!((a / s0 - b / s1).abs() <= 1e-10);
        }
    }
}

#[test]
fn shots_are_deterministic_and_flags_consistent() {
    let m = structure("chain-3").unwrap().default_random_model(5);
    let c = build_circuit(&m).unwrap();
    let a = sample_shots(&c, 2000, 9, &NoiseConfig::none()).unwrap();
    let b = sample_shots(&c, 2000, 9, &NoiseConfig::none()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, sample_shots(&c, 2000, 10, &NoiseConfig::none()).unwrap());
    assert!(a.iter().all(|s| s.accepted == (s.rp_bits == 0)));

    let zero = GraphicalModel::zeros(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
    let shots = sample_shots(&build_circuit(&zero).unwrap(), 1000, 1, &NoiseConfig::none()).unwrap();
    assert!(shots.iter().all(|s| s.accepted));
}

#[test]
fn acceptance_rate_is_binomial() {
    let mut r = rng(54);
    let n_shots = 20_000;
    for i in 0..20 {
        let m = random_model(&mut r, 4, 3, -5.0, 0.0);
        let c = build_circuit(&m).unwrap();
        let delta = exact_conditional(&c).unwrap().success_prob;
        let shots = sample_shots(&c, n_shots, i, &NoiseConfig::none()).unwrap();
        let rate = shots.iter().filter(|s| s.accepted).count() as f64 / n_shots as f64;
        let sigma = (delta * (1.0 - delta) / n_shots as f64).sqrt();
        assert!((rate - delta).abs() <= 3.0 * sigma + 1e-12, "model {i}: {rate} vs {delta}");
    }
}

#[test]
fn accepted_shots_converge_to_conditional() {
    let m = structure("chain-3").unwrap().default_random_model(11);
    let c = build_circuit(&m).unwrap();
    let ex = exact_conditional(&c).unwrap();
    let trials = (60_000.0 / ex.success_prob).ceil() as usize;
    let shots = sample_shots(&c, trials, 3, &NoiseConfig::none()).unwrap();
    let accepted: Vec<usize> = shots.iter().filter(|s| s.accepted).map(|s| s.target_bits).collect();
    assert!(accepted.len() >= 50_000);
    let emp = empirical_distribution(&accepted, m.n()).unwrap();
    assert!(fidelity(&emp, &ex.distribution).unwrap() >= 0.999);
}

#[test]
fn readout_flips_hit_the_chosen_qubit() {
    // With θ = 0 every real-part auxiliary reads 0 deterministically.
    let m = GraphicalModel::zeros(2, vec![vec![0, 1]]).unwrap();
    let c = build_circuit(&m).unwrap();
    let rp = c.layout.rp_aux(0);
    let mut probs = vec![0.0; c.num_qubits()];
    probs[rp] = 0.05;
    let noise = NoiseConfig {
        enabled: true,
        depolarizing_prob: 0.0,
        readout: ReadoutNoise::PerQubit(probs),
    };
    let n = 100_000;
    let shots = sample_shots(&c, n, 4, &noise).unwrap();
    let flipped = shots.iter().filter(|s| s.rp_bits != 0).count() as f64 / n as f64;
    let sigma = (0.05 * 0.95 / n as f64).sqrt();
    assert!((flipped - 0.05).abs() <= 3.0 * sigma, "{flipped}");
}

#[test]
fn zero_noise_matches_noiseless() {
    let m = structure("chain-3").unwrap().default_random_model(2);
    let c = build_circuit(&m).unwrap();
    let quiet = NoiseConfig::new(0.0, 0.0).unwrap();
    assert_eq!(
        sample_shots(&c, 500, 1, &quiet).unwrap(),
        sample_shots(&c, 500, 1, &NoiseConfig::none()).unwrap()
    );
    assert!(NoiseConfig::new(0.6, 0.0).is_err());
}

#[test]
fn gate_noise_lowers_fidelity() {
    let m = structure("chain-3").unwrap().default_random_model(3);
    let c = build_circuit(&m).unwrap();
    let pmf = brute_force_pmf(&m).unwrap();
    let f = |noise: &NoiseConfig| {
        let shots = sample_shots(&c, 100_000, 8, noise).unwrap();
        let acc: Vec<usize> = shots.iter().filter(|s| s.accepted).map(|s| s.target_bits).collect();
        fidelity(&empirical_distribution(&acc, m.n()).unwrap(), &pmf).unwrap()
    };
    let clean = f(&NoiseConfig::none());
    let noisy = f(&NoiseConfig::new(0.5, 0.0).unwrap());
    assert!(noisy < clean, "noisy {noisy} clean {clean}");
}

#[test]
fn degenerate_success_is_reported() {
    // overlapping cliques put a floored entry on every state
    let m = GraphicalModel::new(2, vec![vec![0, 1], vec![1]], vec![-60.0, -60.0, 0.0, -60.0, -60.0, 0.0]).unwrap();
    let err = exact_conditional(&build_circuit(&m).unwrap()).unwrap_err();
    assert_eq!(err.kind(), "degenerate_success");
}
