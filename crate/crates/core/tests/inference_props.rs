mod common;

use common::{chain3_mle_nll, naive_log_potential, random_model, rng};
use qcgm::circuit::gamma_to_theta;
use qcgm::experiment::run_learning;
use qcgm::inference::{
    dtheta_dgamma, estimate_partition, exact_partition, exact_success, gamma_parametrization, gradient,
    learn_mle, map_estimate, theta_from_gamma, AdamConfig, GradientSource,
};
use qcgm::model::{brute_force_pmf, map_state_brute, moments, partition_brute};
use qcgm::simulator::exact_conditional;
use qcgm::suite::structure;
use qcgm::{build_circuit, Dataset, GraphicalModel};
use rand::Rng;

#[test]
fn qcgm_gradient_within_monte_carlo_bands() {
    let st = structure("chain-3").unwrap();
    let mut r = rng(71);
    for i in 0..5 {
        let m = st.default_random_model(300 + i);
        let data = Dataset::new(3, (0..200).map(|_| r.random_range(0..8)).collect()).unwrap();
        let exact = gradient(&m, &data, GradientSource::ExactOracle, 0, 0).unwrap();
        let est = gradient(&m, &data, GradientSource::QcgmSimulated, 50_000, i).unwrap();
        assert!(est.accepted > 1000);
        let mu = moments(&m).unwrap();
        for j in 0..m.dim() {
            let sigma = (mu[j] * (1.0 - mu[j]) / est.accepted as f64).sqrt();
            assert!((est.values[j] - exact.values[j]).abs() <= 3.0 * sigma, "model {i} entry {j}");
        }
    }
}

#[test]
fn exact_training_reaches_the_chain_optimum_given_time() {
    let st = structure("chain-3").unwrap();
    let cfg = AdamConfig { iterations: 400, ..AdamConfig::default() };
    let run = run_learning(&st, 10_000, 0, &cfg).unwrap();
    let opt = chain3_mle_nll(&run.data);
    let last = run.trace.final_nll().unwrap();
    assert!(last >= opt - 1e-9);
    assert!(last - opt <= 1e-3, "gap {}", last - opt);
}

#[test]
fn exact_training_is_stationary_on_full_support_data() {
    let st = structure("chain-3").unwrap();
    let truth = st.default_random_model(17);
    let p = brute_force_pmf(&truth).unwrap();
    let data = Dataset::weighted(3, (0..8).collect(), p.probabilities().to_vec()).unwrap();
    let cfg = AdamConfig { iterations: 2000, ..AdamConfig::default() };
    let (_, trace) = learn_mle(&st.zeros(), &data, &cfg).unwrap();
    let last = trace.records.last().unwrap();
    assert!(last.grad_norm <= 1e-4, "{}", last.grad_norm);
    assert!((last.nll - chain3_mle_nll(&data)).abs() <= 1e-6);
}

#[test]
fn training_trace_shape() {
    let st = structure("chain-3").unwrap();
    let run = run_learning(&st, 2000, 1, &AdamConfig::default()).unwrap();
    let tr = &run.trace;
    assert_eq!(tr.len(), 31);
    assert!((tr.records[0].nll - 3.0 * std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(tr.records[0].exact_success, 1.0);
    let mut csv = Vec::new();
    tr.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some("iteration,nll,delta,grad_norm"));
    assert_eq!(text.lines().count(), 32);
}

#[test]
fn qcgm_training_lowers_nll() {
    let st = structure("chain-3").unwrap();
    let cfg = AdamConfig { source: GradientSource::QcgmSimulated, seed: 4, ..AdamConfig::default() };
    let run = run_learning(&st, 10_000, 2, &cfg).unwrap();
    let tr = &run.trace.records;
    assert!(tr[30].nll < tr[0].nll);
    // trend: the last third averages below the first third
    let mean = |s: &[qcgm::inference::TrainingRecord]| s.iter().map(|r| r.nll).sum::<f64>() / s.len() as f64;
    assert!(mean(&tr[21..]) < mean(&tr[..10]));
    assert!(tr.iter().all(|r| r.success_rate > 0.0 && r.success_rate <= 1.0));
}

/// δ* starts at 1 for θ = 0, never exceeds 1 and ends lower than it began.
#[test]
fn success_probability_falls_during_training() {
    let st = structure("chain-3").unwrap();
    for seed in 0..10 {
        let run = run_learning(&st, 10_000, seed, &AdamConfig::default()).unwrap();
        let tr = &run.trace.records;
        assert_eq!(tr[0].exact_success, 1.0);
        assert!(tr.iter().all(|r| r.exact_success <= 1.0));
        assert!(tr[30].exact_success < tr[0].exact_success);
        for r in tr {
            let m = st.zeros().with_theta(r.theta.clone()).unwrap();
            assert!((exact_success(&m).unwrap() - r.exact_success).abs() < 1e-15);
        }
    }
}

/// Step-by-step monotonicity is not guaranteed: once ADAM overshoots, δ*
/// climbs back while the fit corrects.
#[test]
fn success_probability_can_rise_after_overshoot() {
    let st = structure("chain-3").unwrap();
    let run = run_learning(&st, 10_000, 4, &AdamConfig::default()).unwrap();
    let rises = run
        .trace
        .records
        .windows(2)
        .filter(|w| w[1].exact_success > w[0].exact_success)
        .count();
    assert!(rises > 0);
}

#[test]
fn gamma_parametrization_round_trip_and_chain_rule() {
    let mut r = rng(72);
    for _ in 0..30 {
        let m = random_model(&mut r, 4, 3, -5.0, 0.0);
        let g = gamma_parametrization(&m).unwrap();
        let back = theta_from_gamma(&g).unwrap();
        for (a, b) in back.iter().zip(m.normalize_for_circuit().theta()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
    let zero = GraphicalModel::zeros(2, vec![vec![0, 1]]).unwrap();
    assert!(gamma_parametrization(&zero).unwrap().iter().all(|&g| g == 0.0));

    let h = 1e-6;
    for i in 1..60 {
        let gamma = i as f64 * 0.013;
        let fd = (gamma_to_theta(gamma + h).unwrap() - gamma_to_theta(gamma - h).unwrap()) / (2.0 * h);
        let d = dtheta_dgamma(gamma);
        assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "γ={gamma}: {fd} vs {d}");
    }
}

#[test]
fn map_estimate_is_exhaustive_argmax() {
    let mut r = rng(73);
    for _ in 0..50 {
        let m = random_model(&mut r, 10, 4, -5.0, 0.0);
        let mut best = (0, f64::NEG_INFINITY);
        for x in 0..1usize << m.n() {
            let v = naive_log_potential(&m, x);
            if v > best.1 {
                best = (x, v);
            }
        }
        let got = map_estimate(&m).unwrap();
        assert_eq!(got, best.0);
        assert_eq!(got, map_state_brute(&m).unwrap());
    }
    let single = GraphicalModel::new(1, vec![vec![0]], vec![-1.0, 0.0]).unwrap();
    assert_eq!(map_estimate(&single).unwrap(), 1);
    assert_eq!(map_estimate(&GraphicalModel::zeros(3, vec![vec![0, 1, 2]]).unwrap()).unwrap(), 0);
}

#[test]
fn exact_partition_matches_oracle() {
    let mut r = rng(74);
    for _ in 0..50 {
        let m = random_model(&mut r, 4, 3, -5.0, 5.0);
        let z = partition_brute(&m).unwrap();
        assert!((exact_partition(&m).unwrap() - z).abs() <= 1e-9 * z);
    }
}

#[test]
fn partition_intervals_cover() {
    let mut covered = 0;
    for run in 0..100u64 {
        let name = if run % 2 == 0 { "chain-3" } else { "triangle" };
        let m = structure(name).unwrap().default_random_model(400 + run);
        let est = estimate_partition(&m, 10_000, run).unwrap();
        if est.covers(partition_brute(&m).unwrap()) {
            covered += 1;
        }
    }
    assert!(covered >= 90, "{covered}/100");

    let zero = GraphicalModel::zeros(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
    let est = estimate_partition(&zero, 1000, 0).unwrap();
    assert!((est.z_hat - 8.0).abs() < 1e-12);
}

#[test]
fn partition_half_width_shrinks_as_inverse_sqrt() {
    let m = structure("chain-3").unwrap().default_random_model(9);
    let ns = [1_000usize, 10_000, 100_000];
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            let hw: f64 = (0..5).map(|s| estimate_partition(&m, n, s).unwrap().half_width).sum::<f64>() / 5.0;
            ((n as f64).ln(), hw.ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

#[test]
fn success_identity_links_circuit_and_partition() {
    let m = structure("triangle-pendant").unwrap().default_random_model(3);
    let c = build_circuit(&m).unwrap();
    let delta = exact_conditional(&c).unwrap().success_prob;
    let z = partition_brute(&m).unwrap();
    let rebuilt = 16.0 * delta * (-c.shift * m.num_cliques() as f64).exp();
    assert!((rebuilt - z).abs() <= 1e-9 * z);
    assert!((exact_success(&m).unwrap() - delta).abs() <= 1e-12);
}

#[test]
fn reference_optimum_matches_closed_form() {
    let st = structure("chain-3").unwrap();
    for seed in 0..3 {
        let run = run_learning(&st, 10_000, seed, &AdamConfig { iterations: 1, ..AdamConfig::default() }).unwrap();
        let (_, opt) = qcgm::inference::mle_reference(&st.zeros(), &run.data, 1e-9, 20_000).unwrap();
        let closed = chain3_mle_nll(&run.data);
        assert!(opt >= closed - 1e-9 && opt - closed <= 1e-5, "{opt} vs {closed}");
    }
}
