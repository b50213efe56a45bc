use qsum_core::circuit::{circuit_to_matrix, equal_up_to_global_phase};
use qsum_core::protocol::{
    brute_force_power_sum, build_plan, run_power_summation, run_power_summation_with,
};
use qsum_core::transpile::validate;
use qsum_core::{
    CouplingMap, NoiseModel, OracleMode, Outcome, PartyBehavior, PartySecret, ProtocolConfig,
    RunOptions,
};

fn honest(m: usize) -> Vec<PartyBehavior> {
    vec![PartyBehavior::Honest; m]
}

/// Every tuple in [0, N)^m, first party varying fastest.
fn tuples(m: usize, n: usize) -> Vec<Vec<u64>> {
    let modulus = 1u64 << n;
    (0..modulus.pow(m as u32))
        .map(|mut code| {
            (0..m)
                .map(|_| {
                    let v = code % modulus;
                    code /= modulus;
                    v
                })
                .collect()
        })
        .collect()
}

fn run(cfg: &ProtocolConfig, values: &[u64], power: u32) -> qsum_core::ProtocolTranscript {
    run_power_summation(cfg, &PartySecret::from_values(values), power).unwrap()
}

#[test]
fn exhaustive_small_configurations_match_brute_force() {
    for m in [3, 4] {
        for n in [1, 2] {
            let cfg = ProtocolConfig::new(m, n).with_shots(32).with_seed(3);
            for values in tuples(m, n) {
                let t = run(&cfg, &values, 1);
                let want = brute_force_power_sum(&values, cfg.modulus(), 1);
                assert_eq!(t.result, Outcome::Sum(want), "m={m} n={n}");
                assert_eq!(t.result_probability(), 1.0);
                assert_eq!(t.verification, 0);
            }
        }
    }
}

#[test]
fn literal_and_kickback_runs_agree() {
    for m in [3, 4] {
        for values in tuples(m, 1) {
            let kick = ProtocolConfig::new(m, 1).with_shots(64);
            let lit = kick.with_mode(OracleMode::Literal);
            let a = run(&kick, &values, 1);
            let b = run(&lit, &values, 1);
            assert_eq!(a.result, b.result);
            assert_eq!(b.result_probability(), 1.0);
        }
    }
    let cfg = ProtocolConfig::new(3, 2)
        .with_mode(OracleMode::Literal)
        .with_shots(64);
    for values in tuples(3, 2) {
        let t = run(&cfg, &values, 1);
        assert_eq!(t.result, Outcome::Sum(values.iter().sum::<u64>() % 4));
    }
}

#[test]
fn result_is_invariant_under_party_order() {
    let cfg = ProtocolConfig::new(4, 2).with_shots(64);
    let base = [3u64, 1, 2, 2];
    let want = run(&cfg, &base, 1).result;
    for rotation in 1..4 {
        let mut v = base;
        v.rotate_left(rotation);
        assert_eq!(run(&cfg, &v, 1).result, want);
    }
    let mut v = base;
    v.reverse();
    assert_eq!(run(&cfg, &v, 1).result, want);
}

#[test]
fn power_sums_match_brute_force() {
    let cfg = ProtocolConfig::new(3, 2).with_shots(32);
    for k in 1..=3 {
        for values in tuples(3, 2) {
            let t = run(&cfg, &values, k);
            assert_eq!(t.result, Outcome::Sum(brute_force_power_sum(&values, 4, k)));
            assert_eq!(t.result_probability(), 1.0);
        }
    }
}

#[test]
fn every_single_party_tamper_aborts() {
    for n in [1, 2] {
        let m = 3;
        let cfg = ProtocolConfig::new(m, n).with_shots(16);
        let secrets = PartySecret::from_values(&vec![1; m]);
        for party in 2..=m {
            for mask in 1..(1u64 << n) {
                let mut behaviors = honest(m);
                behaviors[party - 1] = PartyBehavior::TamperBitFlip { mask };
                for seed in 0..4 {
                    let t = qsum_core::protocol::run_summation(
                        &cfg.with_seed(seed),
                        &secrets,
                        &behaviors,
                    )
                    .unwrap();
                    assert!(t.aborted(), "n={n} party={party} mask={mask}");
                    assert_eq!(t.verification, mask);
                    assert!(t.histogram.is_none());
                }
            }
        }
    }
}

#[test]
fn cancelling_flips_pass_the_check() {
    let cfg = ProtocolConfig::new(4, 2).with_shots(16);
    let flip = PartyBehavior::TamperBitFlip { mask: 0b10 };
    let behaviors = [PartyBehavior::Honest, flip, PartyBehavior::Honest, flip];
    let t = qsum_core::protocol::run_summation(
        &cfg,
        &PartySecret::from_values(&[1, 2, 3, 0]),
        &behaviors,
    )
    .unwrap();
    assert!(!t.aborted());
}

#[test]
fn transpiled_literal_run_on_ibmqx2() {
    let map = CouplingMap::ibmqx2();
    let cfg = ProtocolConfig::new(4, 1)
        .with_mode(OracleMode::Literal)
        .with_shots(256);
    let secrets = PartySecret::from_values(&[1, 1, 0, 1]);
    let options = RunOptions {
        noise: None,
        coupling_map: Some(&map),
    };
    let t = run_power_summation_with(&cfg, &secrets, &honest(4), 1, &options).unwrap();
    assert_eq!(t.result, Outcome::Sum(1));
    assert_eq!(t.result_probability(), 1.0);
    let report = t.transpile.unwrap();
    assert!(report.rewritten_gate_count >= report.original_gate_count);

    let plan = build_plan(&cfg, &secrets, &honest(4)).unwrap();
    let (out, _) = qsum_core::transpile::transpile(&plan.circuit, &map).unwrap();
    assert!(validate(&out, &map).is_empty());
    assert!(equal_up_to_global_phase(
        &circuit_to_matrix(&out).unwrap(),
        &circuit_to_matrix(&plan.circuit).unwrap(),
        1e-9
    ));
}

fn noisy_success(p: f64, shots: u64) -> f64 {
    let cfg = ProtocolConfig::new(3, 1).with_shots(shots).with_seed(11);
    let options = RunOptions {
        noise: Some(NoiseModel::new(p, 11).unwrap()),
        coupling_map: None,
    };
    let t = run_power_summation_with(
        &cfg,
        &PartySecret::from_values(&[0, 1, 0]),
        &honest(3),
        1,
        &options,
    )
    .unwrap();
    let h = t.histogram.expect("modal check passes at small p");
    h.count_value(1) as f64 / shots as f64
}

#[test]
fn noise_degrades_success_monotonically() {
    let shots = 10_000;
    assert_eq!(noisy_success(0.0, shots), 1.0);
    let probs: Vec<f64> = [0.01, 0.05, 0.1]
        .iter()
        .map(|&p| noisy_success(p, shots))
        .collect();
    for &p in &probs {
        assert!(p > 0.5 && p < 1.0, "{probs:?}");
    }
    for w in probs.windows(2) {
        let sigma = |q: f64| (q * (1.0 - q) / shots as f64).sqrt();
        let slack = 3.0 * (sigma(w[0]).powi(2) + sigma(w[1]).powi(2)).sqrt();
        assert!(w[1] <= w[0] + slack, "{probs:?}");
    }
}

#[test]
fn zero_noise_equals_ideal_run() {
    let cfg = ProtocolConfig::new(3, 2).with_shots(500).with_seed(9);
    let secrets = PartySecret::from_values(&[3, 0, 0]);
    let ideal = run_power_summation(&cfg, &secrets, 1).unwrap();
    let options = RunOptions {
        noise: Some(NoiseModel::new(0.0, 9).unwrap()),
        coupling_map: None,
    };
    let zero = run_power_summation_with(&cfg, &secrets, &honest(3), 1, &options).unwrap();
    assert_eq!(ideal, zero);
}

#[test]
fn seeded_runs_replay() {
    let cfg = ProtocolConfig::new(3, 2).with_shots(300).with_seed(42);
    let options = RunOptions {
        noise: Some(NoiseModel::new(0.05, 42).unwrap()),
        coupling_map: None,
    };
    let secrets = PartySecret::from_values(&[1, 2, 3]);
    let a = run_power_summation_with(&cfg, &secrets, &honest(3), 1, &options).unwrap();
    let b = run_power_summation_with(&cfg, &secrets, &honest(3), 1, &options).unwrap();
    assert_eq!(a, b);
}
