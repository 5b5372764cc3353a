//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use qcsm::config::default_config;
use qcsm::harness::{
    run_lifetime_experiment, run_response_time_experiment, run_reward_experiment, LifetimeOptions,
    ResponseOptions, RewardOptions, DEFAULT_SEEDS, SENSOR_COUNTS,
};
use qcsm_core::codec::{decode_cbor, encode_cbor};
use qcsm_core::engine::{
    compute_density, recommend, run_training, Action, EpsilonSchedule, Environment, FleetEnvironment,
    NetworkState, TrainingConfig,
};
use qcsm_core::fleet::Fleet;
use qcsm_core::rng::{SeedStreams, CHURN};
use qcsm_core::{build_scenario, QosClassId, ServiceId};
use rand::Rng;
use serde_json::{json, Map, Number, Value};

fn verdict(criterion: u32, ok: bool, detail: &str) {
    println!("criterion {criterion}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn runner(seed: u8) -> TestRunner {
    TestRunner::new_with_rng(Config::default(), TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

fn document() -> impl Strategy<Value = Value> {
    let number = prop_oneof![
        any::<i64>().prop_map(Value::from),
        any::<u64>().prop_map(Value::from),
        any::<f64>()
            .prop_filter("finite", |f| f.is_finite())
            .prop_map(|f| Value::Number(Number::from_f64(f).unwrap())),
        (-10_000i32..10_000).prop_map(|m| json!(m as f64 / 8.0)),
    ];
    let leaf = prop_oneof![Just(Value::Null), any::<bool>().prop_map(Value::Bool), number, "\\PC{0,16}".prop_map(Value::String)];
    leaf.prop_recursive(4, 48, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..6).prop_map(Value::Array),
            prop::collection::btree_map("\\PC{0,6}", inner, 0..6).prop_map(|m| Value::Object(m.into_iter().collect::<Map<_, _>>())),
        ]
    })
}

fn reference_encode(v: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    ciborium::into_writer(v, &mut out).unwrap();
    out
}

#[test]
fn criterion_1_codec() {
    let start = Instant::now();
    let mut runner = runner(1);
    let strategy = document();
    let mut failures = 0;
    for _ in 0..1000 {
        let doc = strategy.new_tree(&mut runner).unwrap().current();
        let bytes = encode_cbor(&doc);
        if decode_cbor(&bytes).ok().as_ref() != Some(&doc) {
            failures += 1;
        }
    }
    let fixtures = [
        (json!({}), "a0"),
        (json!({"a": 1}), "a1616101"),
        (json!([1, [2, 3]]), "8201820203"),
        (json!({"a": [true, null], "b": -1.5}), "a2616182f5f66162f9be00"),
    ];
    let mut fixture_failures = 0;
    for (doc, expected) in &fixtures {
        let ours = encode_cbor(doc);
        let reference = reference_encode(doc);
        let decoded: Value = ciborium::from_reader(&ours[..]).unwrap();
        if hex::encode(&ours) != *expected || ours != reference || &decoded != doc || decode_cbor(&reference).ok().as_ref() != Some(doc) {
            fixture_failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        failures == 0 && fixture_failures == 0 && secs < 5.0,
        &format!("1000 round trips, {failures} mismatches; {fixture_failures}/4 fixtures differ from ciborium; {secs:.2}s"),
    );
}

#[test]
fn criterion_2_density() {
    let start = Instant::now();
    let sets: [&[ServiceId]; 4] = [
        &[ServiceId::WindTurbine, ServiceId::Transportation],
        &[ServiceId::SolarPanel, ServiceId::Transportation],
        &[ServiceId::WindTurbine, ServiceId::SolarPanel],
        &ServiceId::ALL,
    ];
    let mut mismatches = 0;
    let mut undefined = 0;
    for seed in 0..1000u64 {
        let mut rng = SeedStreams::new(seed).stream(CHURN);
        let n = rng.random_range(3..=150);
        let cfg = build_scenario(sets[rng.random_range(0..4)], n, seed).unwrap();
        let mut fleet = Fleet::spawn(&cfg);
        let p = rng.random_range(0.0..0.3);
        for cycle in 0..rng.random_range(0..12) {
            fleet.churn(&mut rng, p);
            let svc = cfg.services[rng.random_range(0..cfg.services.len())].id;
            fleet.assign(svc, QosClassId::ALL[rng.random_range(0..2)]);
            let due: Vec<u32> = fleet.due(cycle).collect();
            for id in due {
                fleet.enqueue(id);
            }
            if rng.random_bool(0.5) {
                fleet.serve(QosClassId::ALL[rng.random_range(0..2)]);
            }
        }
        for class in QosClassId::ALL {
            let active = fleet.nodes().iter().filter(|n| n.active && n.qos == class).count() as u32;
            let waiting = fleet.nodes().iter().filter(|n| n.active && n.queued_for == Some(class)).count() as u32;
            match compute_density(&fleet, class) {
                Ok(d) if waiting > 0 && d.alpha == active as f64 / waiting as f64 => {}
                Err(_) if waiting == 0 => undefined += 1,
                _ => mismatches += 1,
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        2,
        mismatches == 0 && secs < 5.0,
        &format!("1000 fleets, {mismatches} mismatches against brute force ({undefined} empty-queue cases); {secs:.2}s"),
    );
}

#[test]
fn criterion_3_q_learning_fixed_point() {
    let start = Instant::now();
    let cfg = build_scenario(&ServiceId::ALL, 30, 0).unwrap();
    let gamma = 0.99;
    let (states, actions) = (NetworkState::count(3), Action::count(3));

    // Value-iteration oracle over the rewards of the frozen environment.
    let mut probe = FleetEnvironment::frozen(&cfg);
    let mut rewards = vec![[0.0; 7]; states];
    let mut next = vec![[0usize; 7]; states];
    for s in 0..states {
        for a in 0..actions {
            probe.set_state(NetworkState::from_index(s, 3));
            let out = probe.step(Action::from_index(a, 3));
            rewards[s][a] = out.reward;
            next[s][a] = out.next.index();
        }
    }
    let mut value = vec![[0.0f64; 7]; states];
    loop {
        let mut fresh = value.clone();
        let mut delta = 0.0f64;
        for s in 0..states {
            for a in 0..actions {
                let best = value[next[s][a]].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                fresh[s][a] = rewards[s][a] + gamma * best;
                delta = delta.max((fresh[s][a] - value[s][a]).abs());
            }
        }
        value = fresh;
        if delta == 0.0 {
            break;
        }
    }
    let oracle_greedy = |s: usize| -> usize {
        let row = &value[s];
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.iter().position(|&v| v == best).unwrap()
    };

    let mut training = TrainingConfig::new(2_000_000, 1.0, gamma, 0);
    training.epsilon = EpsilonSchedule::Constant(1.0);
    let out = run_training(&mut FleetEnvironment::frozen(&cfg), &training).unwrap();

    let mut sup = 0.0f64;
    for s in 0..states {
        for a in 0..actions {
            sup = sup.max((out.qtable.get(s, a) - value[s][a]).abs());
        }
    }
    let mut policy_diffs = 0;
    for s in 0..states {
        let state = NetworkState::from_index(s, 3);
        let learned = recommend(&out.candidate, state).unwrap();
        if learned.index() != oracle_greedy(s) {
            policy_diffs += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        3,
        sup <= 1e-9 && policy_diffs == 0 && secs < 30.0,
        &format!("sup error {sup:.3e} vs value iteration, {policy_diffs}/8 greedy actions differ; {secs:.2}s"),
    );
}

#[test]
fn criterion_4_response_time() {
    let start = Instant::now();
    let loaded = default_config();
    let result = run_response_time_experiment(&loaded.config, &loaded.hash, &DEFAULT_SEEDS, ResponseOptions::default());
    let mut strict = true;
    let mut monotone = true;
    for n in SENSOR_COUNTS {
        for k in [2, 3] {
            let q = result.row("QCSM", k, n, "response_time").unwrap().value;
            let b = result.row("Baseline", k, n, "response_time").unwrap().value;
            strict &= q < b;
        }
        monotone &= result.gap(3, n, "response_time").unwrap().gap_percent >= result.gap(2, n, "response_time").unwrap().gap_percent;
    }
    let two = result.gap(2, 150, "response_time").unwrap().gap_percent;
    let three = result.gap(3, 150, "response_time").unwrap().gap_percent;
    let calibrated = (two - 38.7).abs() <= 10.0 && (three - 50.0).abs() <= 10.0;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        4,
        strict && monotone && calibrated && secs < 120.0,
        &format!(
            "strictly faster in every cell: {strict}; gap non-decreasing in services: {monotone}; n=150 gaps {two:.1}% (2-svc) {three:.1}% (3-svc); {secs:.2}s"
        ),
    );
}

#[test]
fn criterion_5_lifetime() {
    let start = Instant::now();
    let loaded = default_config();
    let opts = LifetimeOptions::for_config(&loaded.config);
    let result = run_lifetime_experiment(&loaded.config, &loaded.hash, &DEFAULT_SEEDS, opts).unwrap();
    let mut ordered = true;
    for k in [2, 3] {
        let q = result.row("QCSM", k, opts.n_sensors, "normalized_lifetime").unwrap().value;
        let b = result.row("Baseline", k, opts.n_sensors, "normalized_lifetime").unwrap().value;
        ordered &= q >= b;
    }
    let default_services = loaded.config.services.len();
    let gap = result.gap(default_services, opts.n_sensors, "normalized_lifetime").unwrap().gap_percent;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        5,
        ordered && (gap - 19.8).abs() <= 10.0 && secs < 120.0,
        &format!("QCSM >= Baseline in every cell: {ordered}; n=50 {default_services}-service gap {gap:.1}%; {secs:.2}s"),
    );
}

#[test]
fn criterion_6_reward_by_learning_rate() {
    let start = Instant::now();
    let loaded = default_config();
    let result = run_reward_experiment(&loaded.config, &loaded.hash, &DEFAULT_SEEDS, &RewardOptions::default()).unwrap();
    let k = loaded.config.services.len();
    let n = loaded.config.num_sensors;
    let terminal = |lr: &str| result.row(&format!("QCSM(lr={lr})"), k, n, "terminal_cumulative_reward").unwrap().value;
    let (fast, mid, slow) = (terminal("0.7"), terminal("0.07"), terminal("0.007"));
    let best = mid > fast && mid > slow;
    let rising = result.traces.iter().filter(|t| t.exploration_mean() < t.converged_mean()).count();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        6,
        best && rising == result.traces.len() && secs < 600.0,
        &format!(
            "mean terminal reward lr=0.7 {fast:.1}, lr=0.07 {mid:.1}, lr=0.007 {slow:.1}; {rising}/{} traces improve after exploration; {secs:.2}s",
            result.traces.len()
        ),
    );
}

fn run_cli(out: &Path, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_qcsm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QCSM_OUT")
        .output()
        .unwrap();
    assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
}

fn csv_artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "ndjson")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_7_determinism() {
    let start = Instant::now();
    let commands: [&[&str]; 4] = [
        &["train", "--episodes", "3000", "--seed", "4"],
        &["experiment", "--figure", "response", "--seeds", "0,1"],
        &["experiment", "--figure", "reward", "--seeds", "0,1", "--episodes", "2000"],
        &["simulate", "--cycles", "300", "--mode", "baseline"],
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut differing = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let first = tmp.path().join(format!("{i}a"));
        let second = tmp.path().join(format!("{i}b"));
        run_cli(&first, args);
        run_cli(&second, args);
        let (a, b) = (csv_artifacts(&first), csv_artifacts(&second));
        assert!(!a.is_empty(), "{args:?} wrote no artifacts");
        compared += a.len();
        if a != b {
            differing.push(args[0]);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        7,
        differing.is_empty(),
        &format!("{compared} artifacts from 4 commands compared across reruns, differing: {differing:?}; {secs:.2}s"),
    );
}
