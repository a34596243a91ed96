mod common;

use common::*;
use markovscope::checkers::ClassLabel;
use markovscope::config::{MeasureKind, RunConfig};
use markovscope::io::{csv_row, write_csv, write_jsonl, StateFile, CSV_COLUMNS};
use markovscope::lab::{
    evaluate_deficits, recheck_violation, scan, search_min_deficit, state_id, EvalSettings, Measure, SampleConfig,
    SearchConfig, CONJ_CONSTANT,
};
use markovscope::parallel::with_threads;
use markovscope::{Error, TripartiteState};
use proptest::prelude::*;

fn cfg(measure: Measure, count: usize, seed: u64) -> SampleConfig {
    SampleConfig {
        dims: dims(2, 2, 2),
        measure,
        count,
        seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn state_file_round_trip(seed in any::<u64>(), a in 1usize..4, b in 1usize..3, c in 1usize..4, env in 1usize..5) {
        let s = hs_state(dims(a, b, c), env, seed);
        let text = StateFile::from_state(&s).to_json();
        let back = StateFile::parse(&text).unwrap().into_state().unwrap();
        prop_assert_eq!(back.rho(), s.rho());
        prop_assert_eq!(back.dims(), s.dims());
    }

    #[test]
    fn deficit_arithmetic(seed in any::<u64>(), env in 1usize..9) {
        let s = hs_state(dims(2, 2, 2), env, seed);
        let r = evaluate_deficits(&s, "x", &EvalSettings::default()).unwrap();
        let expected = r.cmi - CONJ_CONSTANT * r.dist_mm.max(r.dist_mdm).powi(2);
        prop_assert!((r.deficit_conj - expected).abs() < 1e-12);
        prop_assert!(r.arithmetic_residual() < 1e-12);
    }
}

#[test]
fn scan_is_thread_count_independent() {
    let settings = EvalSettings::default();
    for measure in [
        Measure::HsInduced { env_dim: 8 },
        Measure::ClassicalDirichlet,
        Measure::MarkovPerturbed { noise_scale: 1e-3 },
    ] {
        let c = cfg(measure, 64, 21);
        let one = with_threads(Some(1), || scan(&c, &settings)).unwrap().unwrap();
        let many = with_threads(Some(4), || scan(&c, &settings)).unwrap().unwrap();
        assert_eq!(one.records, many.records);
        assert_eq!(one.summary, many.summary);
        assert_eq!(one.records[5].state_id, state_id(&measure, 21, 5));
    }
}

#[test]
fn scan_outputs_are_stable() {
    let c = cfg(Measure::ClassicalDirichlet, 10, 3);
    let out = scan(&c, &EvalSettings::default()).unwrap();
    let mut csv = Vec::new();
    write_csv(&mut csv, &out.records).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(lines.next().unwrap(), csv_row(&out.records[0]));
    assert_eq!(csv.lines().count(), 11);

    let mut jsonl = Vec::new();
    write_jsonl(&mut jsonl, &serde_json::json!({"format_version": 1}), &out.records).unwrap();
    let text = String::from_utf8(jsonl).unwrap();
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[1]["state_id"], "classical_dirichlet-3-0");
    assert_eq!(out.summary.class_histogram.get(&ClassLabel::D2).copied().unwrap_or(0)
        + out.summary.class_histogram.get(&ClassLabel::D1).copied().unwrap_or(0), 10);
}

#[test]
fn search_is_deterministic_and_thread_independent() {
    let settings = EvalSettings::default();
    let sc = SearchConfig::new(dims(2, 2, 2), 300, 3, 8);
    let a = with_threads(Some(1), || search_min_deficit(&sc, &settings)).unwrap().unwrap();
    let b = with_threads(Some(3), || search_min_deficit(&sc, &settings)).unwrap().unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.trail, b.trail);
    assert_eq!(a.best_state.rho(), b.best_state.rho());
    assert!(a.evaluations <= 300);
    assert!(a.best.deficit_conj >= -1e-6);
}

#[test]
fn search_improves_on_its_starting_states() {
    let settings = EvalSettings::default();
    let sc = SearchConfig::new(dims(2, 2, 2), 2000, 4, 2);
    let out = search_min_deficit(&sc, &settings).unwrap();
    let start = scan(&sc.seed_scan(), &settings).unwrap().summary.min_deficit_conj;
    assert!(out.best.deficit_conj < start);
}

#[test]
fn recheck_ignores_healthy_records() {
    let s = hs_state(dims(2, 2, 2), 8, 4);
    let settings = EvalSettings::default();
    let r = evaluate_deficits(&s, "x", &settings).unwrap();
    assert!(recheck_violation(&s, &r, &settings).unwrap().is_none());
    // forged record below threshold: the fresh evaluation clears it
    let mut forged = r.clone();
    forged.deficit_conj = -1.0;
    assert!(recheck_violation(&s, &forged, &settings).unwrap().is_none());
}

#[test]
fn config_round_trips_and_reports_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let c = RunConfig {
        measure: MeasureKind::MarkovPerturbed,
        count: 17,
        ..RunConfig::default()
    };
    let toml_path = dir.join("run.toml");
    std::fs::write(&toml_path, c.to_toml().unwrap()).unwrap();
    assert_eq!(RunConfig::load(&toml_path).unwrap(), c);

    let json_path = dir.join("run.json");
    std::fs::write(&json_path, serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(RunConfig::load(&json_path).unwrap(), c);

    std::fs::write(&toml_path, "seed = 3\ncount = \"many\"\n").unwrap();
    match RunConfig::load(&toml_path) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected parse error, got {other:?}"),
    }
    std::fs::write(&toml_path, "count = 0\n").unwrap();
    assert!(matches!(RunConfig::load(&toml_path), Err(Error::Config(_))));
    std::fs::write(&toml_path, "colour = 1\n").unwrap();
    assert!(matches!(RunConfig::load(&toml_path), Err(Error::Parse { .. })));
}

#[test]
fn state_file_errors_carry_positions() {
    match StateFile::parse("{\n  \"dims\": [2, 1, 1],\n  \"matrix\": [[[1, 0]], oops]\n}") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let not_psd = "{\"dims\":[2,1,1],\"matrix\":[[[0.5,0],[0.6,0]],[[0.6,0],[0.5,0]]]}";
    let parsed = StateFile::parse(not_psd).unwrap();
    assert!(matches!(parsed.into_state(), Err(Error::InvalidState(_))));
}

#[test]
fn markov_perturbed_zero_noise_is_exact() {
    let c = cfg(Measure::MarkovPerturbed { noise_scale: 0.0 }, 20, 5);
    let out = scan(&c, &EvalSettings::default()).unwrap();
    for r in &out.records {
        assert!(r.cmi < 1e-9 && r.dist_mm < 1e-7 && r.comm_norm < 1e-8);
    }
}

#[test]
fn pure_states_are_valid_samples() {
    let s: TripartiteState = hs_state(dims(2, 2, 2), 1, 6);
    let r = evaluate_deficits(&s, "pure", &EvalSettings::default()).unwrap();
    assert!(r.deficit_conj >= -1e-6 && r.deficit_comm >= -1e-6);
}
