use std::path::PathBuf;

use proptest::prelude::*;
use serde_json::{json, Value};

use qsim_cli::experiments::{hom_graph, HomParams};
use qsim_cli::graph::{load_experiment, ExperimentGraph, LoadError};
use qsim_core::des::SimTime;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/hom.json")
}

#[test]
fn hom_fixture_shape() {
    let g = load_experiment(&fixture()).unwrap();
    assert_eq!(g.devices.len(), 5);
    assert_eq!(g.connections.len(), 4);
    let types: Vec<&str> = g.devices.iter().map(|d| d.type_name.as_str()).collect();
    assert_eq!(types.iter().filter(|t| **t == "single_photon_source").count(), 2);
    assert_eq!(types.iter().filter(|t| **t == "photon_detector").count(), 2);
    assert!(types.contains(&"beam_splitter"));
}

#[test]
fn hom_fixture_matches_the_built_in_template() {
    let mut g = load_experiment(&fixture()).unwrap();
    assert!(g.ui.is_some());
    g.ui = None;
    assert_eq!(g, hom_graph(0.0, &HomParams::default()));
}

#[test]
fn missing_file_names_the_path() {
    let err = load_experiment(&PathBuf::from("/nonexistent/graph.json")).unwrap_err();
    assert!(matches!(err, LoadError::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/graph.json"));
}

#[test]
fn bad_file_reports_every_issue() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut g = hom_graph(0.0, &HomParams::default());
    g.connections[0].to.port = "in9".into();
    g.connections[3].to.device = "ghost".into();
    std::fs::write(&path, g.to_json_pretty()).unwrap();
    let issues = load_experiment(&path).unwrap_err().issues();
    let pointers: Vec<&str> = issues.iter().map(|i| i.pointer.as_str()).collect();
    assert_eq!(pointers, ["/connections/0/to", "/connections/3/to"]);
    assert!(issues[0].error.contains("in9") && issues[1].error.contains("ghost"));
}

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e3f64..1e3]
}

fn decimal() -> impl Strategy<Value = SimTime> {
    (0i64..i64::MAX, -40i32..5).prop_map(|(m, e)| SimTime::new(m as i128, e))
}

fn layout() -> impl Strategy<Value = Option<Value>> {
    proptest::option::of((number(), number(), "[a-z ]{0,8}").prop_map(|(x, y, s)| json!({ "x": x, "y": y, "label": s })))
}

/// Chains of sources, gates and fibers ending in a detector.
fn graph() -> impl Strategy<Value = ExperimentGraph> {
    let chain = (1e-15f64..1e-9, number(), number(), decimal(), prop::bool::ANY, layout());
    (proptest::collection::vec(chain, 0..5), decimal(), any::<u64>(), proptest::option::of(2usize..12), layout()).prop_map(
        |(chains, until, seed, cutoff, ui)| {
            let mut g = ExperimentGraph::new();
            for (i, (sigma, delay, phi, length, coherent, dev_ui)) in chains.into_iter().enumerate() {
                let source = if coherent {
                    ("coherent_source", json!({ "alpha": { "re": phi, "im": delay }, "sigma": sigma }))
                } else {
                    ("single_photon_source", json!({ "sigma": sigma, "delay": delay, "emit_time": length }))
                };
                g = g
                    .device(&format!("s{i}"), source.0, source.1)
                    .device(&format!("g{i}"), "phase_shifter", json!({ "phi": phi }))
                    .device(&format!("f{i}"), "ideal_fiber", json!({ "length": length, "refractive_index": 1.0 + sigma * 1e9 }))
                    .device(&format!("d{i}"), "photon_detector", json!({ "mode": if coherent { "sample" } else { "distribution" } }))
                    .connect(&format!("s{i}.out"), &format!("g{i}.in"))
                    .connect(&format!("g{i}.out"), &format!("f{i}.in"))
                    .connect(&format!("f{i}.out"), &format!("d{i}.in"));
                g.devices[4 * i].ui = dev_ui;
            }
            g.sim.until = until;
            g.sim.seed = seed;
            g.sim.cutoff = cutoff;
            g.ui = ui;
            g
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn export_then_load_is_identity(g in graph()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.json");
        std::fs::write(&path, g.to_json_pretty()).unwrap();
        let back = load_experiment(&path);
        prop_assert!(back.is_ok(), "{}", back.unwrap_err());
        prop_assert_eq!(back.unwrap(), g);
    }
}
