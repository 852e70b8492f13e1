use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use qsim_cli::experiments::{hom_graph, HomParams};
use qsim_cli::graph::validate_text;
use qsim_cli::serve::{router, ServeConfig};

fn app() -> Router {
    router(ServeConfig { default_cutoff: 4, workers: 2 })
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).expect("every response is JSON"))
}

fn fixture() -> String {
    std::fs::read_to_string(std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/hom.json")).unwrap()
}

async fn wait_done(app: &Router, id: &str) -> Value {
    for _ in 0..500 {
        let (status, body) = call(app, "GET", &format!("/runs/{id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        match body["status"].as_str().unwrap() {
            "done" | "error" => return body,
            "queued" | "running" => tokio::time::sleep(Duration::from_millis(20)).await,
            other => panic!("unexpected status {other}"),
        }
    }
    panic!("run {id} did not finish");
}

#[tokio::test]
async fn catalog_lists_fiber_length_in_meters() {
    let (status, body) = call(&app(), "GET", "/devices", None).await;
    assert_eq!(status, StatusCode::OK);
    let fiber = body["devices"].as_array().unwrap().iter().find(|d| d["type"] == "ideal_fiber").unwrap();
    let length = fiber["parameters"].as_array().unwrap().iter().find(|p| p["name"] == "length").unwrap();
    assert_eq!(length["unit"], "m");
    let kinds = body["signal_kinds"].as_array().unwrap();
    assert!(kinds.iter().any(|k| k["name"] == "PhotonicQuantumSignal" && k["parent"] == "GenericQuantumSignal"));
}

#[tokio::test]
async fn hom_run_lifecycle() {
    let app = app();
    let (status, body) = call(&app, "POST", "/experiments", Some(fixture())).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let id = body["run_id"].as_str().unwrap().to_string();
    let done = wait_done(&app, &id).await;
    assert_eq!(done["status"], "done", "{done}");

    let (status, rs) = call(&app, "GET", &format!("/runs/{id}/results"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(rs["run_id"], id.as_str());
    let table = &rs["tables"]["coincidence"];
    assert_eq!(table["columns"], json!(["beam_splitter", "time", "lambda", "p_coincidence"]));
    assert!(table["rows"][0][3].as_f64().unwrap() < 1e-9);
    assert!(!rs["traces"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn many_runs_share_the_pool() {
    let app = app();
    let mut ids = Vec::new();
    for d in 0..6 {
        let graph = hom_graph(d as f64 * 1e-12, &HomParams::default());
        let (status, body) = call(&app, "POST", "/experiments", Some(graph.to_json_pretty())).await;
        assert_eq!(status, StatusCode::ACCEPTED);
        ids.push(body["run_id"].as_str().unwrap().to_string());
    }
    let unique: std::collections::HashSet<_> = ids.iter().collect();
    assert_eq!(unique.len(), ids.len());
    for id in &ids {
        assert_eq!(wait_done(&app, id).await["status"], "done");
    }
}

#[tokio::test]
async fn incompatible_connection_is_rejected_with_both_kinds() {
    let mut graph: Value = serde_json::from_str(&fixture()).unwrap();
    graph["connections"][2] = json!({ "from": "detector_1.out", "to": "detector_2.in" });
    graph["connections"][3] = json!({ "from": "bs.out2", "to": "detector_1.in" });
    let (status, body) = call(&app(), "POST", "/experiments", Some(graph.to_string())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["pointer"], "/connections/2");
    let error = body["error"].as_str().unwrap();
    assert!(error.contains("DetectionSignal") && error.contains("GenericQuantumSignal"), "{error}");
}

#[tokio::test]
async fn malformed_body_is_a_400_with_pointer() {
    let (status, body) = call(&app(), "POST", "/experiments", Some("{\"schema\":".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["pointer"], "");
    assert!(body["error"].as_str().unwrap().contains("invalid JSON"));
}

#[tokio::test]
async fn unknown_runs_and_routes_are_404() {
    let app = app();
    let (status, body) = call(&app, "GET", "/runs/run-999", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].is_string() && body["pointer"].is_string());
    let (status, _) = call(&app, "GET", "/runs/run-999/results", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", "/nowhere", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn validate_endpoint_matches_library_validation() {
    let app = app();
    let mut bad: Value = serde_json::from_str(&fixture()).unwrap();
    bad["devices"][2]["parameters"] = json!({ "theta": "wide" });
    bad["connections"][0]["to"] = json!("bs.in7");
    let docs = [fixture(), bad.to_string(), "[]".to_string(), json!({ "schema": "qsim_graph_v1" }).to_string()];
    for doc in docs {
        let (status, body) = call(&app, "POST", "/validate", Some(doc.clone())).await;
        assert_eq!(status, StatusCode::OK);
        let expected = serde_json::to_value(validate_text(&doc)).unwrap();
        assert_eq!(body["errors"], expected);
        assert_eq!(body["valid"], expected.as_array().unwrap().is_empty());
    }
}
