mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use common::{app, call, document, worked};
use sbfl_core::formula::{Builtin, Formula};
use sbfl_core::ingest::parse_canonical;
use sbfl_core::interactive::CallGraph;
use sbfl_core::ranking::{rank, TieBreak};
use sbfl_core::spectrum::{ElementId, ElementKind};
use sbfl_core::synth::{self, TreeShape};

fn order(ranking: &Value) -> Vec<u64> {
    ranking["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["element"].as_u64().unwrap())
        .collect()
}

#[tokio::test]
async fn fresh_ranking_matches_engine() {
    let app = app(1);
    let id = app.create(worked(), "OCHIAI", None).await;
    let (status, body) = app.json("GET", &format!("/sessions/{id}/ranking"), None).await;
    assert_eq!(status, StatusCode::OK);

    let spectrum = parse_canonical(common::WORKED).unwrap().spectrum;
    let engine = rank(
        &spectrum,
        &Formula::Builtin(Builtin::Ochiai),
        ElementKind::Statement,
        TieBreak::LineAsc,
    )
    .unwrap();
    let entries = body["entries"].as_array().unwrap();
    assert_eq!(entries.len(), engine.entries.len());
    for (wire, entry) in entries.iter().zip(&engine.entries) {
        assert_eq!(wire["element"].as_u64().unwrap(), entry.element.0);
        assert_eq!(wire["score"].as_f64().unwrap(), entry.score);
        assert_eq!(wire["rank"].as_f64().unwrap(), entry.rank);
        assert_eq!(wire["multiplier"].as_f64().unwrap(), 1.0);
    }
    assert_eq!(entries[0]["name"], "s1");
    assert_eq!(
        entries[0]["location"],
        json!({"path": "a.c", "start_line": 1, "end_line": 1})
    );
    assert_eq!(entries[0]["metrics"], json!({"ef": 1, "ep": 1, "nf": 0, "np": 1}));
    // 1/sqrt(2) on the green-to-red scale
    assert_eq!(entries[0]["color"], json!([156, 59, 0]));
    assert_eq!(entries[2]["color"], json!([0, 200, 0]));
    assert_eq!(body["formula"], "OCHIAI");
    assert_eq!(body["granularity"], "STATEMENT");
    assert_eq!(body["total"], 3);

    let (_, limited) = app.json("GET", &format!("/sessions/{id}/ranking?limit=1"), None).await;
    assert_eq!(limited["entries"].as_array().unwrap().len(), 1);
    assert_eq!(limited["total"], 3);
    let (status, _) = app.call("GET", &format!("/sessions/{id}/ranking?limit=x"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn rejected_creations_leave_nothing_behind() {
    let app = app(1);
    let (status, body) = app
        .json(
            "POST",
            "/sessions",
            Some(&json!({ "spectrum": worked(), "formula": "ef + " })),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "ParseError");
    assert_eq!(body["offset"], 6);

    let mut broken = worked();
    broken.as_object_mut().unwrap().remove("tests");
    let (status, body) = app
        .json(
            "POST",
            "/sessions",
            Some(&json!({ "spectrum": broken, "formula": "OCHIAI" })),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "SchemaError");
    assert!(body["message"].as_str().unwrap().contains("tests"));

    let (status, body) = app
        .json(
            "POST",
            "/sessions",
            Some(&json!({ "spectrum": worked(), "formula": "OCHIAI", "granularity": "METHOD" })),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "NoSuchGranularity");

    let (status, body) = app
        .json(
            "POST",
            "/sessions",
            Some(&json!({ "spectrum": worked(), "formula": "OCHIAI", "tiebreak": "COIN" })),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "InvalidTieBreak");

    let (status, bytes) = call(&app.router, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{}", String::from_utf8_lossy(&bytes));

    assert_eq!(std::fs::read_dir(app.dir.path()).unwrap().count(), 0);
}

#[tokio::test]
async fn ids_are_distinct_and_seeded() {
    let a = app(7);
    let first = a.create(worked(), "OCHIAI", None).await;
    let second = a.create(worked(), "OCHIAI", None).await;
    assert_ne!(first, second);

    let b = app(7);
    assert_eq!(b.create(worked(), "OCHIAI", None).await, first);
    let c = app(8);
    assert_ne!(c.create(worked(), "OCHIAI", None).await, first);
}

#[tokio::test]
async fn ids_already_on_disk_are_skipped() {
    let app = app(3);
    let first = app.create(worked(), "OCHIAI", None).await;
    // same seed, fresh counter, same directory
    let restarted = Arc::new(sbfl_service::SessionStore::open(app.dir.path(), 3).unwrap());
    let router = sbfl_service::router(restarted);
    let request = json!({ "spectrum": worked(), "formula": "OCHIAI" });
    let (_, bytes) = call(&router, "POST", "/sessions", Some(&request)).await;
    let body: Value = serde_json::from_slice(&bytes).unwrap();
    assert_ne!(body["session"].as_str().unwrap(), first);
}

#[tokio::test]
async fn unknown_sessions_are_404() {
    let app = app(1);
    for uri in [
        "/sessions/0123456789abcdef/ranking",
        "/sessions/../../etc/ranking",
        "/sessions/0123456789abcdef/export",
        "/sessions/0123456789abcdef/explanation/1",
        "/sessions/0123456789abcdef/hierarchy",
    ] {
        let (status, bytes) = app.call("GET", uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        if uri.contains("0123") {
            let body: Value = serde_json::from_slice(&bytes).unwrap();
            assert_eq!(body["error"], "UnknownSession");
        }
    }
    let (status, _) = app
        .call(
            "POST",
            "/sessions/0123456789abcdef/feedback",
            Some(&json!({"element": 1, "verdict": "NOT_FAULTY"})),
        )
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn feedback_undo_and_conclusion() {
    let app = app(1);
    let id = app.create(worked(), "OCHIAI", None).await;
    let feedback = |element: u64, verdict: &str| json!({ "element": element, "verdict": verdict });

    let (status, body) = app
        .json(
            "POST",
            &format!("/sessions/{id}/feedback"),
            Some(&feedback(1, "NOT_FAULTY")),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(order(&body), vec![2, 1, 3]);
    assert_eq!(body["entries"][1]["multiplier"], 0.0);
    assert_eq!(body["entries"][1]["score"], 0.0);
    assert_eq!(body["feedback_count"], 1);

    let (status, body) = app
        .json(
            "POST",
            &format!("/sessions/{id}/feedback"),
            Some(&feedback(3, "FAULT_FOUND")),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(order(&body)[0], 3);
    assert_eq!(body["concluded"], 3);

    let (status, body) = app
        .json(
            "POST",
            &format!("/sessions/{id}/feedback"),
            Some(&feedback(2, "SUSPICIOUS_CONTEXT")),
        )
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "SessionConcluded");

    let (status, body) = app.json("POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["concluded"], Value::Null);
    assert_eq!(order(&body), vec![2, 1, 3]);

    let (status, body) = app
        .json(
            "POST",
            &format!("/sessions/{id}/feedback"),
            Some(&feedback(9, "NOT_FAULTY")),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "UnknownElement");
    let (status, body) = app
        .json("POST", &format!("/sessions/{id}/feedback"), Some(&feedback(1, "MAYBE")))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "MalformedBody");

    app.call("POST", &format!("/sessions/{id}/undo"), None).await;
    let (status, body) = app.json("POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "EmptyLog");
}

#[tokio::test]
async fn explanation_agrees_with_ranking() {
    let app = app(1);
    let id = app.create(worked(), "OCHIAI", None).await;
    app.call(
        "POST",
        &format!("/sessions/{id}/feedback"),
        Some(&json!({"element": 3, "verdict": "SUSPICIOUS_CONTEXT"})),
    )
    .await;
    let (_, ranking) = app.json("GET", &format!("/sessions/{id}/ranking"), None).await;
    for entry in ranking["entries"].as_array().unwrap() {
        let element = entry["element"].as_u64().unwrap();
        let (status, e) = app
            .json("GET", &format!("/sessions/{id}/explanation/{element}"), None)
            .await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(e["ranked_score"], entry["score"]);
        assert_eq!(e["base_score"], entry["base_score"]);
        assert_eq!(e["score"], entry["base_score"]);
        assert_eq!(e["metrics"], entry["metrics"]);
    }
    let (_, e) = app.json("GET", &format!("/sessions/{id}/explanation/1"), None).await;
    assert_eq!(e["trace"], "1 / sqrt(1*(1+1))");
    assert_eq!(e["failing_tests"], json!([{"id": 1, "name": "t1"}]));
    assert_eq!(e["passing_count"], 1);

    let (status, body) = app.json("GET", &format!("/sessions/{id}/explanation/42"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "UnknownElement");
    let (status, _) = app.json("GET", &format!("/sessions/{id}/explanation/s1"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

fn layered_document(seed: u64) -> (Value, Vec<ElementId>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = TreeShape {
        classes: 3,
        max_methods: 4,
        max_statements: 4,
    };
    let spectrum = synth::layered(&mut rng, shape, 10, 0.35, 0.3);
    let methods: Vec<ElementId> = spectrum.elements_of_kind(ElementKind::Method).map(|e| e.id).collect();
    let graph = CallGraph::new(methods.windows(2).map(|w| (w[0], w[1])));
    (document(&spectrum, Some(&graph)), methods)
}

#[tokio::test]
async fn coarse_sessions_explain_through_the_top_descendant() {
    let app = app(1);
    let (doc, _) = layered_document(5);
    let id = app.create(doc.clone(), "OCHIAI", Some("METHOD")).await;
    let (_, ranking) = app.json("GET", &format!("/sessions/{id}/ranking"), None).await;
    assert_eq!(ranking["derivation"], json!({"from": "STATEMENT", "aggregator": "MAX"}));
    let spectrum = parse_canonical(&doc.to_string()).unwrap().spectrum;

    for entry in ranking["entries"].as_array().unwrap() {
        let element = entry["element"].as_u64().unwrap();
        let (_, e) = app
            .json("GET", &format!("/sessions/{id}/explanation/{element}"), None)
            .await;
        assert_eq!(e["score"], entry["score"], "{element}");
        match e["derived_from"]["element"].as_u64() {
            Some(child) => {
                let parent = spectrum.element(ElementId(child)).unwrap().parent;
                assert_eq!(parent, Some(ElementId(element)));
            }
            None => assert_eq!(entry["score"], 0.0),
        }
    }

    let (status, tree) = app.json("GET", &format!("/sessions/{id}/hierarchy"), None).await;
    assert_eq!(status, StatusCode::OK);
    let nodes = tree["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), spectrum.elements().len());
    for node in nodes.iter().filter(|n| n["kind"] == "CLASS") {
        let children: Vec<f64> = nodes
            .iter()
            .filter(|n| n["parent"] == node["element"])
            .map(|n| n["score"].as_f64().unwrap())
            .collect();
        let max = children.iter().copied().fold(0.0, f64::max);
        assert_eq!(node["score"].as_f64().unwrap(), max);
    }
}

#[tokio::test]
async fn export_import_round_trip() {
    let app = app(1);
    let (doc, methods) = layered_document(9);
    let id = app.create(doc, "TARANTULA", Some("METHOD")).await;
    for (i, &m) in methods.iter().enumerate().take(4) {
        let verdict = if i % 2 == 0 { "NOT_FAULTY" } else { "SUSPICIOUS_CONTEXT" };
        let (status, _) = app
            .call(
                "POST",
                &format!("/sessions/{id}/feedback"),
                Some(&json!({"element": m.0, "verdict": verdict})),
            )
            .await;
        assert_eq!(status, StatusCode::OK);
    }
    let (_, original) = app.call("GET", &format!("/sessions/{id}/ranking"), None).await;
    let (status, export) = app.json("GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(export["log"].as_array().unwrap().len(), 4);

    let elsewhere = common::app(2);
    let (status, created) = elsewhere.json("POST", "/sessions/import", Some(&export)).await;
    assert_eq!(status, StatusCode::CREATED, "{created}");
    let copy = created["session"].as_str().unwrap();
    let (_, replayed) = elsewhere.call("GET", &format!("/sessions/{copy}/ranking"), None).await;
    assert_eq!(original, replayed);

    let mut tampered = export.clone();
    tampered["log"].as_array_mut().unwrap().pop();
    let (status, body) = elsewhere.json("POST", "/sessions/import", Some(&tampered)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "InconsistentExport");

    let mut wrong = export;
    wrong["version"] = json!("sbfl-session-export/9");
    let (status, _) = elsewhere.json("POST", "/sessions/import", Some(&wrong)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn disk_state_replays_after_every_request() {
    let app = app(1);
    let (doc, methods) = layered_document(13);
    let id = app.create(doc.clone(), "OCHIAI", Some("METHOD")).await;
    let ranking_uri = format!("/sessions/{id}/ranking");
    let feedback_uri = format!("/sessions/{id}/feedback");

    let mut steps: Vec<(String, Option<Value>)> = vec![
        (
            feedback_uri.clone(),
            Some(json!({"element": methods[0].0, "verdict": "NOT_FAULTY"})),
        ),
        (
            feedback_uri.clone(),
            Some(json!({"element": methods[1].0, "verdict": "SUSPICIOUS_CONTEXT"})),
        ),
        (format!("/sessions/{id}/undo"), None),
    ];
    let (other, _) = layered_document(14);
    steps.push((format!("/sessions/{id}/reanalyze"), Some(json!({ "spectrum": other }))));
    steps.push((format!("/sessions/{id}/reanalyze"), Some(json!({ "spectrum": doc }))));

    for (uri, body) in steps {
        let (status, bytes) = app.call("POST", &uri, body.as_ref()).await;
        assert_eq!(status, StatusCode::OK, "{uri}: {}", String::from_utf8_lossy(&bytes));
        let (_, live) = app.call("GET", &ranking_uri, None).await;
        let (_, restored) = call(&app.reopened(), "GET", &ranking_uri, None).await;
        assert_eq!(live, restored, "after {uri}");
    }
    // old spectrum revisions are cleaned up
    let spectra = std::fs::read_dir(app.dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains(".spectrum."))
        .count();
    assert_eq!(spectra, 1);
}

#[tokio::test]
async fn reanalyze_reports_skipped_feedback() {
    let app = app(1);
    let id = app.create(worked(), "OCHIAI", None).await;
    app.call(
        "POST",
        &format!("/sessions/{id}/feedback"),
        Some(&json!({"element": 3, "verdict": "NOT_FAULTY"})),
    )
    .await;
    app.call(
        "POST",
        &format!("/sessions/{id}/feedback"),
        Some(&json!({"element": 1, "verdict": "NOT_FAULTY"})),
    )
    .await;

    let mut smaller = worked();
    smaller["elements"].as_array_mut().unwrap().pop();
    smaller["coverage"] = json!([[1, 1], [1, 2], [2, 2], [3, 1]]);
    let (status, body) = app
        .json(
            "POST",
            &format!("/sessions/{id}/reanalyze"),
            Some(&json!({ "spectrum": smaller })),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        body["skipped"],
        json!([{"sequence": 1, "element": 3, "verdict": "NOT_FAULTY"}])
    );
    assert_eq!(body["ranking"]["feedback_count"], 1);
    assert_eq!(order(&body["ranking"]), vec![2, 1]);

    let (status, body) = app
        .json(
            "POST",
            &format!("/sessions/{id}/reanalyze"),
            Some(&json!({ "spectrum": {"version": "x"} })),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "VersionMismatch");
}

#[tokio::test]
async fn identical_request_sequences_give_identical_bytes() {
    async fn script(seed: u64) -> Vec<Vec<u8>> {
        let app = app(seed);
        let request = json!({ "spectrum": worked(), "formula": "BARINEL", "tiebreak": "NAME_ASC" });
        let (_, created) = app.call("POST", "/sessions", Some(&request)).await;
        let id = serde_json::from_slice::<Value>(&created).unwrap()["session"]
            .as_str()
            .unwrap()
            .to_string();
        let mut out = vec![created];
        out.push(
            app.call(
                "POST",
                &format!("/sessions/{id}/feedback"),
                Some(&json!({"element": 2, "verdict": "SUSPICIOUS_CONTEXT"})),
            )
            .await
            .1,
        );
        out.push(app.call("GET", &format!("/sessions/{id}/explanation/2"), None).await.1);
        out.push(app.call("GET", &format!("/sessions/{id}/export"), None).await.1);
        out
    }
    assert_eq!(script(21).await, script(21).await);
}

#[tokio::test]
async fn formulas_catalog() {
    let app = app(1);
    let (status, body) = app.json("GET", "/formulas", None).await;
    assert_eq!(status, StatusCode::OK);
    let names: Vec<&str> = body
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, vec!["TARANTULA", "OCHIAI", "BARINEL"]);
}

#[tokio::test]
async fn serves_over_tcp() {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};

    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(sbfl_service::SessionStore::open(dir.path(), 0).unwrap());
    let (tx, rx) = tokio::sync::oneshot::channel();
    tokio::spawn(sbfl_service::serve(
        store,
        "127.0.0.1:0".parse().unwrap(),
        move |addr| {
            tx.send(addr).unwrap();
        },
    ));
    let addr = rx.await.unwrap();
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    stream
        .write_all(b"GET /formulas HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).await.unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("OCHIAI"));
}
