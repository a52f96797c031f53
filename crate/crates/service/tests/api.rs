use std::sync::Arc;

use arcforge_core::pipeline::{BackendError, TemplateBackend, TextGenBackend};
use arcforge_service::{
    api, BackendChoice, BackendFactory, ProjectService, ProjectStore, RemoteSettings,
};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct App {
    router: Router,
    _dir: tempfile::TempDir,
}

fn app_with(factory: Option<BackendFactory>) -> App {
    let dir = tempfile::tempdir().unwrap();
    let store = ProjectStore::open(dir.path()).unwrap();
    let svc = match factory {
        Some(f) => ProjectService::with_backends(store, f),
        None => ProjectService::new(store, RemoteSettings::default()),
    };
    App {
        router: api::router(Arc::new(svc)),
        _dir: dir,
    }
}

fn app() -> App {
    app_with(None)
}

impl App {
    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let resp = self
            .router
            .clone()
            .oneshot(req.body(body).unwrap())
            .await
            .unwrap();
        let status = resp.status();
        let bytes = resp
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        (status, bytes)
    }

    async fn json(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (s, b) = self.call(method, uri, body).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    async fn create(&self, arc: &str, nodes: usize) -> Value {
        let (s, p) = self
            .json(
                "POST",
                "/projects",
                Some(json!({
                    "prompt": "A young smith must recover a stolen hammer",
                    "arc": arc,
                    "node_budget": nodes,
                    "backend": {"kind": "template", "seed": 5}
                })),
            )
            .await;
        assert_eq!(s, StatusCode::CREATED, "{p}");
        p
    }
}

#[tokio::test]
async fn create_and_fetch() {
    let app = app();
    let p = app.create("cinderella", 7).await;
    assert_eq!(p["revision"], 1);
    let id = p["id"].as_str().unwrap();
    let (s, got) = app.json("GET", &format!("/projects/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(got, p);
    assert!(!got["prompt_log"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn long_prompts_are_rejected() {
    let app = app();
    let prompt = vec!["word"; 31].join(" ");
    let (s, e) = app
        .json(
            "POST",
            "/projects",
            Some(json!({"prompt": prompt, "arc": "icarus", "node_budget": 5})),
        )
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(e["code"], "PROMPT_TOO_LONG");
    assert_eq!(e["details"]["words"], 31);
}

#[tokio::test]
async fn baseline_projects_are_unlabeled() {
    let app = app();
    let p = app.create("none", 5).await;
    let nodes = p["graph"]["nodes"].as_array().unwrap();
    assert!(nodes.iter().all(|n| n["label"].is_null()));
}

#[tokio::test]
async fn malformed_bodies_and_unknown_ids() {
    let app = app();
    let (s, e) = app
        .json("POST", "/projects", Some(json!({"arc": "icarus"})))
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(e["code"], "INVALID_REQUEST");
    let (s, e) = app.json("GET", "/projects/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(e["code"], "NOT_FOUND");
    let (s, _) = app.json("GET", "/projects/..%2Fetc", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn edits_use_optimistic_revisions() {
    let app = app();
    let p = app.create("icarus", 6).await;
    let id = p["id"].as_str().unwrap();
    let uri = format!("/projects/{id}/edits");
    let root = p["graph"]["root"].as_u64().unwrap();

    let relabel =
        json!({"edit": {"op": "relabel", "idx": root, "label": "Rise"}, "expected_revision": 1});
    let (s, p2) = app.json("POST", &uri, Some(relabel.clone())).await;
    assert_eq!(s, StatusCode::OK, "{p2}");
    assert_eq!(p2["revision"], 2);

    let (s, e) = app.json("POST", &uri, Some(relabel)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(e["code"], "CONFLICT");
    assert_eq!(e["details"]["current_revision"], 2);

    let ending = p["graph"]["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["idx"].as_u64().unwrap())
        .find(|i| {
            !p["graph"]["edges"]
                .as_array()
                .unwrap()
                .iter()
                .any(|e| e["from"] == *i)
        })
        .unwrap();
    let cycle = json!({
        "edit": {"op": "add_edge", "from": ending, "to": root, "criteria": "talk to the ferryman"},
        "expected_revision": 2
    });
    let (s, e) = app.json("POST", &uri, Some(cycle)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(e["code"], "EDIT_REJECTED");
    assert_eq!(e["details"]["reason"], "CYCLE");
    let (_, after) = app.json("GET", &format!("/projects/{id}"), None).await;
    assert_eq!(after, p2);
}

#[tokio::test]
async fn finalize_export_and_refinalize() {
    let app = app();
    let p = app.create("cinderella", 7).await;
    let id = p["id"].as_str().unwrap();

    let (s, e) = app
        .json("GET", &format!("/projects/{id}/export"), None)
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(e["code"], "NOT_FINALIZED");

    let (s, f) = app
        .json("POST", &format!("/projects/{id}/finalize"), None)
        .await;
    assert_eq!(s, StatusCode::OK, "{f}");
    assert_eq!(f["spec"]["levelList"].as_array().unwrap().len(), 7);
    assert_eq!(f["report"]["ok"], true);
    let (s, first) = app
        .call("GET", &format!("/projects/{id}/export"), None)
        .await;
    assert_eq!(s, StatusCode::OK);

    let (_, f2) = app
        .json("POST", &format!("/projects/{id}/finalize"), None)
        .await;
    assert_eq!(f2["revision"], 3);
    let (_, second) = app
        .call("GET", &format!("/projects/{id}/export"), None)
        .await;
    assert_eq!(first, second);
}

#[tokio::test]
async fn finalize_is_blocked_by_arc_violations() {
    let app = app();
    let p = app.create("cinderella", 7).await;
    let id = p["id"].as_str().unwrap();
    let root = p["graph"]["root"].as_u64().unwrap();
    let edit =
        json!({"edit": {"op": "relabel", "idx": root, "label": "Fall"}, "expected_revision": 1});
    let (s, _) = app
        .json("POST", &format!("/projects/{id}/edits"), Some(edit))
        .await;
    assert_eq!(s, StatusCode::OK);
    let (s, e) = app
        .json("POST", &format!("/projects/{id}/finalize"), None)
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(e["code"], "FINALIZE_BLOCKED");
    let codes: Vec<&str> = e["details"]["report"]["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["code"].as_str().unwrap())
        .collect();
    assert!(codes.contains(&"ARC_MISMATCH"), "{codes:?}");
}

#[tokio::test]
async fn analysis_runs_and_is_kept() {
    let app = app();
    let p = app.create("man_in_a_hole", 7).await;
    let id = p["id"].as_str().unwrap();
    let (s, e) = app
        .json("GET", &format!("/projects/{id}/analysis/latest"), None)
        .await;
    assert_eq!(s, StatusCode::NOT_FOUND, "{e}");

    let (s, r) = app
        .json(
            "POST",
            &format!("/projects/{id}/analysis"),
            Some(json!({"runs": 10})),
        )
        .await;
    assert_eq!(s, StatusCode::OK, "{r}");
    let arc = &r["arcs"][0];
    assert_eq!(arc["stories"].as_array().unwrap().len(), 10);
    assert_eq!(arc["mean"].as_array().unwrap().len(), 7);
    assert_eq!(arc["shape"]["matched"], true);
    let (_, latest) = app
        .json("GET", &format!("/projects/{id}/analysis/latest"), None)
        .await;
    assert_eq!(latest, r);
}

struct Down;

impl TextGenBackend for Down {
    fn name(&self) -> &str {
        "down"
    }
    fn complete(
        &self,
        _: &str,
        _: &str,
        _: arcforge_core::pipeline::SchemaId,
    ) -> Result<String, BackendError> {
        Err(BackendError::new("down", "connection refused"))
    }
}

#[tokio::test]
async fn backend_outages_map_to_bad_gateway() {
    let factory: BackendFactory = Arc::new(|choice| match choice {
        BackendChoice::Template { seed } => {
            Ok(Box::new(TemplateBackend::new(seed)) as Box<dyn TextGenBackend>)
        }
        BackendChoice::Remote => Ok(Box::new(Down)),
    });
    let app = app_with(Some(factory));
    let (s, e) = app
        .json(
            "POST",
            "/projects",
            Some(json!({"prompt": "a quiet harbor", "arc": "tragedy", "node_budget": 4, "backend": {"kind": "remote"}})),
        )
        .await;
    assert_eq!(s, StatusCode::BAD_GATEWAY);
    assert_eq!(e["code"], "BACKEND_FAILURE");
    assert_eq!(e["details"]["stage"], "story_skeleton");
}
