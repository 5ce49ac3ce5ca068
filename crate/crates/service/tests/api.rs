use std::path::PathBuf;
use std::sync::Arc;

use accepted::dataset::{BuildConfig, FeatureMatrix};
use accepted::history::snapshot;
use accepted::ingest::{format_dump_timestamp, split_tags};
use accepted::model::{train, Dataset, GbdtEnsemble, GbdtParams};
use accepted::pipeline::{DumpFiles, LoadedDump};
use accepted::tag_metrics::DEFAULT_ALPHA;
use accepted_service::{router, AppState};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use chrono::{DateTime, TimeZone, Utc};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    dump: LoadedDump,
    matrix: FeatureMatrix,
    model: GbdtEnsemble<f64>,
}

fn fixture() -> Fixture {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/e2e");
    let dump = LoadedDump::load(&DumpFiles::in_dir(&dir), DEFAULT_ALPHA).unwrap();
    let matrix = dump.matrix(&BuildConfig::default()).unwrap();
    let params = GbdtParams { num_rounds: 10, gamma: 0.5, ..GbdtParams::default() };
    let model = train(&Dataset::from_matrix(&matrix), &params).unwrap();
    Fixture { dump, matrix, model }
}

fn fixed_clock() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2011, 5, 5, 10, 0, 0).unwrap()
}

fn app(f: &Fixture) -> axum::Router {
    let mut state = AppState::new(Some(f.model.clone()), Some(f.dump.tag_stats.clone()));
    state.clock = fixed_clock;
    router(Arc::new(state))
}

async fn call(app: &axum::Router, request: Request<Body>) -> (StatusCode, Value) {
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn post_json(body: &Value) -> Request<Body> {
    Request::post("/v1/predict")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

/// A draft reproducing a dataset row's source question.
fn draft_for(f: &Fixture, question_id: u64) -> Value {
    let post = f.dump.posts.iter().find(|p| p.id == question_id && p.is_question()).unwrap();
    let (asker, _) = snapshot(post.owner_user_id, post.creation_date, &f.dump.askers.timelines, &f.dump.askers.users);
    json!({
        "title": post.title.clone().unwrap_or_default(),
        "body_html": post.body_html,
        "tags": split_tags(post.tags_raw.as_deref().unwrap()).unwrap(),
        "asked_at": format_dump_timestamp(&post.creation_date),
        "asker": serde_json::to_value(asker).unwrap(),
    })
}

#[tokio::test]
async fn predictions_match_offline_model() {
    let f = fixture();
    let app = app(&f);
    let mut ids: Vec<u64> = f.matrix.rows.iter().map(|r| r.question_id).step_by(11).take(22).collect();
    ids.extend([5001, 5002, 5003]);
    assert_eq!(ids.len(), 25);
    for id in ids {
        let row = f.matrix.row(id).unwrap();
        let (status, body) = call(&app, post_json(&draft_for(&f, id))).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        let offline = f.model.probability(&row.features).unwrap();
        let served = body["probability"].as_f64().unwrap();
        assert!((served - offline).abs() <= 1e-9, "question {id}: {served} vs {offline}");
        let features = body["features"].as_object().unwrap();
        assert_eq!(features.len(), 52);
        for (name, value) in f.matrix.names.iter().zip(&row.features) {
            assert_eq!(features[name].as_f64().unwrap(), *value, "question {id}, {name}");
        }
        assert_eq!(body["model_version"], f.model.model_version);
        assert!(body["top_factors"].as_array().unwrap().len() <= 10);
    }
}

#[tokio::test]
async fn tag_only_changes_touch_only_tag_features() {
    let f = fixture();
    let app = app(&f);
    let mut a = draft_for(&f, 5001);
    let (_, first) = call(&app, post_json(&a)).await;
    a["tags"] = json!(["java", "sql"]);
    let (status, second) = call(&app, post_json(&a)).await;
    assert_eq!(status, StatusCode::OK);
    let tag_features = ["tag_count", "max_tag_quality", "avg_tag_quality", "max_expert_ratio", "min_tag_quality", "max_problem_rate"];
    for (name, value) in first["features"].as_object().unwrap() {
        if !tag_features.contains(&name.as_str()) {
            assert_eq!(&second["features"][name], value, "{name}");
        }
    }
    assert_ne!(first["features"]["max_tag_quality"], second["features"]["max_tag_quality"]);
}

#[tokio::test]
async fn defaults_apply_when_optional_fields_are_missing() {
    let f = fixture();
    let app = app(&f);
    let (status, body) = call(&app, post_json(&json!({"title": "How?", "body_html": "<p>x</p>", "tags": ["python"]}))).await;
    assert_eq!(status, StatusCode::OK);
    // Thursday 10:00 from the fixed clock; new-user snapshot.
    assert_eq!(body["features"]["asking_day_of_week"], 3.0);
    assert_eq!(body["features"]["asking_hour"], 10.0);
    assert_eq!(body["features"]["membership_duration_days"], 0.0);
    let p = body["probability"].as_f64().unwrap();
    assert!(p > 0.0 && p < 1.0);
}

#[tokio::test]
async fn malformed_drafts_are_rejected_with_field_names() {
    let f = fixture();
    let app = app(&f);
    let good = json!({"title": "t", "body_html": "", "tags": ["python"]});
    let cases: Vec<(Value, &str)> = vec![
        (json!({"title": "", "body_html": "", "tags": ["python"]}), "title"),
        (json!({"body_html": "", "tags": ["python"]}), "title"),
        (json!({"title": "t", "body_html": "", "tags": []}), "tags"),
        (json!({"title": "t", "body_html": "", "tags": ["a", "b", "c", "d", "e", "f"]}), "tags"),
        (json!({"title": "t", "body_html": "", "tags": "python"}), "tags"),
        (json!({"title": "t", "body_html": "", "tags": ["python"], "asked_at": "soon"}), "asked_at"),
        (json!({"title": "t", "body_html": "", "tags": ["python"], "asked_at": 5}), "asked_at"),
        (json!({"title": "t", "tags": ["python"]}), "body_html"),
        (json!({"title": "t", "body_html": "", "tags": ["python"], "extra": 1}), "extra"),
        (json!({"title": "t", "body_html": "", "tags": ["python"], "asker": {"prior_answers": -3}}), "asker.prior_answers"),
        (json!({"title": "t", "body_html": "", "tags": ["python"], "asker": 7}), "asker"),
        (json!("just a string"), "body"),
    ];
    for (draft, field) in cases {
        let (status, body) = call(&app, post_json(&draft)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{draft}");
        let named: Vec<&str> = body["fields"].as_array().unwrap().iter().map(|e| e["field"].as_str().unwrap()).collect();
        assert!(named.contains(&field), "{draft}: {named:?}");
    }
    let raw = Request::post("/v1/predict").body(Body::from("{not json")).unwrap();
    let (status, body) = call(&app, raw).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["fields"][0]["field"], "body");
    assert_eq!(call(&app, post_json(&good)).await.0, StatusCode::OK);
}

#[tokio::test]
async fn tag_metrics_endpoint() {
    let f = fixture();
    let app = app(&f);
    let (status, body) = call(&app, get("/v1/tags/metrics?name=Python")).await;
    assert_eq!(status, StatusCode::OK);
    let stats = &f.dump.tag_stats["python"];
    assert_eq!(body["known"], true);
    assert_eq!(body["followers"], 4200);
    assert_eq!(body["tag_quality"].as_f64(), stats.tag_quality);
    assert_eq!(body["problem_rate"].as_f64().unwrap(), stats.problem_rate);

    let (status, body) = call(&app, get("/v1/tags/metrics?name=nosuchtag")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["known"], false);
    assert_eq!(body["popularity"], 0.0);

    assert_eq!(call(&app, get("/v1/tags/metrics?name=")).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, get("/v1/tags/metrics")).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn health_reports_model_version() {
    let f = fixture();
    let (status, body) = call(&app(&f), get("/v1/health")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["model_version"], f.model.model_version);

    let empty = router(Arc::new(AppState::new(None, Some(f.dump.tag_stats.clone()))));
    assert_eq!(call(&empty, get("/v1/health")).await.0, StatusCode::SERVICE_UNAVAILABLE);
    let draft = json!({"title": "t", "body_html": "", "tags": ["python"]});
    assert_eq!(call(&empty, post_json(&draft)).await.0, StatusCode::SERVICE_UNAVAILABLE);
}
