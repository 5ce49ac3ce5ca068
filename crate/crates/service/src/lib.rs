//! HTTP JSON API for what-if predictions on question drafts.
//!
//! Routes, all under `/v1`:
//! - `POST /v1/predict`: a draft in, probability plus features and top factors out
//! - `GET /v1/tags/metrics?name=...`: stats of one tag
//! - `GET /v1/health`: status and model version

pub mod draft;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use accepted::model::{feature_importance, GbdtEnsemble};
use accepted::tag_metrics::{TagStats, TagStatsMap};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::{json, Value};

pub use draft::{feature_map, FieldError, QuestionDraft};

pub const TOP_FACTORS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Factor {
    pub feature: String,
    pub importance: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionResponse {
    pub probability: f64,
    pub features: std::collections::BTreeMap<String, f64>,
    pub top_factors: Vec<Factor>,
    pub model_version: String,
}

/// Tag stats as served, with `known = false` and zeros for unknown tags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TagMetricsResponse {
    pub name: String,
    pub known: bool,
    pub tag_id: Option<u64>,
    pub count: u64,
    pub followers: u64,
    pub followers_known: bool,
    pub time_index: f64,
    pub popularity: f64,
    pub expert_ratio: Option<f64>,
    pub problem_rate: f64,
    pub tag_quality: Option<f64>,
}

impl TagMetricsResponse {
    fn known(stats: &TagStats<f64>) -> Self {
        TagMetricsResponse {
            name: stats.name.clone(),
            known: true,
            tag_id: Some(stats.tag_id),
            count: stats.count,
            followers: stats.followers,
            followers_known: stats.followers_known,
            time_index: stats.time_index,
            popularity: stats.popularity,
            expert_ratio: stats.expert_ratio,
            problem_rate: stats.problem_rate,
            tag_quality: stats.tag_quality,
        }
    }

    fn unknown(name: &str) -> Self {
        TagMetricsResponse {
            name: name.to_string(),
            known: false,
            tag_id: None,
            count: 0,
            followers: 0,
            followers_known: false,
            time_index: 0.0,
            popularity: 0.0,
            expert_ratio: Some(0.0),
            problem_rate: 0.0,
            tag_quality: Some(0.0),
        }
    }
}

/// A loaded model with its importance ranking.
pub struct LoadedModel {
    pub ensemble: GbdtEnsemble<f64>,
    pub top_factors: Vec<Factor>,
}

impl LoadedModel {
    pub fn new(ensemble: GbdtEnsemble<f64>) -> Self {
        let top_factors = feature_importance(&ensemble)
            .top(TOP_FACTORS)
            .iter()
            .map(|e| Factor {
                feature: e.feature.clone(),
                importance: e.count,
            })
            .collect();
        LoadedModel { ensemble, top_factors }
    }

    /// Probability and response for a validated draft.
    pub fn predict(&self, draft: &QuestionDraft, tag_stats: &TagStatsMap<f64>, now: DateTime<Utc>) -> PredictionResponse {
        let features = draft.features(tag_stats, now);
        let probability = self
            .ensemble
            .probability(&features)
            .expect("draft features match the model width");
        PredictionResponse {
            probability,
            features: feature_map(&features),
            top_factors: self.top_factors.clone(),
            model_version: self.ensemble.model_version.clone(),
        }
    }
}

/// Immutable after startup; shared by all requests.
pub struct AppState {
    pub model: Option<LoadedModel>,
    pub tag_stats: Option<TagStatsMap<f64>>,
    pub clock: fn() -> DateTime<Utc>,
}

impl AppState {
    pub fn new(model: Option<GbdtEnsemble<f64>>, tag_stats: Option<TagStatsMap<f64>>) -> Self {
        AppState {
            model: model.map(LoadedModel::new),
            tag_stats,
            clock: Utc::now,
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/predict", post(predict))
        .route("/v1/tags/metrics", get(tag_metrics))
        .route("/v1/health", get(health))
        .with_state(state)
}

/// Binds and serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn error(status: StatusCode, message: &str, fields: &[FieldError]) -> Response {
    (status, Json(json!({ "error": message, "fields": fields }))).into_response()
}

fn unavailable(what: &str) -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, &format!("{what} not loaded"), &[])
}

async fn predict(State(state): State<Arc<AppState>>, body: axum::body::Bytes) -> Response {
    let (Some(model), Some(tag_stats)) = (&state.model, &state.tag_stats) else {
        return unavailable("model or tag stats");
    };
    let value: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => {
            let field = FieldError {
                field: "body".into(),
                message: format!("invalid JSON: {e}"),
            };
            return error(StatusCode::BAD_REQUEST, "invalid draft", &[field]);
        }
    };
    match QuestionDraft::from_json(&value) {
        Ok(draft) => Json(model.predict(&draft, tag_stats, (state.clock)())).into_response(),
        Err(fields) => error(StatusCode::BAD_REQUEST, "invalid draft", &fields),
    }
}

async fn tag_metrics(State(state): State<Arc<AppState>>, Query(query): Query<HashMap<String, String>>) -> Response {
    let Some(tag_stats) = &state.tag_stats else {
        return unavailable("tag stats");
    };
    let name = query.get("name").map(|n| n.trim().to_lowercase()).unwrap_or_default();
    if name.is_empty() {
        let field = FieldError {
            field: "name".into(),
            message: "query parameter is required".into(),
        };
        return error(StatusCode::BAD_REQUEST, "missing tag name", &[field]);
    }
    let body = tag_stats
        .get(&name)
        .map(TagMetricsResponse::known)
        .unwrap_or_else(|| TagMetricsResponse::unknown(&name));
    Json(body).into_response()
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    match &state.model {
        Some(model) => Json(json!({ "status": "ok", "model_version": model.ensemble.model_version })).into_response(),
        None => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "status": "unavailable", "model_version": null }))).into_response(),
    }
}
