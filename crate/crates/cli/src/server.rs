//! HTTP service over one loaded graph.
//!
//! | route | result |
//! |---|---|
//! | `POST /query` | NDJSON: one `solution` line per tree in discovery order, then an `end` line |
//! | `GET /nodes/{id}/neighbors?limit=L` | incident edges with endpoint summaries |
//! | `GET /stats` | node, edge, entity and source counts |
//! | `GET /healthz` | liveness |
//!
//! Errors are JSON `{"error": ...}` with status 400 (malformed request),
//! 404 (unknown node) or 409 (no graph loaded).

use std::convert::Infallible;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query as UrlQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use graphlens::graph::{Graph, NodeId};
use graphlens::search::{Query, Search, SearchConfig};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::{mpsc, Semaphore};
use tokio_stream::wrappers::UnboundedReceiverStream;
use tokio_stream::StreamExt;

use crate::dto::{AnswerTreeDto, GraphStatsDto, NeighborhoodDto, QueryRequest, SearchStatsDto, StreamLine};

pub const DEFAULT_NEIGHBOR_LIMIT: usize = 100;

#[derive(Clone)]
pub struct AppState {
    graph: Option<Arc<Graph>>,
    /// Search workers available across all concurrent queries.
    workers: Arc<Semaphore>,
    max_workers: usize,
}

impl AppState {
    pub fn new(graph: Option<Graph>, max_workers: usize) -> AppState {
        let max_workers = max_workers.max(1);
        AppState {
            graph: graph.map(Arc::new),
            workers: Arc::new(Semaphore::new(max_workers)),
            max_workers,
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/query", post(query))
        .route("/nodes/{id}/neighbors", get(neighbors))
        .route("/stats", get(stats))
        .route("/healthz", get(healthz))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

#[allow(clippy::result_large_err)]
fn loaded(state: &AppState) -> Result<Arc<Graph>, Response> {
    state
        .graph
        .clone()
        .ok_or_else(|| error(StatusCode::CONFLICT, "no graph loaded"))
}

async fn healthz(State(state): State<AppState>) -> Response {
    Json(json!({ "status": "ok", "graphLoaded": state.graph.is_some() })).into_response()
}

async fn stats(State(state): State<AppState>) -> Response {
    match loaded(&state) {
        Ok(g) => Json(GraphStatsDto::new(&g)).into_response(),
        Err(r) => r,
    }
}

#[derive(Deserialize)]
struct NeighborParams {
    limit: Option<usize>,
}

async fn neighbors(
    State(state): State<AppState>,
    Path(id): Path<String>,
    params: Result<UrlQuery<NeighborParams>, axum::extract::rejection::QueryRejection>,
) -> Response {
    let g = match loaded(&state) {
        Ok(g) => g,
        Err(r) => return r,
    };
    let Ok(UrlQuery(params)) = params else {
        return error(StatusCode::BAD_REQUEST, "limit must be a non-negative integer");
    };
    let Ok(raw) = id.parse::<u32>() else {
        return error(StatusCode::BAD_REQUEST, format!("node id {id:?} is not an integer"));
    };
    let n = NodeId(raw);
    if !g.contains_node(n) {
        return error(StatusCode::NOT_FOUND, format!("unknown node {raw}"));
    }
    Json(NeighborhoodDto::new(&g, n, params.limit.unwrap_or(DEFAULT_NEIGHBOR_LIMIT))).into_response()
}

/// Sets the cancel flag when the response stream is dropped, e.g. because
/// the client went away.
struct CancelOnDrop(Arc<AtomicBool>);

impl Drop for CancelOnDrop {
    fn drop(&mut self) {
        self.0.store(true, Ordering::Relaxed);
    }
}

fn line(l: &StreamLine) -> Bytes {
    let mut v = serde_json::to_vec(l).expect("serializable");
    v.push(b'\n');
    Bytes::from(v)
}

async fn query(State(state): State<AppState>, body: Result<Json<QueryRequest>, JsonRejection>) -> Response {
    let g = match loaded(&state) {
        Ok(g) => g,
        Err(r) => return r,
    };
    let req = match body {
        Ok(Json(r)) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    let q = match Query::new(&req.keywords) {
        Ok(q) => q,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    if req.workers == Some(0) || req.max_solutions == Some(0) {
        return error(StatusCode::BAD_REQUEST, "workers and maxSolutions must be positive");
    }
    let workers = req.workers.unwrap_or(1).min(state.max_workers);
    let permits = match state.workers.clone().acquire_many_owned(workers as u32).await {
        Ok(p) => p,
        Err(_) => return error(StatusCode::SERVICE_UNAVAILABLE, "worker pool closed"),
    };
    let config = SearchConfig {
        workers,
        max_solutions: req.max_solutions,
        timeout: req.timeout_ms.map(Duration::from_millis),
    };

    let cancel = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::unbounded_channel::<Bytes>();
    let flag = cancel.clone();
    tokio::task::spawn_blocking(move || {
        let _permits = permits;
        let search = Search::new(&g, &q, config);
        let sink = |s: &graphlens::search::Solution| {
            if tx.send(line(&StreamLine::Solution(AnswerTreeDto::new(&g, s)))).is_err() {
                flag.store(true, Ordering::Relaxed);
            }
        };
        let out = search.run_streaming(Some(&flag), &sink);
        let _ = tx.send(line(&StreamLine::End {
            stats: SearchStatsDto::from(&out.stats),
        }));
    });

    let guard = CancelOnDrop(cancel);
    let stream = UnboundedReceiverStream::new(rx).map(move |b| {
        let _ = &guard;
        Ok::<_, Infallible>(b)
    });
    Response::builder()
        .header(header::CONTENT_TYPE, "application/x-ndjson")
        .body(Body::from_stream(stream))
        .expect("valid response")
}

/// Serves until ctrl-c.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
