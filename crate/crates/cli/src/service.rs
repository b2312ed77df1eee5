//! Local JSON-over-HTTP service. Every request works on its own snapshot of
//! the server configuration with the request body merged over it; the only
//! shared state is a bounded response cache keyed by a hash of the endpoint
//! and the merged configuration.

use std::collections::{HashMap, VecDeque};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use resetloop_core::closed_loop::{detect_crossover, Plant};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::commands::{self, AngleUnit, CommandError, SCHEMA_VERSION};
use crate::config::{resolve, ConfigError, ProjectConfig, Resolved};

/// Wall-clock budget for `/simulate` when the configuration sets none.
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(30);
pub const CACHE_CAPACITY: usize = 64;

const SCHEMA_V1: &str = include_str!("schema_v1.json");

/// Keys whose values are replaced wholesale when a request overrides them.
const REPLACE_KEYS: [&str; 4] = ["plant", "controller", "design", "frequency_model"];

#[derive(Default)]
struct Cache {
    map: HashMap<String, Arc<Value>>,
    order: VecDeque<String>,
}

impl Cache {
    fn get(&self, key: &str) -> Option<Arc<Value>> {
        self.map.get(key).cloned()
    }

    fn insert(&mut self, key: String, v: Arc<Value>) {
        if self.map.contains_key(&key) {
            return;
        }
        if self.order.len() >= CACHE_CAPACITY {
            if let Some(old) = self.order.pop_front() {
                self.map.remove(&old);
            }
        }
        self.order.push_back(key.clone());
        self.map.insert(key, v);
    }
}

pub struct AppState {
    base: Value,
    base_dir: PathBuf,
    default_budget: Duration,
    cache: Mutex<Cache>,
}

impl AppState {
    /// Validates `config` once so a broken server configuration fails at startup.
    pub fn new(config: &ProjectConfig, base_dir: PathBuf, default_budget: Duration) -> Result<Self, ConfigError> {
        resolve(config, &base_dir)?;
        let base = serde_json::to_value(config).expect("configuration serializes");
        Ok(Self {
            base,
            base_dir,
            default_budget,
            cache: Mutex::new(Cache::default()),
        })
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.lock().map(|c| c.map.len()).unwrap_or(0)
    }
}

/// Merges `patch` into `base`: objects merge recursively, `null` removes a
/// key, anything else replaces.
pub fn merge(base: &mut Value, patch: Value, top: bool) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    b.remove(&k);
                } else if top && REPLACE_KEYS.contains(&k.as_str()) {
                    b.insert(k, v);
                } else {
                    match b.get_mut(&k) {
                        Some(slot) => merge(slot, v, false),
                        None => {
                            b.insert(k, v);
                        }
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Hex SHA-256 of the endpoint and the canonical (key-sorted) configuration.
pub fn cache_key(endpoint: &str, config: &Value) -> String {
    let mut h = Sha256::new();
    h.update(endpoint.as_bytes());
    h.update(b"\n");
    h.update(config.to_string().as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn bad_request(msg: String) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            body: json!({"schema_version": SCHEMA_VERSION, "kind": "malformed_request", "error": msg, "fields": []}),
        }
    }
}

impl From<CommandError> for ApiError {
    fn from(e: CommandError) -> Self {
        let fields = serde_json::to_value(e.field_errors()).expect("field errors serialize");
        let mut body = json!({"schema_version": SCHEMA_VERSION, "error": e.to_string(), "fields": fields});
        let (status, kind) = match &e {
            CommandError::Config(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_config"),
            CommandError::Infeasible {
                theta,
                theta_max,
                omega,
            } => {
                body["theta"] = json!(theta);
                body["theta_max"] = json!(theta_max);
                body["omega"] = json!(omega);
                body["angle_unit"] = json!("rad");
                (StatusCode::UNPROCESSABLE_ENTITY, "infeasible")
            }
            CommandError::Rejected(_) => (StatusCode::UNPROCESSABLE_ENTITY, "rejected"),
            CommandError::Budget { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "budget_exceeded"),
            CommandError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        body["kind"] = json!(kind);
        Self { status, body }
    }
}

impl From<ConfigError> for ApiError {
    fn from(e: ConfigError) -> Self {
        CommandError::from(e).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type Shared = Arc<AppState>;

fn merged_config(st: &AppState, body: &Bytes) -> Result<Value, ApiError> {
    let mut cfg = st.base.clone();
    if body.iter().any(|b| !b.is_ascii_whitespace()) {
        let patch: Value = serde_json::from_slice(body)
            .map_err(|e| ApiError::bad_request(format!("request body is not JSON: {e}")))?;
        if !patch.is_object() {
            return Err(ApiError::bad_request("request body must be a JSON object".into()));
        }
        merge(&mut cfg, patch, true);
    }
    Ok(cfg)
}

fn resolve_value(st: &AppState, v: Value) -> Result<Resolved, ConfigError> {
    let cfg = ProjectConfig::from_value(v)?;
    resolve(&cfg, &st.base_dir)
}

#[derive(Clone, Copy)]
enum Endpoint {
    Analyze,
    Design,
    Simulate,
}

impl Endpoint {
    fn name(self) -> &'static str {
        match self {
            Endpoint::Analyze => "analyze",
            Endpoint::Design => "design",
            Endpoint::Simulate => "simulate",
        }
    }
}

fn run(st: &AppState, ep: Endpoint, cfg_value: Value) -> Result<Value, CommandError> {
    let budget = cfg_value
        .pointer("/simulation/budget_ms")
        .and_then(Value::as_u64)
        .map(Duration::from_millis)
        .unwrap_or(st.default_budget);
    let cfg = resolve_value(st, cfg_value)?;
    let to_value = |v: Result<Value, serde_json::Error>| v.map_err(|e| CommandError::Internal(e.to_string()));
    match ep {
        Endpoint::Analyze => to_value(serde_json::to_value(commands::analyze(&cfg, AngleUnit::Rad)?)),
        Endpoint::Design => to_value(serde_json::to_value(commands::design(&cfg, AngleUnit::Rad)?)),
        Endpoint::Simulate => {
            let out = commands::simulate(&cfg, AngleUnit::Rad, Some(Instant::now() + budget))?;
            to_value(serde_json::to_value(out.report))
        }
    }
}

async fn compute(st: Shared, ep: Endpoint, body: Bytes) -> Response {
    let cfg = match merged_config(&st, &body) {
        Ok(c) => c,
        Err(e) => return e.into_response(),
    };
    let key = cache_key(ep.name(), &cfg);
    if let Some(hit) = st.cache.lock().ok().and_then(|c| c.get(&key)) {
        return Json(hit.as_ref().clone()).into_response();
    }
    let st2 = st.clone();
    let result = tokio::task::spawn_blocking(move || run(&st2, ep, cfg)).await;
    match result {
        Ok(Ok(v)) => {
            let v = Arc::new(v);
            if let Ok(mut c) = st.cache.lock() {
                c.insert(key, v.clone());
            }
            Json(v.as_ref().clone()).into_response()
        }
        Ok(Err(e)) => ApiError::from(e).into_response(),
        Err(join) => ApiError::from(CommandError::Internal(join.to_string())).into_response(),
    }
}

async fn analyze(State(st): State<Shared>, body: Bytes) -> Response {
    compute(st, Endpoint::Analyze, body).await
}

async fn design(State(st): State<Shared>, body: Bytes) -> Response {
    compute(st, Endpoint::Design, body).await
}

async fn simulate(State(st): State<Shared>, body: Bytes) -> Response {
    compute(st, Endpoint::Simulate, body).await
}

fn base_resolved(st: &AppState) -> Result<Resolved, ApiError> {
    resolve_value(st, st.base.clone()).map_err(ApiError::from)
}

async fn frf(State(st): State<Shared>) -> Result<Json<Value>, ApiError> {
    let cfg = tokio::task::spawn_blocking(move || base_resolved(&st))
        .await
        .map_err(|e| ApiError::from(CommandError::Internal(e.to_string())))??;
    let (source, omega) = match &cfg.plant {
        Plant::Frf(t) => ("frf", t.omega().to_vec()),
        Plant::Model(_) => ("model", cfg.grid.clone()),
    };
    let mut re = Vec::with_capacity(omega.len());
    let mut im = Vec::with_capacity(omega.len());
    let mut mag = Vec::with_capacity(omega.len());
    let mut phase = Vec::with_capacity(omega.len());
    for &w in &omega {
        let g = cfg
            .plant
            .response(w)
            .map_err(|e| ApiError::from(CommandError::Rejected(e.to_string())))?;
        re.push(g.re);
        im.push(g.im);
        mag.push(resetloop_core::plot::db(g.norm()));
        phase.push(g.arg());
    }
    Ok(Json(json!({
        "schema_version": SCHEMA_VERSION,
        "angle_unit": "rad",
        "source": source,
        "omega": omega,
        "re": re,
        "im": im,
        "magnitude_db": mag,
        "phase": phase,
    })))
}

async fn grid(State(st): State<Shared>) -> Result<Json<Value>, ApiError> {
    let cfg = tokio::task::spawn_blocking(move || base_resolved(&st))
        .await
        .map_err(|e| ApiError::from(CommandError::Internal(e.to_string())))??;
    let omega_c = cfg
        .omega_c
        .or_else(|| detect_crossover(&cfg.plant, &cfg.c_l, &cfg.grid, cfg.frequency_model));
    Ok(Json(json!({
        "schema_version": SCHEMA_VERSION,
        "omega": cfg.grid,
        "omega_res": cfg.omega_res,
        "omega_c": omega_c,
        "n_max": cfg.n_max,
    })))
}

async fn schema_index() -> Json<Value> {
    Json(json!({
        "schema_version": SCHEMA_VERSION,
        "versions": [format!("v{SCHEMA_VERSION}")],
        "current": format!("/schema/v{SCHEMA_VERSION}"),
    }))
}

async fn schema_v1() -> Json<Value> {
    Json(serde_json::from_str(SCHEMA_V1).expect("embedded schema is valid JSON"))
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/frf", get(frf))
        .route("/grid", get(grid))
        .route("/schema", get(schema_index))
        .route("/schema/v1", get(schema_v1))
        .route("/analyze", post(analyze))
        .route("/design", post(design))
        .route("/simulate", post(simulate))
        .with_state(state)
}

/// Serves on `127.0.0.1:port` until the process is stopped.
pub async fn serve(state: Shared, port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_replaces_tagged_values_and_deletes_nulls() {
        let mut base = json!({"plant": {"synthetic": {"id": "two_mass"}}, "thresholds": {"m_s_db": 6.0, "m_r_db": 2.5}, "omega_c": 3.0});
        merge(
            &mut base,
            json!({"plant": {"model": []}, "thresholds": {"m_s_db": 5.0}, "omega_c": null}),
            true,
        );
        assert_eq!(
            base,
            json!({"plant": {"model": []}, "thresholds": {"m_s_db": 5.0, "m_r_db": 2.5}})
        );
    }

    #[test]
    fn cache_key_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"a":1,"b":{"c":2,"d":3}}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b":{"d":3,"c":2},"a":1}"#).unwrap();
        assert_eq!(cache_key("design", &a), cache_key("design", &b));
        assert_ne!(cache_key("design", &a), cache_key("analyze", &a));
    }

    #[test]
    fn cache_is_bounded() {
        let mut c = Cache::default();
        for i in 0..CACHE_CAPACITY + 5 {
            c.insert(i.to_string(), Arc::new(json!(i)));
        }
        assert_eq!(c.map.len(), CACHE_CAPACITY);
        assert!(c.get("0").is_none());
        assert!(c.get(&(CACHE_CAPACITY + 4).to_string()).is_some());
    }
}
