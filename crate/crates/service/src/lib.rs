//! HTTP API over the wingforge toolkit.
//!
//! | Route                        | Purpose                                   |
//! |------------------------------|-------------------------------------------|
//! | `POST /api/mesh`             | loft a wing, return flat mesh arrays      |
//! | `POST /api/predict`          | coefficients (and optional surface field) |
//! | `POST /api/optimize`         | submit an optimization job                |
//! | `GET  /api/optimize/{id}`    | poll a job                                |
//! | `GET  /api/pareto?dataset=`  | dataset Pareto front and polar scatter    |
//! | `GET  /api/config`           | bounds, datasets and backends             |
//! | `GET  /healthz`              | liveness                                  |

mod error;
mod jobs;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};
use wingforge::aero::{freestream_state, surface_coefficients};
use wingforge::datastore::Dataset;
use wingforge::geometry::{loft_wing, MeshMetadata};
use wingforge::metrics::{pareto_front, PolarPoint};
use wingforge::optimize::{Bounds, OptimizerConfig};
use wingforge::space::{DesignVector, ParameterSpace, PARAMETER_NAMES};
use wingforge::surrogate::{LiftLine, Provenance};
use wingforge::{Atmosphere, InflowConditions, MeshResolution, Surrogate, SurrogateRef, WingDesign};

pub use error::{ApiError, ErrorBody};
pub use jobs::{JobHandle, JobRunner, JobStatus, Progress};

/// Largest scatter returned by `/api/pareto`.
pub const SCATTER_LIMIT: usize = 5000;
pub const DEFAULT_BACKEND: &str = "builtin";

fn default_queue_depth() -> usize {
    8
}

fn default_concurrency() -> usize {
    1
}

/// Service configuration, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub space: ParameterSpace,
    pub atmosphere: Atmosphere,
    pub mesh_resolution: MeshResolution,
    /// Named surrogate backends; `builtin` is always available.
    pub backends: BTreeMap<String, SurrogateRef>,
    pub default_backend: String,
    /// Dataset name → root directory.
    pub datasets: BTreeMap<String, PathBuf>,
    /// Optimization jobs running at once.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Jobs allowed to wait for a free slot.
    #[serde(default = "default_queue_depth")]
    pub queue_depth: usize,
    /// Allowed CORS origins; empty allows any origin.
    pub cors_origins: Vec<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            space: ParameterSpace::default(),
            atmosphere: Atmosphere::isa_sea_level(),
            mesh_resolution: MeshResolution::default(),
            backends: BTreeMap::new(),
            default_backend: DEFAULT_BACKEND.into(),
            datasets: BTreeMap::new(),
            concurrency: default_concurrency(),
            queue_depth: default_queue_depth(),
            cors_origins: Vec::new(),
        }
    }
}

struct Backend {
    spec: SurrogateRef,
    model: Arc<dyn Surrogate>,
}

/// Shared, read-only state plus the job registry.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: ServiceConfig,
    backends: BTreeMap<String, Backend>,
    jobs: Arc<JobRunner>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Result<Self, String> {
        config.space.validate().map_err(|e| e.to_string())?;
        config.mesh_resolution.validate().map_err(|e| e.to_string())?;
        let mut specs = config.backends.clone();
        specs.entry(DEFAULT_BACKEND.to_string()).or_default();
        let mut backends = BTreeMap::new();
        for (name, spec) in specs {
            let model: Arc<dyn Surrogate> = Arc::from(spec.build().map_err(|e| format!("backend `{name}`: {e}"))?);
            backends.insert(name, Backend { spec, model });
        }
        if !backends.contains_key(&config.default_backend) {
            return Err(format!(
                "default backend `{}` is not configured",
                config.default_backend
            ));
        }
        let jobs = Arc::new(JobRunner::new(config.concurrency, config.queue_depth));
        Ok(Self {
            inner: Arc::new(Inner { config, backends, jobs }),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    fn backend(&self, name: Option<&str>) -> Result<(&str, &Backend), ApiError> {
        let name = name.unwrap_or(&self.inner.config.default_backend);
        self.inner
            .backends
            .get_key_value(name)
            .map(|(k, b)| (k.as_str(), b))
            .ok_or_else(|| ApiError::bad_request(format!("unknown backend `{name}`")).with_field("backend"))
    }
}

fn cors(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    if origins.is_empty() {
        layer.allow_origin(Any)
    } else {
        let list: Vec<HeaderValue> = origins.iter().filter_map(|o| o.parse().ok()).collect();
        layer.allow_origin(list)
    }
}

pub fn router(state: AppState) -> Router {
    let cors = cors(&state.inner.config.cors_origins);
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/api/config", get(config_handler))
        .route("/api/mesh", post(mesh_handler))
        .route("/api/predict", post(predict_handler))
        .route("/api/optimize", post(submit_handler))
        .route("/api/optimize/{id}", get(job_handler))
        .route("/api/pareto", get(pareto_handler))
        .fallback(|| async { ApiError::not_found("no such route") })
        .layer(cors)
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(config: ServiceConfig, addr: SocketAddr) -> std::io::Result<()> {
    let state = AppState::new(config).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::from_json(&e))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigResponse {
    pub version: String,
    pub bounds: ParameterSpace,
    pub parameters: [&'static str; 6],
    pub mesh_resolution: MeshResolution,
    pub backends: Vec<String>,
    pub default_backend: String,
    pub datasets: Vec<String>,
}

async fn config_handler(State(state): State<AppState>) -> Json<ConfigResponse> {
    let c = state.config();
    Json(ConfigResponse {
        version: env!("CARGO_PKG_VERSION").into(),
        bounds: c.space,
        parameters: PARAMETER_NAMES,
        mesh_resolution: c.mesh_resolution,
        backends: state.inner.backends.keys().cloned().collect(),
        default_backend: c.default_backend.clone(),
        datasets: c.datasets.keys().cloned().collect(),
    })
}

fn check_design(design: &WingDesign) -> Result<(), ApiError> {
    design.validate().map_err(|e| {
        let err = ApiError::new(StatusCode::BAD_REQUEST, "invalid_design", e.to_string());
        match e {
            wingforge::geometry::GeometryError::InvalidDesign { field, .. } => err.with_field(field),
            _ => err,
        }
    })
}

/// Names of design parameters outside the configured space.
fn design_violations(space: &ParameterSpace, design: &WingDesign) -> Vec<&'static str> {
    let ivs = space.intervals();
    design
        .as_array()
        .iter()
        .zip(ivs)
        .zip(PARAMETER_NAMES)
        .filter(|((v, iv), _)| !iv.contains(**v))
        .map(|(_, n)| n)
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshRequest {
    pub design: WingDesign,
    #[serde(default)]
    pub resolution: Option<MeshResolution>,
    #[serde(default)]
    pub allow_out_of_range: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshResponse {
    /// `x, y, z` per vertex.
    pub vertices: Vec<f64>,
    /// Three vertex indices per triangle, counter-clockwise seen from outside.
    pub triangles: Vec<u32>,
    pub metadata: MeshMetadata,
    pub out_of_range: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

async fn mesh_handler(State(state): State<AppState>, body: Bytes) -> Result<Json<MeshResponse>, ApiError> {
    let req: MeshRequest = parse_body(&body)?;
    check_design(&req.design)?;
    let resolution = req.resolution.unwrap_or(state.config().mesh_resolution);
    resolution
        .validate()
        .map_err(|e| ApiError::bad_request(e.to_string()).with_field("resolution"))?;
    if resolution.triangle_count() > 2_000_000 {
        return Err(ApiError::bad_request("resolution is too fine for a JSON response").with_field("resolution"));
    }
    let violations = design_violations(&state.config().space, &req.design);
    if !violations.is_empty() && !req.allow_out_of_range {
        return Err(out_of_range(&violations));
    }
    let mesh = loft_wing(&req.design, &resolution).map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(Json(MeshResponse {
        vertices: mesh.vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect(),
        triangles: mesh.triangles.iter().flatten().copied().collect(),
        metadata: MeshMetadata::new(&req.design, &resolution),
        out_of_range: !violations.is_empty(),
        violations: violations.iter().map(|s| s.to_string()).collect(),
    }))
}

fn out_of_range(violations: &[&str]) -> ApiError {
    ApiError::new(
        StatusCode::UNPROCESSABLE_ENTITY,
        "out_of_range",
        format!(
            "{} outside the configured bounds; set allow_out_of_range to override",
            violations.join(", ")
        ),
    )
    .with_field(violations[0])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub design: WingDesign,
    pub inflow: InflowConditions,
    #[serde(default)]
    pub backend: Option<String>,
    /// Include per-face pressure and skin-friction coefficients.
    #[serde(default)]
    pub fields: bool,
    /// Mesh resolution of the builtin surface field.
    #[serde(default)]
    pub resolution: Option<MeshResolution>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictResponse {
    #[serde(rename = "C_D")]
    pub c_d: f64,
    #[serde(rename = "C_l")]
    pub c_l: f64,
    /// `null` when `C_D = 0`.
    pub eps: Option<f64>,
    #[serde(rename = "M")]
    pub mach: f64,
    /// Based on the mean geometric chord.
    #[serde(rename = "Re")]
    pub reynolds: f64,
    pub out_of_range: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
    pub backend: String,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_resolution: Option<MeshResolution>,
    #[serde(rename = "C_p", default, skip_serializing_if = "Option::is_none")]
    pub c_p: Option<Vec<f64>>,
    #[serde(rename = "C_f", default, skip_serializing_if = "Option::is_none")]
    pub c_f: Option<Vec<f64>>,
}

async fn predict_handler(State(state): State<AppState>, body: Bytes) -> Result<Json<PredictResponse>, ApiError> {
    let req: PredictRequest = parse_body(&body)?;
    check_design(&req.design)?;
    req.inflow
        .validate()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_inflow", e.to_string()).with_field("inflow"))?;
    let (name, backend) = state.backend(req.backend.as_deref())?;
    let name = name.to_string();
    let atm = state.config().atmosphere;
    let model: Arc<dyn Surrogate> = match (&backend.spec, req.fields) {
        (SurrogateRef::BuiltinLiftline { fields: None }, true) => {
            let res = req.resolution.unwrap_or(state.config().mesh_resolution);
            res.validate()
                .map_err(|e| ApiError::bad_request(e.to_string()).with_field("resolution"))?;
            Arc::new(LiftLine::default().with_fields(res))
        }
        _ => backend.model.clone(),
    };
    let phi = DesignVector::from_parts(&req.design, &req.inflow);
    let violations = state.config().space.violations(&phi);
    let (design, inflow) = (req.design, req.inflow);
    let prediction = tokio::task::spawn_blocking(move || model.predict(&design, &inflow, &atm))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from_surrogate)?;

    let c_ref = 0.5 * design.c_r * (1.0 + design.taper);
    let fs = freestream_state(&inflow, &atm, c_ref).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let c = prediction.coefficients;
    let surface = if req.fields {
        prediction
            .surface_field
            .as_ref()
            .map(|f| surface_coefficients(f, &atm, &inflow))
    } else {
        None
    };
    Ok(Json(PredictResponse {
        c_d: c.c_d,
        c_l: c.c_l,
        eps: c.eps,
        mach: fs.mach,
        reynolds: fs.reynolds,
        out_of_range: !violations.is_empty(),
        violations: violations.iter().map(|s| s.to_string()).collect(),
        backend: name,
        provenance: prediction.provenance,
        field_resolution: if req.fields { prediction.field_resolution } else { None },
        c_p: surface.as_ref().map(|s| s.c_p.clone()),
        c_f: surface.map(|s| s.c_f),
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeRequest {
    #[serde(flatten)]
    pub config: OptimizerConfig,
    #[serde(default)]
    pub backend: Option<String>,
    /// Overrides the configured bounds.
    #[serde(default)]
    pub bounds: Option<ParameterSpace>,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

async fn submit_handler(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let req: OptimizeRequest = parse_body(&body)?;
    req.config.validate().map_err(ApiError::from_optimize)?;
    let space = req.bounds.unwrap_or(state.config().space);
    space
        .validate()
        .map_err(|e| ApiError::bad_request(e.to_string()).with_field("bounds"))?;
    let (name, backend) = state.backend(req.backend.as_deref())?;
    let key = match headers.get("idempotency-key") {
        Some(v) => Some(
            v.to_str()
                .map_err(|_| ApiError::bad_request("idempotency key is not ASCII").with_field("idempotency_key"))?
                .to_string(),
        ),
        None => req.idempotency_key.clone(),
    };
    let spec = jobs::JobSpec {
        config: req.config,
        backend: name.to_string(),
        surrogate: backend.model.clone(),
        bounds: Bounds::from_space(&space),
        atmosphere: state.config().atmosphere,
        idempotency_key: key,
    };
    let (handle, created) = state.inner.jobs.submit(spec)?;
    let status = if created { StatusCode::ACCEPTED } else { StatusCode::OK };
    Ok((status, Json(handle)))
}

async fn job_handler(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<JobHandle>, ApiError> {
    state
        .inner
        .jobs
        .get(&id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("unknown job `{id}`")).with_field("id"))
}

#[derive(Debug, Clone, Deserialize)]
pub struct ParetoQuery {
    pub dataset: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParetoResponse {
    pub dataset: String,
    pub checksum: String,
    /// Cases with coefficients.
    pub total: usize,
    pub front: Vec<PolarPoint>,
    pub scatter: Vec<PolarPoint>,
    pub decimated: bool,
}

/// At most `limit` indices out of `n`, chosen by a generator seeded from
/// `checksum`, in ascending order.
pub fn decimate(n: usize, limit: usize, checksum: &str) -> Vec<usize> {
    if n <= limit {
        return (0..n).collect();
    }
    let seed = u64::from_str_radix(checksum.get(..16).unwrap_or("0"), 16).unwrap_or(0);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, limit).into_vec();
    picked.sort_unstable();
    picked
}

async fn pareto_handler(
    State(state): State<AppState>,
    Query(q): Query<ParetoQuery>,
) -> Result<Json<ParetoResponse>, ApiError> {
    let name = q
        .dataset
        .ok_or_else(|| ApiError::bad_request("missing `dataset` query parameter").with_field("dataset"))?;
    let root = state
        .config()
        .datasets
        .get(&name)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("unknown dataset `{name}`")).with_field("dataset"))?;
    let space = state.config().space;
    let loaded = tokio::task::spawn_blocking(move || -> Result<_, String> {
        let ds = Dataset::open(root).map_err(|e| e.to_string())?;
        let checksum = ds.checksum().map_err(|e| e.to_string())?;
        let points: Vec<PolarPoint> = ds
            .index()
            .cases
            .iter()
            .filter_map(|c| {
                c.coefficients.map(|k| PolarPoint {
                    id: c.id.clone(),
                    c_d: k.c_d,
                    c_l: k.c_l,
                    alpha: c.phi[5],
                    lambda: Some(c.phi[3]),
                    in_range: space.contains(&DesignVector(c.phi)),
                })
            })
            .collect();
        Ok((checksum, points))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    let (checksum, points) = loaded.map_err(|e| ApiError::not_found(e).with_field("dataset"))?;
    if points.is_empty() {
        return Err(
            ApiError::not_found(format!("dataset `{name}` has no cases with coefficients")).with_field("dataset"),
        );
    }
    let front = pareto_front(&points);
    let keep = decimate(points.len(), SCATTER_LIMIT, &checksum);
    let decimated = keep.len() < points.len();
    Ok(Json(ParetoResponse {
        dataset: name,
        checksum,
        total: points.len(),
        front,
        scatter: keep.into_iter().map(|i| points[i].clone()).collect(),
        decimated,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimation_is_seeded_by_checksum() {
        let a = decimate(20_000, 5000, "00ff00ff00ff00ff");
        assert_eq!(a.len(), 5000);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a, decimate(20_000, 5000, "00ff00ff00ff00ff"));
        assert_ne!(a, decimate(20_000, 5000, "11ff00ff00ff00ff"));
        assert_eq!(decimate(10, 5000, "x"), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn json_errors_name_the_field() {
        let e = serde_json::from_str::<MeshRequest>("{}").unwrap_err();
        assert_eq!(ApiError::from_json(&e).body.field.as_deref(), Some("design"));
    }
}
