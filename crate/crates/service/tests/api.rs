use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;
use wingforge::datastore::{CaseRecord, Dataset};
use wingforge::doe::CaseSpec;
use wingforge::space::{DesignVector, ParameterSpace};
use wingforge::MeshResolution;
use wingforge_service::{router, AppState, ServiceConfig};

fn app_with(config: ServiceConfig) -> Router {
    router(AppState::new(config).unwrap())
}

fn app() -> Router {
    app_with(ServiceConfig::default())
}

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value =
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

fn design() -> Value {
    json!({"c_r": 1.0, "b": 1.2, "lambda": 0.5, "Lambda": 20.0})
}

fn assert_error_body(v: &Value) {
    assert!(v["error"].is_string() && v["detail"].is_string(), "{v}");
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert!(
        keys.iter().all(|k| ["error", "detail", "field"].contains(&k.as_str())),
        "{v}"
    );
}

#[tokio::test]
async fn health_and_config() {
    let app = app();
    let (s, v) = send(&app, "GET", "/healthz", None).await;
    assert_eq!((s, v), (StatusCode::OK, Value::String("ok".into())));
    let (s, v) = send(&app, "GET", "/api/config", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["bounds"]["c_r"]["lo"], 0.7);
    assert_eq!(v["backends"], json!(["builtin"]));
    let (s, v) = send(&app, "GET", "/api/nothing", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error_body(&v);
}

#[tokio::test]
async fn mesh_contract() {
    let app = app();
    let res = MeshResolution::default();
    let (s, v) = send(&app, "POST", "/api/mesh", Some(json!({"design": design()}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["triangles"].as_array().unwrap().len(), 3 * res.triangle_count());
    assert_eq!(v["vertices"].as_array().unwrap().len(), 3 * res.vertex_count());
    assert_eq!(v["out_of_range"], false);

    let mut bad = design();
    bad["lambda"] = json!(0.0);
    let (s, v) = send(&app, "POST", "/api/mesh", Some(json!({"design": bad}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_error_body(&v);
    assert_eq!(v["field"], "lambda");

    let mut wide = design();
    wide["Lambda"] = json!(70.0);
    let (s, v) = send(&app, "POST", "/api/mesh", Some(json!({"design": wide}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["field"], "Lambda");
    let (s, v) = send(
        &app,
        "POST",
        "/api/mesh",
        Some(json!({"design": wide, "allow_out_of_range": true})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["out_of_range"], true);

    let (s, v) = send(&app, "POST", "/api/mesh", Some(json!({"desing": design()}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_error_body(&v);
}

#[tokio::test]
async fn predict_contract() {
    let app = app();
    let body = |alpha: f64| json!({"design": design(), "inflow": {"U_inf": 200.0, "alpha": alpha}});
    let (s, v) = send(&app, "POST", "/api/predict", Some(body(0.0))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["C_l"], 0.0);
    assert!(v["M"].as_f64().unwrap() > 0.5 && v["Re"].as_f64().unwrap() > 1e6);

    let (_, first) = send(&app, "POST", "/api/predict", Some(body(4.0))).await;
    for _ in 0..5 {
        assert_eq!(send(&app, "POST", "/api/predict", Some(body(4.0))).await.1, first);
    }
    assert!(first["C_l"].as_f64().unwrap() > 0.0);

    let res = MeshResolution::new(12, 6);
    let mut with_fields = body(4.0);
    with_fields["fields"] = json!(true);
    with_fields["resolution"] = serde_json::to_value(res).unwrap();
    let (s, v) = send(&app, "POST", "/api/predict", Some(with_fields)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["C_p"].as_array().unwrap().len(), res.triangle_count());
    assert_eq!(v["C_f"].as_array().unwrap().len(), res.triangle_count());

    let mut unknown = body(4.0);
    unknown["backend"] = json!("cfd");
    let (s, v) = send(&app, "POST", "/api/predict", Some(unknown)).await;
    assert_eq!((s, v["field"].as_str()), (StatusCode::BAD_REQUEST, Some("backend")));

    let bad = json!({"design": design(), "inflow": {"U_inf": -1.0, "alpha": 0.0}});
    assert_eq!(
        send(&app, "POST", "/api/predict", Some(bad)).await.0,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn unreachable_remote_backend_is_a_bad_gateway() {
    let mut config = ServiceConfig::default();
    let remote: wingforge::SurrogateRef = serde_json::from_value(json!({
        "kind": "remote", "endpoint": "http://127.0.0.1:9/predict", "retries": 1, "backoff_ms": 1, "timeout": 1.0
    }))
    .unwrap();
    config.backends.insert("remote".into(), remote);
    let app = app_with(config);
    let body = json!({"design": design(), "inflow": {"U_inf": 200.0, "alpha": 2.0}, "backend": "remote"});
    let (s, v) = send(&app, "POST", "/api/predict", Some(body)).await;
    assert_eq!(s, StatusCode::BAD_GATEWAY);
    assert_error_body(&v);
}

async fn poll(app: &Router, id: &str) -> Value {
    for _ in 0..600 {
        let (s, v) = send(app, "GET", &format!("/api/optimize/{id}"), None).await;
        assert_eq!(s, StatusCode::OK);
        if v["status"] == "done" || v["status"] == "failed" {
            return v;
        }
        tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    }
    panic!("job {id} did not finish");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn optimization_jobs() {
    let app = app();
    let submit =
        json!({"method": "evolutionary", "seed": 4, "budget": {"max_evaluations": 50}, "idempotency_key": "k1"});
    let (s, handle) = send(&app, "POST", "/api/optimize", Some(submit.clone())).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let id = handle["id"].as_str().unwrap().to_string();

    let (s, again) = send(&app, "POST", "/api/optimize", Some(submit)).await;
    assert_eq!((s, again["id"].as_str()), (StatusCode::OK, Some(id.as_str())));
    let other = json!({"method": "gradient", "seed": 4, "budget": {"max_steps": 10}, "idempotency_key": "k1"});
    let (s, v) = send(&app, "POST", "/api/optimize", Some(other)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_error_body(&v);

    let done = poll(&app, &id).await;
    assert_eq!(done["status"], "done", "{done}");
    assert_eq!(done["progress"]["evaluations"], 50);
    let trace = done["result"]["trace"].as_array().unwrap();
    assert_eq!(trace.len(), 50);
    let best: Vec<f64> = trace.iter().map(|e| e["best_eps"].as_f64().unwrap()).collect();
    assert!(best.windows(2).all(|w| w[1] >= w[0]));

    let (s, v) = send(&app, "GET", "/api/optimize/job-999999", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error_body(&v);

    let bad = json!({"method": "bayesian", "seed": 1, "budget": {"max_evaluations": 5}});
    assert_eq!(
        send(&app, "POST", "/api/optimize", Some(bad)).await.0,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn pareto_queries() {
    let dir = tempfile::tempdir().unwrap();
    let mut ds = Dataset::create(dir.path(), ParameterSpace::default()).unwrap();
    let phi = [1.0, 1.2, 0.5, 20.0, 200.0, 2.0];
    for (id, c_d, c_l) in [("a", 0.02, 0.30), ("b", 0.03, 0.50), ("c", 0.03, 0.40)] {
        ds.write_case(
            CaseRecord::new(CaseSpec::from_vector(id, &DesignVector(phi))).with_coefficients(c_d, c_l),
            &[],
        )
        .unwrap();
    }
    let empty = tempfile::tempdir().unwrap();
    Dataset::create(empty.path(), ParameterSpace::default()).unwrap();
    let mut config = ServiceConfig::default();
    config.datasets.insert("fixture".into(), dir.path().to_path_buf());
    config.datasets.insert("empty".into(), empty.path().to_path_buf());
    let app = app_with(config);

    let (s, v) = send(&app, "GET", "/api/pareto?dataset=fixture", None).await;
    assert_eq!(s, StatusCode::OK);
    let ids: Vec<&str> = v["front"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["a", "b"]);
    assert_eq!(v["scatter"].as_array().unwrap().len(), 3);
    assert_eq!(send(&app, "GET", "/api/pareto?dataset=fixture", None).await.1, v);

    assert_eq!(
        send(&app, "GET", "/api/pareto?dataset=empty", None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        send(&app, "GET", "/api/pareto?dataset=nope", None).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn cors_preflight_is_answered() {
    let app = app();
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/api/predict")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert!(resp.status().is_success());
    assert!(resp.headers().contains_key("access-control-allow-origin"));
}
