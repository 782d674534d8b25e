use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use wingforge::optimize::OptimizeError;
use wingforge::surrogate::SurrogateError;

/// Body of every error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, error: &str, detail: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.to_string(),
                detail: detail.into(),
                field: None,
            },
        }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.body.field = Some(field.into());
        self
    }

    pub fn bad_request(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", detail)
    }

    pub fn not_found(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", detail)
    }

    /// A JSON body that failed to parse; names the offending field when
    /// serde reports one.
    pub fn from_json(err: &serde_json::Error) -> Self {
        let msg = err.to_string();
        let e = Self::bad_request(msg.clone());
        match msg.split('`').nth(1) {
            Some(field) if msg.starts_with("missing field") || msg.starts_with("unknown field") => e.with_field(field),
            _ => e,
        }
    }

    pub fn from_surrogate(err: SurrogateError) -> Self {
        if err.is_remote_failure() {
            let e = Self::new(StatusCode::BAD_GATEWAY, "surrogate_failure", err.to_string());
            match err {
                SurrogateError::Protocol { field, .. } => e.with_field(field),
                _ => e,
            }
        } else {
            Self::new(StatusCode::BAD_REQUEST, "invalid_input", err.to_string())
        }
    }

    pub fn from_optimize(err: OptimizeError) -> Self {
        match err {
            OptimizeError::Objective { source, .. } => Self::from_surrogate(source),
            OptimizeError::InvalidConfig(d) => Self::bad_request(d),
            OptimizeError::Undefined(d) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "undefined", d),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
