use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
struct ErrorBody {
    code: &'static str,
    message: String,
    detail: Value,
}

/// An HTTP error with the body `{code, message, detail}`.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn no_model() -> Self {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no_model", "no model is loaded")
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn unknown_code(kind: &str, code: &str) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "unknown_code", format!("unknown {kind} code '{code}'"))
            .with_detail(serde_json::json!({ "kind": kind, "code": code }))
    }

    pub fn not_found(kind: &str, code: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {kind} code '{code}'"))
            .with_detail(serde_json::json!({ "kind": kind, "code": code }))
    }

    pub fn over_limit(what: &str, requested: usize, limit: usize) -> Self {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "over_limit",
            format!("{what} {requested} exceeds the limit {limit}"),
        )
        .with_detail(serde_json::json!({ "requested": requested, "limit": limit }))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<foodnet_core::Error> for ApiError {
    fn from(e: foodnet_core::Error) -> Self {
        ApiError::internal(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code,
            message: self.message,
            detail: self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}
