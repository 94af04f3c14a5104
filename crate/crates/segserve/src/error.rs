use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use bgrowth_core::Error as CoreError;
use serde::Serialize;

/// Error body: `{"error": "<reason>", "detail": "<human text>"}`.
///
/// `reason` is one of a small fixed set so clients can branch on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub error: &'static str,
    pub detail: String,
}

pub const BAD_ENCODING: &str = "bad encoding";
pub const DIMENSION_MISMATCH: &str = "dimension mismatch";
pub const NO_SEEDS: &str = "no seeds";
pub const INVALID_PARAMETER: &str = "invalid parameter";
pub const MALFORMED_REQUEST: &str = "malformed request";
pub const PIXEL_BUDGET: &str = "pixel budget exceeded";
pub const INTERNAL: &str = "internal error";

impl ApiError {
    pub fn bad_request(reason: &'static str, detail: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            error: reason,
            detail: detail.into(),
        }
    }

    pub fn too_large(detail: impl Into<String>) -> Self {
        Self {
            status: StatusCode::PAYLOAD_TOO_LARGE,
            error: PIXEL_BUDGET,
            detail: detail.into(),
        }
    }

    pub fn internal(detail: impl Into<String>) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            error: INTERNAL,
            detail: detail.into(),
        }
    }

    /// Attach the name of the offending field to a core error.
    pub fn from_core(field: &str, err: CoreError) -> Self {
        let detail = format!("{field}: {err}");
        match err {
            CoreError::Format { .. } | CoreError::InvalidSeedEncoding { .. } => Self::bad_request(BAD_ENCODING, detail),
            CoreError::DimensionMismatch { .. } => Self::bad_request(DIMENSION_MISMATCH, detail),
            CoreError::NoSeeds => Self::bad_request(NO_SEEDS, detail),
            CoreError::InvalidParameter(_) | CoreError::InvalidDimensions(_) | CoreError::EmptyMask => {
                Self::bad_request(INVALID_PARAMETER, detail)
            }
            _ => Self::internal(detail),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, axum::Json(&self)).into_response()
    }
}
