use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;

use sbfl_core::formula::FormulaError;
use sbfl_core::ingest::IngestError;
use sbfl_core::interactive::InteractiveError;
use sbfl_core::ranking::RankingError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("{message}")]
    Invalid {
        kind: &'static str,
        message: String,
        /// 1-based character offset for formula errors
        offset: Option<usize>,
    },
    #[error("{message}")]
    NotFound { kind: &'static str, message: String },
    #[error("{message}")]
    Conflict { kind: &'static str, message: String },
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub(crate) fn invalid(kind: &'static str, message: impl Into<String>) -> Self {
        ServiceError::Invalid {
            kind,
            message: message.into(),
            offset: None,
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownSession(_) | ServiceError::NotFound { .. } => StatusCode::NOT_FOUND,
            ServiceError::Invalid { .. } => StatusCode::BAD_REQUEST,
            ServiceError::Conflict { .. } => StatusCode::CONFLICT,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "UnknownSession",
            ServiceError::Invalid { kind, .. }
            | ServiceError::NotFound { kind, .. }
            | ServiceError::Conflict { kind, .. } => kind,
            ServiceError::Internal(_) => "Internal",
        }
    }
}

impl From<IngestError> for ServiceError {
    fn from(err: IngestError) -> Self {
        let kind = match &err {
            IngestError::Schema { .. } => "SchemaError",
            IngestError::VersionMismatch { .. } => "VersionMismatch",
            IngestError::Spectrum(_) => "InvalidSpectrum",
            IngestError::Io { .. } => return ServiceError::Internal(err.to_string()),
            _ => "MalformedInput",
        };
        ServiceError::invalid(kind, err.to_string())
    }
}

impl From<FormulaError> for ServiceError {
    fn from(err: FormulaError) -> Self {
        ServiceError::Invalid {
            kind: "ParseError",
            offset: Some(err.offset()),
            message: err.to_string(),
        }
    }
}

impl From<RankingError> for ServiceError {
    fn from(err: RankingError) -> Self {
        let kind = match err {
            RankingError::NoSuchGranularity(_) => "NoSuchGranularity",
            RankingError::NotCoarser { .. } => "NotCoarser",
            RankingError::UnknownElement(_) => "UnknownElement",
        };
        ServiceError::invalid(kind, err.to_string())
    }
}

impl From<InteractiveError> for ServiceError {
    fn from(err: InteractiveError) -> Self {
        let message = err.to_string();
        match err {
            InteractiveError::SessionConcluded(_) => ServiceError::Conflict {
                kind: "SessionConcluded",
                message,
            },
            InteractiveError::EmptyLog => ServiceError::Conflict {
                kind: "EmptyLog",
                message,
            },
            InteractiveError::OutOfSequence { .. } => ServiceError::Conflict {
                kind: "OutOfSequence",
                message,
            },
            InteractiveError::UnknownElement(_) => ServiceError::invalid("UnknownElement", message),
            InteractiveError::InvalidCallGraph { .. } => ServiceError::invalid("InvalidCallGraph", message),
            InteractiveError::Ranking(inner) => inner.into(),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.kind(), "message": self.to_string() });
        if let ServiceError::Invalid {
            offset: Some(offset), ..
        } = &self
        {
            body["offset"] = json!(offset);
        }
        (self.status(), Json(body)).into_response()
    }
}
