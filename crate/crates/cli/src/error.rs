use serde::Serialize;

use qh_core::asymptotics::AsympError;
use qh_core::curve::CurveError;
use qh_core::harmonic::HarmonicError;
use qh_core::maps::MapError;
use qh_core::walk::{ModelError, Violation};

/// Domain failure reported as JSON on stderr with exit code 1.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

impl CliError {
    pub fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        CliError { kind: kind.into(), message: message.into(), violations: vec![] }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let violations = match &e {
            ModelError::Invalid(v) => v.clone(),
            _ => vec![],
        };
        CliError { kind: e.kind(), message: e.to_string(), violations }
    }
}

macro_rules! via_kind {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new(e.kind(), e.to_string())
            }
        }
    )*};
}

via_kind!(MapError, HarmonicError, AsympError, CurveError);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("IoError", e.to_string())
    }
}
