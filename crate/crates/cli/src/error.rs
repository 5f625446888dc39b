use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] gridcast_core::Error),
    #[error("{0}")]
    CheckFailed(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        use gridcast_core::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Engine(e) => match e {
                E::Domain(_) | E::Usage(_) => "usage",
                E::Unsupported(_) => "unsupported",
                E::Precondition(_) => "precondition",
                E::Resource { .. } => "resource",
                E::NonConvergence { .. } => "non-convergence",
                E::Internal(_) => "internal",
            },
            CliError::CheckFailed(_) => "check-failed",
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => "io",
        }
    }

    /// 0 success, 1 check failure, 2 usage error, 3 resource cap.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" | "unsupported" | "precondition" => 2,
            "resource" => 3,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut err = json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Engine(gridcast_core::Error::Resource { what, size, cap }) = self {
            err["resource"] = json!({ "what": what, "size": size.to_string(), "cap": cap.to_string() });
        }
        json!({ "error": err })
    }
}
