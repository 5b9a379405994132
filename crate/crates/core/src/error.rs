use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("{}", format_issues(.0))]
    Schema(Vec<RowIssue>),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One schema violation in a tabular input. `line` is the 1-based line in
/// the file, counting the header as line 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    pub line: usize,
    pub reason: String,
}

fn format_issues(issues: &[RowIssue]) -> String {
    let lines: Vec<String> = issues
        .iter()
        .map(|i| format!("line {}: {}", i.line, i.reason))
        .collect();
    format!("schema violations: {}", lines.join("; "))
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.into(),
        reason: reason.into(),
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
