use thiserror::Error;

/// Errors raised across the crate.
///
/// The variants are grouped by how a caller should react: `Domain`,
/// `Schema`, and `Io`/`Parse` signal bad inputs, while `InfeasibleReports`,
/// `Separation`, `Convergence`, and friends signal numeric conditions
/// detected during aggregation or fitting.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Reported probabilities are inconsistent with the declared
    /// information structure (e.g. a combined sufficient statistic exits
    /// the predictive function's domain).
    #[error("infeasible reports: {0}")]
    InfeasibleReports(String),

    /// The requested operation is not defined for this variant.
    #[error("unsupported variant: {0}")]
    UnsupportedVariant(String),

    /// An information model yields degenerate ensemble weights.
    #[error("degenerate information model: {0}")]
    DegenerateModel(String),

    /// The likelihood is unbounded: coefficients diverge (perfect
    /// separation of the outcomes).
    #[error("perfect separation detected: {0}")]
    Separation(String),

    /// The optimizer exhausted its iteration budget on every start.
    /// Carries the best iterate found so callers can inspect it.
    #[error("optimizer failed to converge: {message}")]
    Convergence { message: String, best: Vec<f64> },

    /// Input data do not match the expected shape or column contract.
    #[error("schema error: {0}")]
    Schema(String),

    /// A metric has no defined value on this input (e.g. single-class AUC).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Extremizing classification preconditions are violated.
    #[error("undefined classification: {0}")]
    UndefinedClassification(String),

    /// The exact enumeration oracle's size bound was exceeded.
    #[error("enumeration bound exceeded: {0}")]
    EnumerationBound(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// A file could not be parsed into the expected format.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// `true` for error classes caused by numeric conditions rather than
    /// malformed inputs. The command-line tool maps these to a dedicated
    /// exit code.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleReports(_)
                | Error::Separation(_)
                | Error::Convergence { .. }
                | Error::DegenerateModel(_)
                | Error::UndefinedMetric(_)
                | Error::UndefinedClassification(_)
                | Error::EnumerationBound(_)
        )
    }
}
