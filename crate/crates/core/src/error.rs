use ndgrad::NdError;

/// Coarse classification used by callers that must map failures to process
/// exit codes: bad inputs versus failures while doing the work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The request itself is invalid: arguments, configuration, shapes,
    /// unmet mathematical hypotheses.
    Validation,
    /// The request was valid but execution failed: I/O, decode errors,
    /// non-finite numerics.
    Runtime,
}

#[derive(Debug, thiserror::Error)]
pub enum SeiError {
    #[error(transparent)]
    Grad(#[from] NdError),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("non-finite loss at epoch {epoch}, step {step}: total = {total}")]
    NonFinite { epoch: u64, step: u64, total: f64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl SeiError {
    pub fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        SeiError::Invalid { what, detail: detail.into() }
    }

    /// Hypothesis violations count as validation errors: the caller asked for
    /// something the underlying theory rules out, which is a bad request, not
    /// a crash.
    pub fn class(&self) -> ErrorClass {
        match self {
            SeiError::Grad(_) | SeiError::Invalid { .. } | SeiError::Hypothesis(_) => {
                ErrorClass::Validation
            }
            SeiError::Io(_)
            | SeiError::Image(_)
            | SeiError::Json(_)
            | SeiError::NonFinite { .. }
            | SeiError::Checkpoint(_) => ErrorClass::Runtime,
        }
    }
}

pub type SeiResult<V> = Result<V, SeiError>;
