use thiserror::Error;

/// Errors raised by tensor construction and graph operations.
///
/// Shape problems are reported eagerly, when the op is recorded, never
/// during `backward`.
#[derive(Debug, Error)]
pub enum NdError {
    #[error("shape mismatch: {left:?} vs {right:?} in {op}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("{op} expects a rank-{want} tensor, got shape {got:?}")]
    RankMismatch {
        op: &'static str,
        want: usize,
        got: Vec<usize>,
    },

    #[error("data length {len} does not match shape {shape:?}")]
    LengthMismatch { shape: Vec<usize>, len: usize },

    #[error("kernel extents {kernel:?} exceed image extents {image:?}")]
    KernelTooLarge {
        kernel: Vec<usize>,
        image: Vec<usize>,
    },

    #[error("kernel extents {0:?} must be odd")]
    EvenKernel(Vec<usize>),

    #[error("extents {extents:?} not divisible by factor {factor}")]
    NotDivisible { extents: Vec<usize>, factor: usize },

    #[error("{op}: {what}")]
    Invalid { op: &'static str, what: String },

    #[error("backward root must be a scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),

    #[error("variables belong to different graphs in {0}")]
    GraphMismatch(&'static str),
}

pub type NdResult<V> = Result<V, NdError>;
