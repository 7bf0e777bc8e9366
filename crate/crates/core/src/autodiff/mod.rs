//! Reverse-mode automatic differentiation over dense `f64` matrices.

mod ckpt;
mod gradcheck;
mod matrix;
mod optim;
mod params;
mod tape;

use thiserror::Error;

pub use ckpt::{read_checkpoint, write_checkpoint, CKPT_MAGIC};
pub use gradcheck::{max_gradient_error, max_param_gradient_error};
pub use matrix::Matrix;
pub use optim::{Adam, LrSchedule};
pub use params::{ParamId, ParamStore, Parameter};
pub(crate) use tape::sigmoid;
pub use tape::{DropoutKey, Gradients, SparseRows, Tape, Var};

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("segment id {id} out of range for {segments} segments")]
    SegmentOutOfRange { id: usize, segments: usize },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: (usize, usize) },
    #[error("loss over an empty batch")]
    EmptyBatch,
    #[error("dropout probability must be in [0, 1), got {0}")]
    InvalidProbability(f64),
    #[error("non-finite gradient in parameter {name}")]
    NonFiniteGradient { name: String },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AutodiffError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, AutodiffError::NonFiniteGradient { .. })
    }
}
