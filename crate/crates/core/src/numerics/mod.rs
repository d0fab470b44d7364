//! Dense tensors, feed-forward nets with exact backpropagation, Adam and
//! RMSprop updates, a central-difference gradient oracle and a Jacobi
//! eigensolver for small symmetric matrices.

mod eigen;
mod gradcheck;
mod net;
mod optim;
mod tensor;
pub mod weights;

use std::path::{Path, PathBuf};

pub use eigen::{sym_eigendecomposition, SymmetricEigen, MAX_EIGEN_DIM};
pub use gradcheck::{finite_difference_grad, relative_error, DEFAULT_STEP};
pub use net::{sigmoid, Activation, DenseLayer, DenseNet, ForwardCache, LayerGrads, ParamGrads};
pub use optim::{OptimizerKind, OptimizerState, ADAM_BETA1, ADAM_BETA2, EPSILON, RMSPROP_RHO};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NumericsError {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("invalid shape {0:?}")]
    InvalidShape(Vec<usize>),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("{0}")]
    InvalidHyperparameter(String),
    #[error("network is frozen; parameters cannot be updated")]
    Frozen,
    #[error("malformed weights file: {0}")]
    Format(String),
    #[error("{}: {source}", path.display())]
    IoAt {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NumericsError {
    pub(crate) fn io_at(path: &Path, source: std::io::Error) -> Self {
        NumericsError::IoAt {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[cfg(test)]
mod net_tests;
