use thiserror::Error;

use crate::kernels::KernelError;
use crate::path::PathError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("worker pool: {0}")]
    Pool(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
