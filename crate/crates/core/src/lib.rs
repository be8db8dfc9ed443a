pub mod error;
pub mod kernels;
pub mod path;
pub mod process;
pub mod rare_event;
pub mod rng;

pub use error::{Error, Result};
