pub mod analysis;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod matrix;
pub mod spin;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, C64};
