pub mod error;
pub mod geometry;
pub mod lattice;
pub mod signal;
pub mod gabor;
pub mod seminorm;
pub mod wavefront;
pub mod fixtures;
pub mod suite;

pub use error::{Error, Result};
pub use num_complex::Complex64;
