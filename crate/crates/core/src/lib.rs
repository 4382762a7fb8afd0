pub mod error;
mod fft;
pub mod gabor;
pub mod grid;
pub mod metaplectic;
pub mod propagators;
mod quadrature;
pub mod symplectic;
pub mod wavefront;
pub mod weyl;

pub use error::{Error, Result};
