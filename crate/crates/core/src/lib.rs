//! Radial analysis of `(-Delta)^s + mu |x|^{-2s}` and a classifier for positive
//! solutions of `L u >= Q(x) u^p` on punctured balls, exterior domains and the
//! whole space.

pub mod classifier;
pub mod error;
pub mod exponents;
pub mod fracop;
pub mod iterate;
pub mod manifest;
mod quadrature;
pub mod radialfn;
pub mod solutions;
pub mod specfun;
pub mod spectrum;

pub use error::{Error, Result};
