//! Qubit–pseudomode open-system simulation: Lindblad dynamics of a qubit
//! coupled to damped bosonic modes, its unitary counterpart with a
//! discretized continuum bath, and the correlation-function machinery
//! that links the two.

pub mod bath_fit;
pub mod correlation;
pub mod dilation;
pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod linalg;
pub mod quadrature;
pub mod unitary;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
