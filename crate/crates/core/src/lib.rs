//! Signed discrete harmonic functions for symmetric zero-drift random walks
//! killed at the boundary of the quarter plane.
//!
//! The pipeline: a [`walk::StepSet`] gives the kernel, the kernel gives the
//! curve (`curve`), the curve's interior is mapped to the right half-plane
//! (`maps`), and the map turns a characterizing polynomial into a table of
//! harmonic values (`harmonic`).

pub mod scalar;
pub mod asymptotics;
pub mod curve;
pub mod harmonic;
pub mod maps;
pub mod series;
pub mod walk;

pub use scalar::{Field, Rational, Scalar};
