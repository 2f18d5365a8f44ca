//! Numerical toolkit for interior transmission eigenvalue problems.
//!
//! The crate bundles a complex Bessel kernel, boundary symbols and their
//! class norms, a boundary parametrix (eikonal and transport jets), an
//! h-pseudodifferential calculus on the circle, an exact Bessel-based
//! model of the disk, an argument-principle root finder, and region and
//! counting utilities for the resulting spectra.

pub mod bessel;
pub mod disk;
pub mod error;
pub mod parametrix;
pub mod psido;
pub mod regions;
pub mod rootscan;
pub mod symbol;

pub use error::{Error, Result};
pub use num_complex::Complex64;
