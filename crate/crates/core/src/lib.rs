//! Numerical engine for best approximation of almost-periodic spectra in
//! sequence norms: moduli of smoothness, Jackson-type bounds, sharp constants,
//! inverse estimates and smoothness classes.

pub mod classes;
pub mod error;
pub mod inverse;
pub mod jackson;
pub mod minimax;
pub mod quadrature;
pub mod report;
pub mod simplex;
pub mod smoothness;
pub mod spectrum;

pub use error::{Error, Result};
pub use spectrum::{ExponentLadder, Spectrum, SpectrumEntry, SpectrumKind};
