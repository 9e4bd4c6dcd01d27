//! Construction and certification of exponential Riesz bases for interval
//! partitions.
//!
//! Given a partition of `[0, 1]` into interval lengths `b_1, …, b_n`, this
//! crate builds a partition of the half-integer lattice `ℤ+½` into frequency
//! sets `Λ_1, …, Λ_n` such that the exponential system of each `Λ_j` forms a
//! Riesz basis for `L²` of an interval of length `b_j` — and such that unions
//! of the `Λ_j` remain Riesz bases for the union intervals. The construction
//! is fully explicit: lattice rounding with parity corrections, block-local
//! rearrangement balancing, and union combination, each stage emitting a
//! numerical certificate of its averaged-displacement (Avdonin) condition.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`]: exact rational / guarded fixed-point scalars, tie-aware
//!   floors;
//! - [`lattice`]: affine lattices `(ℤ+α)/a`, window enumeration, counting;
//! - [`rounding`]: the paired rounding maps with odd/even denominator
//!   corrections and Beatty-sequence partition checks;
//! - [`avdonin`]: realized frequency maps, block-discrepancy certificates,
//!   equidistribution measurements;
//! - [`rearrange`]: block balancing of composed maps within certified budgets;
//! - [`compose`]: the full partition driver and union combination;
//! - [`analysis`]: Gram spectra, completeness residuals, Vandermonde frame
//!   bounds, Beurling densities, and negative-control families.

pub mod analysis;
pub mod avdonin;
pub mod compose;
pub mod error;
pub mod lattice;
pub mod numerics;
pub mod rearrange;
pub mod rounding;

pub use error::{Error, Result};
pub use numerics::{ExactScalar, Fixed, DEFAULT_BITS, DEFAULT_GUARD};
