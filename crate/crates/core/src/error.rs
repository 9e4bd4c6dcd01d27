//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building or certifying a partition.
#[derive(Debug, Error)]
pub enum Error {
    /// A guarded value landed within its guard radius of an integer, so a
    /// floor cannot be certified either way. Usually means an input declared
    /// irrational is rational (or was supplied with too little precision).
    #[error("precision tie in {context}: guarded value within {guard:e} of an integer")]
    PrecisionTie { context: String, guard: f64 },

    /// A lattice index or floor left the representable `i64` range.
    #[error("integer overflow in {context}: value {value} exceeds the index range")]
    IndexOverflow { context: String, value: String },

    #[error("invalid partition spec: {0}")]
    InvalidSpec(String),

    /// Two frequency sets that must be disjoint share a point.
    #[error("frequency sets are not disjoint: {frequency} appears on both sides")]
    RangeCollision { frequency: String },

    /// A block failed the local counting identity.
    #[error("block {block}: expected {expected} source points against {found} target slots")]
    CountingMismatch {
        block: i64,
        expected: usize,
        found: usize,
    },

    #[error("map is not injective: source indices {left} and {right} collide")]
    NotInjective { left: i64, right: i64 },

    #[error("range not separated: gap {gap:e} below required {need:e}")]
    NotSeparated { gap: f64, need: f64 },

    /// The balancing walk could not bracket a sign change (cannot happen when
    /// the block-size precondition holds; reported with the extremal sums).
    #[error("block {block}: balancing walk failed to cross zero (S range [{s_min}, {s_max}])")]
    NoCrossing { block: i64, s_min: f64, s_max: f64 },

    /// A certificate missed its budget even after the block-doubling search.
    #[error("budget not met after {attempts} doublings: measured {measured:e} > target {target:e}")]
    BudgetExceeded {
        measured: f64,
        target: f64,
        attempts: u32,
    },

    /// A verification window too small for the requested block structure.
    #[error("window spans {have} blocks of length {block_len}, need at least {need}")]
    WindowTooSmall { have: i64, need: i64, block_len: f64 },

    #[error("duplicate frequency {frequency} in Gram system")]
    DuplicateFrequency { frequency: f64 },

    #[error("malformed input: {0}")]
    MalformedInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
