//! Scalar arithmetic for lattice geometry: exact rationals, guarded
//! high-precision values, and tie-aware floors.
//!
//! Interval lengths enter the construction either as exact rationals or as
//! irrationals, which no finite program holds exactly. [`ExactScalar`] covers
//! both regimes: the `Rational` variant computes with `BigRational` and never
//! loses information; the `Guarded` variant pairs a fixed-point value (see
//! [`Fixed`]) with an explicit guard radius. Every floor that lands within the
//! guard of an integer is reported as a tie instead of being silently
//! resolved — for genuinely irrational data that never happens, so a tie is
//! diagnostic of a mis-declared input or insufficient precision.

pub mod fixed;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
pub use fixed::{Fixed, DEFAULT_BITS};
// Re-exported so downstream crates can build exact scalars without pinning
// their own bignum dependency.
pub use num_bigint::BigInt;
pub use num_rational::BigRational;

/// Default tie-detection radius for guarded values.
pub const DEFAULT_GUARD: f64 = 1e-12;

/// A scalar that knows whether it is exact.
///
/// Comparisons and equality are exact value comparisons in both regimes
/// (a rational and a guarded value compare by cross-multiplying against the
/// dyadic mantissa); guards never influence ordering, only floor ties.
#[derive(Clone, Debug)]
pub enum ExactScalar {
    Rational(BigRational),
    Guarded { value: Fixed, guard: f64 },
}

impl ExactScalar {
    pub fn rational(num: i64, den: i64) -> Self {
        ExactScalar::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_bigrational(r: BigRational) -> Self {
        ExactScalar::Rational(r)
    }

    pub fn guarded(value: Fixed, guard: f64) -> Self {
        assert!(guard > 0.0, "guard must be positive");
        ExactScalar::Guarded { value, guard }
    }

    /// A guarded scalar from a plain float, at the default precision/guard.
    pub fn from_f64_guarded(v: f64, guard: f64) -> Option<Self> {
        Some(Self::guarded(Fixed::from_f64(v, DEFAULT_BITS)?, guard))
    }

    /// The exact dyadic rational a finite float denotes.
    pub fn from_f64_exact(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(ExactScalar::Rational)
    }

    pub fn zero() -> Self {
        ExactScalar::Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactScalar::Rational(BigRational::one())
    }

    pub fn half() -> Self {
        ExactScalar::rational(1, 2)
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, ExactScalar::Rational(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            ExactScalar::Rational(r) => Some(r),
            ExactScalar::Guarded { .. } => None,
        }
    }

    /// The tie radius carried by this value (0 for exact rationals).
    pub fn guard(&self) -> f64 {
        match self {
            ExactScalar::Rational(_) => 0.0,
            ExactScalar::Guarded { guard, .. } => *guard,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExactScalar::Rational(r) => r.numer().to_f64().unwrap_or(f64::NAN)
                / r.denom().to_f64().unwrap_or(f64::NAN),
            ExactScalar::Guarded { value, .. } => value.to_f64(),
        }
    }

    pub fn to_fixed(&self, bits: u32) -> Fixed {
        match self {
            ExactScalar::Rational(r) => Fixed::from_ratio(r.numer(), r.denom(), bits),
            ExactScalar::Guarded { value, .. } => {
                if value.bits() >= bits {
                    value.clone()
                } else {
                    value.with_bits(bits)
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ExactScalar::Rational(r) => r.is_zero(),
            ExactScalar::Guarded { value, .. } => value.is_zero(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            ExactScalar::Rational(r) => r.is_positive(),
            ExactScalar::Guarded { value, .. } => !value.is_negative() && !value.is_zero(),
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_positive() || self.is_zero() {
            self.clone()
        } else {
            -self
        }
    }

    pub fn recip(&self) -> Self {
        &ExactScalar::one() / self
    }

    /// Square root: stays rational when the operand is a perfect square of a
    /// rational, otherwise drops to a guarded value at default precision.
    pub fn sqrt(&self) -> Self {
        if let ExactScalar::Rational(r) = self {
            assert!(!r.is_negative(), "sqrt of negative scalar");
            let ns = r.numer().sqrt();
            let ds = r.denom().sqrt();
            if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
                return ExactScalar::Rational(BigRational::new(ns, ds));
            }
        }
        let (value, guard) = match self {
            ExactScalar::Rational(r) => (
                Fixed::from_ratio(r.numer(), r.denom(), DEFAULT_BITS).sqrt(),
                DEFAULT_GUARD,
            ),
            ExactScalar::Guarded { value, guard } => (value.sqrt(), *guard),
        };
        ExactScalar::Guarded { value, guard }
    }

    /// Working precision for a binary op touching this operand.
    fn op_bits(&self) -> u32 {
        match self {
            ExactScalar::Rational(_) => DEFAULT_BITS,
            ExactScalar::Guarded { value, .. } => value.bits().max(DEFAULT_BITS),
        }
    }

    /// ⌊self⌋ with tie flag; errors only if the floor leaves `i64`.
    pub fn floor_i64(&self, context: &str) -> Result<(i64, bool)> {
        match self {
            ExactScalar::Rational(r) => {
                let fl = r.floor().to_integer();
                let v = fl.to_i64().ok_or_else(|| Error::IndexOverflow {
                    context: context.to_string(),
                    value: fl.to_string(),
                })?;
                Ok((v, false))
            }
            ExactScalar::Guarded { value, guard } => {
                let fl = value.floor_int();
                let v = fl.to_i64().ok_or_else(|| Error::IndexOverflow {
                    context: context.to_string(),
                    value: fl.to_string(),
                })?;
                let radius = Fixed::from_f64(*guard, value.bits())
                    .expect("guard is finite");
                let tie = value.dist_to_int() < radius;
                Ok((v, tie))
            }
        }
    }

    /// Like [`Self::floor_i64`] but promotes a tie to a hard error.
    pub fn floor_i64_strict(&self, context: &str) -> Result<i64> {
        let (v, tie) = self.floor_i64(context)?;
        if tie {
            return Err(Error::PrecisionTie {
                context: context.to_string(),
                guard: self.guard(),
            });
        }
        Ok(v)
    }

    /// ⌈self⌉ with tie flag.
    pub fn ceil_i64(&self, context: &str) -> Result<(i64, bool)> {
        let (v, tie) = (-self).floor_i64(context)?;
        Ok((-v, tie))
    }
}

/// ⌊β·x⌋ together with a tie flag.
///
/// Exact (and never tied) when both operands are rational; for guarded
/// operands the flag is set when β·x sits within the combined guard of an
/// integer. The only error is overflow of the `i64` index range.
pub fn floor_scaled(x: &ExactScalar, beta: &ExactScalar) -> Result<(i64, bool)> {
    (beta * x).floor_i64("floor_scaled")
}

/// a/total in lowest terms, when both are exact rationals with 0 < a < total;
/// `None` for guarded (declared-irrational) inputs.
pub fn lowest_terms_ratio(a: &ExactScalar, total: &ExactScalar) -> Option<(BigInt, BigInt)> {
    let (ar, tr) = (a.as_rational()?, total.as_rational()?);
    if !ar.is_positive() || ar >= tr {
        return None;
    }
    let q = ar / tr; // BigRational keeps lowest terms, positive denominator
    Some((q.numer().clone(), q.denom().clone()))
}

/// 1/√2 ≈ 0.70710678…, from the implementation's own square root.
pub fn sqrt2_inv(bits: u32) -> Fixed {
    Fixed::from_ratio(&BigInt::one(), &BigInt::from(2), bits).sqrt()
}

/// (√5 − 1)/2 ≈ 0.61803398…, the golden-ratio conjugate.
pub fn golden(bits: u32) -> Fixed {
    let five = Fixed::from_i64(5, bits);
    let one = Fixed::one(bits);
    let half = Fixed::from_ratio(&BigInt::one(), &BigInt::from(2), bits);
    &(&five.sqrt() - &one) * &half
}

/// 1/π ≈ 0.31830988….
pub fn inv_pi(bits: u32) -> Fixed {
    &Fixed::one(bits) / &Fixed::pi(bits)
}

fn binop(
    lhs: &ExactScalar,
    rhs: &ExactScalar,
    rational: impl Fn(&BigRational, &BigRational) -> BigRational,
    guarded: impl Fn(&Fixed, &Fixed) -> Fixed,
) -> ExactScalar {
    match (lhs, rhs) {
        (ExactScalar::Rational(a), ExactScalar::Rational(b)) => {
            ExactScalar::Rational(rational(a, b))
        }
        _ => {
            let bits = lhs.op_bits().max(rhs.op_bits());
            let value = guarded(&lhs.to_fixed(bits), &rhs.to_fixed(bits));
            ExactScalar::Guarded {
                value,
                guard: lhs.guard().max(rhs.guard()),
            }
        }
    }
}

impl Add for &ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &ExactScalar) -> ExactScalar {
        binop(self, rhs, |a, b| a + b, |a, b| a + b)
    }
}

impl Sub for &ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &ExactScalar) -> ExactScalar {
        binop(self, rhs, |a, b| a - b, |a, b| a - b)
    }
}

impl Mul for &ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: &ExactScalar) -> ExactScalar {
        binop(self, rhs, |a, b| a * b, |a, b| a * b)
    }
}

impl Div for &ExactScalar {
    type Output = ExactScalar;
    fn div(self, rhs: &ExactScalar) -> ExactScalar {
        binop(self, rhs, |a, b| a / b, |a, b| a / b)
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        match self {
            ExactScalar::Rational(r) => ExactScalar::Rational(-r),
            ExactScalar::Guarded { value, guard } => ExactScalar::Guarded {
                value: -value,
                guard: *guard,
            },
        }
    }
}

impl PartialEq for ExactScalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExactScalar {}

impl PartialOrd for ExactScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExactScalar::Rational(a), ExactScalar::Rational(b)) => a.cmp(b),
            (ExactScalar::Guarded { value: a, .. }, ExactScalar::Guarded { value: b, .. }) => {
                a.cmp(b)
            }
            (ExactScalar::Rational(r), ExactScalar::Guarded { value, .. }) => {
                cmp_rational_fixed(r, value)
            }
            (ExactScalar::Guarded { value, .. }, ExactScalar::Rational(r)) => {
                cmp_rational_fixed(r, value).reverse()
            }
        }
    }
}

/// Exact comparison p/q vs m/2^b by cross multiplication.
fn cmp_rational_fixed(r: &BigRational, v: &Fixed) -> Ordering {
    let lhs = r.numer() << v.bits();
    let rhs = v.mantissa() * r.denom();
    lhs.cmp(&rhs)
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactScalar::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            ExactScalar::Guarded { value, guard } => {
                write!(f, "{:.17}±{:.0e}", value.to_f64(), guard)
            }
        }
    }
}

fn bigint_to_json(x: &BigInt) -> serde_json::Value {
    match x.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::from(x.to_string()),
    }
}

fn bigint_from_json(v: &serde_json::Value) -> Option<BigInt> {
    if let Some(i) = v.as_i64() {
        return Some(BigInt::from(i));
    }
    v.as_str()?.parse().ok()
}

impl Serialize for ExactScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let value = match self {
            ExactScalar::Rational(r) => serde_json::json!({
                "rational": [bigint_to_json(r.numer()), bigint_to_json(r.denom())],
            }),
            ExactScalar::Guarded { value, guard } => serde_json::json!({
                "float": value.to_f64(),
                "guard": guard,
                // Full-precision payload so a reader can reproduce every
                // downstream measurement bit for bit; the "float" field is
                // only a human-readable echo.
                "mantissa": value.mantissa().to_string(),
                "bits": value.bits(),
            }),
        };
        value.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(deserializer)?;
        if let Some(arr) = v.get("rational").and_then(|r| r.as_array()) {
            if arr.len() != 2 {
                return Err(D::Error::custom("rational needs [num, den]"));
            }
            let num = bigint_from_json(&arr[0])
                .ok_or_else(|| D::Error::custom("bad rational numerator"))?;
            let den = bigint_from_json(&arr[1])
                .ok_or_else(|| D::Error::custom("bad rational denominator"))?;
            if den.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            return Ok(ExactScalar::Rational(BigRational::new(num, den)));
        }
        if let Some(f) = v.get("float").and_then(|f| f.as_f64()) {
            let guard = v
                .get("guard")
                .and_then(|g| g.as_f64())
                .unwrap_or(DEFAULT_GUARD);
            // Prefer the exact payload when present; fall back to the f64
            // echo for hand-written inputs.
            if let (Some(m), Some(bits)) = (
                v.get("mantissa").and_then(|m| m.as_str()),
                v.get("bits").and_then(|b| b.as_u64()),
            ) {
                let mantissa: BigInt = m
                    .parse()
                    .map_err(|_| D::Error::custom("bad mantissa string"))?;
                let bits = u32::try_from(bits).map_err(|_| D::Error::custom("bad bits"))?;
                return Ok(ExactScalar::guarded(
                    Fixed::from_mantissa(mantissa, bits),
                    guard,
                ));
            }
            return ExactScalar::from_f64_guarded(f, guard)
                .ok_or_else(|| D::Error::custom("non-finite float"));
        }
        Err(D::Error::custom(
            "expected {\"rational\":[num,den]} or {\"float\":v,\"guard\":g}",
        ))
    }
}
