//! Arbitrary-precision fixed-point arithmetic on a dyadic grid.
//!
//! A [`Fixed`] stores a `BigInt` mantissa `m` and a scale `bits`, and stands
//! for the dyadic rational `m / 2^bits`. Addition, subtraction and negation
//! are exact. Multiplication, division and square root floor the true result
//! onto the grid, so each is accurate to one unit in the last place with the
//! error directed toward −∞ (square root toward 0, which is the same thing on
//! its nonnegative domain). One-sided errors this small are harmless for the
//! tie logic upstream: a computed value can sit a few ulps below the true one,
//! never a guard radius away.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Default mantissa width: 192 bits ≈ 57 decimal digits, comfortably past the
/// 80-bit effective precision the guarded-input route asks for.
pub const DEFAULT_BITS: u32 = 192;

/// A dyadic fixed-point number `mantissa / 2^bits`.
#[derive(Clone, Debug)]
pub struct Fixed {
    mantissa: BigInt,
    bits: u32,
}

impl Fixed {
    pub fn from_mantissa(mantissa: BigInt, bits: u32) -> Self {
        Fixed { mantissa, bits }
    }

    pub fn zero(bits: u32) -> Self {
        Fixed {
            mantissa: BigInt::zero(),
            bits,
        }
    }

    pub fn one(bits: u32) -> Self {
        Fixed {
            mantissa: BigInt::one() << bits,
            bits,
        }
    }

    pub fn from_i64(v: i64, bits: u32) -> Self {
        Fixed {
            mantissa: BigInt::from(v) << bits,
            bits,
        }
    }

    /// Nearest grid point to `num/den` (ties round up). Panics if `den` is 0.
    pub fn from_ratio(num: &BigInt, den: &BigInt, bits: u32) -> Self {
        assert!(!den.is_zero(), "Fixed::from_ratio: zero denominator");
        let (num, den) = if den.is_negative() {
            (-num, -den)
        } else {
            (num.clone(), den.clone())
        };
        // round(x) = floor((2x + 1) / 2) with x = num·2^bits / den
        let mantissa = ((num << (bits + 1)) + &den).div_floor(&(den << 1));
        Fixed { mantissa, bits }
    }

    /// Exact conversion from a finite `f64` (every finite float is dyadic);
    /// rounds to the grid only when the float has fractional bits below it.
    pub fn from_f64(v: f64, bits: u32) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        let r = num_rational::BigRational::from_float(v)?;
        Some(Self::from_ratio(r.numer(), r.denom(), bits))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    /// Re-scale to a different grid; widening is exact, narrowing rounds to
    /// nearest.
    pub fn with_bits(&self, bits: u32) -> Self {
        if bits >= self.bits {
            Fixed {
                mantissa: &self.mantissa << (bits - self.bits),
                bits,
            }
        } else {
            let down = self.bits - bits;
            let mantissa = ((&self.mantissa >> (down - 1)) + 1) >> 1;
            Fixed { mantissa, bits }
        }
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, u32) {
        let bits = self.bits.max(other.bits);
        let a = &self.mantissa << (bits - self.bits);
        let b = &other.mantissa << (bits - other.bits);
        (a, b, bits)
    }

    pub fn abs(&self) -> Self {
        Fixed {
            mantissa: self.mantissa.abs(),
            bits: self.bits,
        }
    }

    /// ⌊value⌋ as an integer. `BigInt`'s right shift floors, which is exactly
    /// the semantics needed for negative mantissas.
    pub fn floor_int(&self) -> BigInt {
        &self.mantissa >> self.bits
    }

    /// value − ⌊value⌋, exactly; lies in [0, 1).
    pub fn frac(&self) -> Self {
        let fl = self.floor_int() << self.bits;
        Fixed {
            mantissa: &self.mantissa - fl,
            bits: self.bits,
        }
    }

    /// Exact distance to the nearest integer, in [0, ½].
    pub fn dist_to_int(&self) -> Self {
        let frac = self.frac();
        let comp = (BigInt::one() << self.bits) - &frac.mantissa;
        Fixed {
            mantissa: frac.mantissa.min(comp),
            bits: self.bits,
        }
    }

    /// Floor square root on the grid; panics on negative input.
    pub fn sqrt(&self) -> Self {
        assert!(
            !self.mantissa.is_negative(),
            "Fixed::sqrt of negative value"
        );
        // √(m/2^b) = √(m·2^b) / 2^b
        let wide = (&self.mantissa << self.bits).to_biguint().unwrap();
        Fixed {
            mantissa: BigInt::from_biguint(Sign::Plus, wide.sqrt()),
            bits: self.bits,
        }
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.mantissa.to_f64().unwrap_or(f64::NAN);
        m * (-(self.bits as f64)).exp2()
    }

    /// π on the given grid via Machin's formula, computed with 32 guard bits.
    pub fn pi(bits: u32) -> Self {
        const GUARD_BITS: u32 = 32;
        let w = bits + GUARD_BITS;
        let p = atan_inv_scaled(5, w) * 16 - atan_inv_scaled(239, w) * 4;
        let mantissa = (p + (BigInt::one() << (GUARD_BITS - 1))) >> GUARD_BITS;
        Fixed { mantissa, bits }
    }
}

/// round-ish(atan(1/x) · 2^w) by the alternating Taylor series; each term is
/// floored, so the result is within a few ulps of the true value at scale 2^w.
fn atan_inv_scaled(x: u32, w: u32) -> BigInt {
    let x = BigInt::from(x);
    let x2 = &x * &x;
    let mut power = (BigInt::one() << w) / &x; // 2^w / x^(2k+1)
    let mut sum = power.clone();
    let mut k = 1u32;
    loop {
        power /= &x2;
        if power.is_zero() {
            break;
        }
        let term = &power / (2 * k + 1);
        if term.is_zero() {
            break;
        }
        if k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        k += 1;
    }
    sum
}

impl PartialEq for Fixed {
    fn eq(&self, other: &Self) -> bool {
        let (a, b, _) = self.aligned(other);
        a == b
    }
}

impl Eq for Fixed {}

impl PartialOrd for Fixed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fixed {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl Add for &Fixed {
    type Output = Fixed;
    fn add(self, rhs: &Fixed) -> Fixed {
        let (a, b, bits) = self.aligned(rhs);
        Fixed {
            mantissa: a + b,
            bits,
        }
    }
}

impl Sub for &Fixed {
    type Output = Fixed;
    fn sub(self, rhs: &Fixed) -> Fixed {
        let (a, b, bits) = self.aligned(rhs);
        Fixed {
            mantissa: a - b,
            bits,
        }
    }
}

impl Mul for &Fixed {
    type Output = Fixed;
    fn mul(self, rhs: &Fixed) -> Fixed {
        let (a, b, bits) = self.aligned(rhs);
        Fixed {
            mantissa: (a * b) >> bits,
            bits,
        }
    }
}

impl Div for &Fixed {
    type Output = Fixed;
    fn div(self, rhs: &Fixed) -> Fixed {
        let (a, b, bits) = self.aligned(rhs);
        assert!(!b.is_zero(), "Fixed division by zero");
        Fixed {
            mantissa: (a << bits).div_floor(&b),
            bits,
        }
    }
}

impl Neg for &Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed {
            mantissa: -&self.mantissa,
            bits: self.bits,
        }
    }
}
