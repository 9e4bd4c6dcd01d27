//! Parsers for the small command-line sublanguages: length lists, index
//! windows, union requests, and truncation ladders.

use expbasis::compose::UnionRequest;
use expbasis::numerics::{golden, inv_pi, sqrt2_inv, BigInt, BigRational, DEFAULT_BITS};
use expbasis::{ExactScalar, Fixed};

use crate::Failure;

/// Parses a comma-separated length list. Grammar per token:
/// `p/q` (exact rational), `irr:<decimal>` (guarded fixed-point), or a named
/// constant `sqrt2inv` | `golden` | `invpi`.
pub fn lengths(s: &str, guard: f64) -> Result<Vec<ExactScalar>, Failure> {
    if !(guard.is_finite() && guard > 0.0) {
        return Err(Failure::malformed(format!("guard must be positive, got {guard}")));
    }
    let mut out = Vec::new();
    for token in s.split(',') {
        let token = token.trim();
        out.push(match token {
            "sqrt2inv" => ExactScalar::guarded(sqrt2_inv(DEFAULT_BITS), guard),
            "golden" => ExactScalar::guarded(golden(DEFAULT_BITS), guard),
            "invpi" => ExactScalar::guarded(inv_pi(DEFAULT_BITS), guard),
            t if t.starts_with("irr:") => decimal(&t[4..], guard)?,
            t if t.contains('/') => rational(t)?,
            t => {
                return Err(Failure::malformed(format!(
                    "unrecognized length '{t}': use p/q, irr:<decimal>, sqrt2inv, golden, or invpi"
                )))
            }
        });
    }
    if out.is_empty() {
        return Err(Failure::malformed("empty length list"));
    }
    Ok(out)
}

fn rational(t: &str) -> Result<ExactScalar, Failure> {
    let (p, q) = t
        .split_once('/')
        .ok_or_else(|| Failure::malformed(format!("bad rational '{t}'")))?;
    let p: BigInt = p
        .trim()
        .parse()
        .map_err(|_| Failure::malformed(format!("bad numerator in '{t}'")))?;
    let q: BigInt = q
        .trim()
        .parse()
        .map_err(|_| Failure::malformed(format!("bad denominator in '{t}'")))?;
    if q == BigInt::from(0) {
        return Err(Failure::malformed(format!("zero denominator in '{t}'")));
    }
    Ok(ExactScalar::from_bigrational(BigRational::new(p, q)))
}

/// `irr:` decimals become exact fixed-point values at the default precision,
/// tagged with the tie guard: the digits are taken literally (no float
/// round-trip), so 17+ digits keep full meaning.
fn decimal(t: &str, guard: f64) -> Result<ExactScalar, Failure> {
    let bad = || Failure::malformed(format!("bad decimal 'irr:{t}'"));
    let (int_part, frac_part) = match t.split_once('.') {
        Some((i, f)) => (i, f),
        None => (t, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() {
        BigInt::from(0)
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(ExactScalar::guarded(
        Fixed::from_ratio(&num, &den, DEFAULT_BITS),
        guard,
    ))
}

/// Parses a `lo:hi` half-open index window.
pub fn window(s: &str) -> Result<(i64, i64), Failure> {
    let bad = || Failure::malformed(format!("bad window '{s}': expected lo:hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
    if lo >= hi {
        return Err(Failure::malformed(format!("empty window '{s}'")));
    }
    Ok((lo, hi))
}

/// Parses a union request: `all`, `none`, or 1-based groups `1+2,1+3`.
pub fn unions(s: &str) -> Result<UnionRequest, Failure> {
    match s.trim() {
        "all" => Ok(UnionRequest::AllWithinBudget),
        "none" => Ok(UnionRequest::None),
        other => {
            let mut groups = Vec::new();
            for group in other.split(',') {
                let members: Result<Vec<usize>, _> =
                    group.split('+').map(|m| m.trim().parse::<usize>()).collect();
                let members = members.map_err(|_| {
                    Failure::malformed(format!("bad union group '{group}': expected like 1+2"))
                })?;
                groups.push(members);
            }
            Ok(UnionRequest::Explicit(groups))
        }
    }
}

/// Parses a strictly increasing truncation ladder like `64,128,256`.
pub fn truncations(s: &str) -> Result<Vec<usize>, Failure> {
    let sizes: Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse::<usize>()).collect();
    let sizes = sizes.map_err(|_| Failure::malformed(format!("bad truncation list '{s}'")))?;
    if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
        return Err(Failure::malformed("truncations must be at least 2"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::malformed("truncations must strictly increase"));
    }
    Ok(sizes)
}
