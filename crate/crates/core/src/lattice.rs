//! Affine lattices `(ℤ+α)/a`: window enumeration and exact counting.
//!
//! A lattice is stored by its reciprocal spacing `a > 0` and offset `α`, so
//! consecutive points differ by exactly `1/a`. Everything here is index-first:
//! to enumerate a window we solve for the integer index range with exact
//! floors and then materialize points, rather than stepping a running value by
//! `1/a` and accumulating drift. The one deliberate exception,
//! [`scan_floors`], steps incrementally but in *exact* fixed-point adds, so
//! the only error is the sub-ulp bias of the precomputed step itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ExactScalar, Fixed};

/// The lattice `(ℤ+α)/a`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AffineLattice {
    a: ExactScalar,
    alpha: ExactScalar,
}

/// A half-open interval `[lo, hi)` of the frequency line.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Window {
    pub lo: ExactScalar,
    pub hi: ExactScalar,
}

impl Window {
    pub fn new(lo: ExactScalar, hi: ExactScalar) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidSpec(format!(
                "window [{lo}, {hi}) is empty"
            )));
        }
        Ok(Window { lo, hi })
    }

    pub fn from_i64(lo: i64, hi: i64) -> Self {
        Window {
            lo: ExactScalar::rational(lo, 1),
            hi: ExactScalar::rational(hi, 1),
        }
    }

    pub fn length(&self) -> ExactScalar {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &ExactScalar) -> bool {
        &self.lo <= x && x < &self.hi
    }
}

impl AffineLattice {
    pub fn new(a: ExactScalar, alpha: ExactScalar) -> Result<Self> {
        if !a.is_positive() {
            return Err(Error::InvalidSpec(format!(
                "lattice reciprocal spacing must be positive, got {a}"
            )));
        }
        Ok(AffineLattice { a, alpha })
    }

    /// The half-integer lattice `ℤ+½`.
    pub fn half_integers() -> Self {
        AffineLattice {
            a: ExactScalar::one(),
            alpha: ExactScalar::half(),
        }
    }

    /// `(ℤ+½)/a`, the lattice carrying an interval of length `a`.
    pub fn scaled_half_integers(a: ExactScalar) -> Result<Self> {
        Self::new(a, ExactScalar::half())
    }

    pub fn a(&self) -> &ExactScalar {
        &self.a
    }

    pub fn alpha(&self) -> &ExactScalar {
        &self.alpha
    }

    /// The point `(k+α)/a`.
    pub fn point(&self, k: i64) -> ExactScalar {
        let kk = ExactScalar::rational(k, 1);
        &(&kk + &self.alpha) / &self.a
    }

    pub fn spacing(&self) -> ExactScalar {
        self.a.recip()
    }

    /// Indices `k` with `(k+α)/a ∈ [lo, hi)`, as a half-open range.
    ///
    /// Solved exactly: `k ≥ a·lo − α` and `k < a·hi − α`, with guarded
    /// boundary ties escalated to [`Error::PrecisionTie`].
    pub fn index_range(&self, w: &Window) -> Result<(i64, i64)> {
        let lo_bound = &(&self.a * &w.lo) - &self.alpha;
        let hi_bound = &(&self.a * &w.hi) - &self.alpha;
        let (k_lo, tie_lo) = lo_bound.ceil_i64("lattice window low edge")?;
        let (k_hi, tie_hi) = hi_bound.ceil_i64("lattice window high edge")?;
        if tie_lo || tie_hi {
            return Err(Error::PrecisionTie {
                context: "lattice window edge".to_string(),
                guard: self.a.guard().max(w.lo.guard()).max(w.hi.guard()),
            });
        }
        Ok((k_lo, k_hi.max(k_lo)))
    }

    /// All `(index, point)` pairs in the window, ascending.
    pub fn enumerate(&self, w: &Window) -> Result<Vec<(i64, ExactScalar)>> {
        let (k_lo, k_hi) = self.index_range(w)?;
        Ok((k_lo..k_hi).map(|k| (k, self.point(k))).collect())
    }

    pub fn count_in(&self, w: &Window) -> Result<i64> {
        let (k_lo, k_hi) = self.index_range(w)?;
        Ok(k_hi - k_lo)
    }
}

/// `F(a, N)`: the number of points of `(ℤ+½)/a` in `[0, N)`.
///
/// Equals the classical `⌊aN + ½⌋` whenever `aN + ½` is not an integer (in
/// particular for all irrational `a`); computed here as the exact half-open
/// count `⌈aN + ½⌉ − 1`, which also handles rational boundary hits.
pub fn count_f(a: &ExactScalar, n: i64) -> Result<i64> {
    let expr = &(a * &ExactScalar::rational(n, 1)) + &ExactScalar::half();
    let (c, tie) = expr.ceil_i64("count_f")?;
    if tie {
        return Err(Error::PrecisionTie {
            context: "count_f".to_string(),
            guard: a.guard(),
        });
    }
    Ok(c - 1)
}

/// `G(a, N) = −⌈−aN + ½⌉ + 1`: the number of points of `(ℤ+½)/a` in `[−N, 0)`.
pub fn count_g(a: &ExactScalar, n: i64) -> Result<i64> {
    let expr = &(&(&(-a) * &ExactScalar::rational(n, 1)) + &ExactScalar::half());
    let (c, tie) = expr.ceil_i64("count_g")?;
    if tie {
        return Err(Error::PrecisionTie {
            context: "count_g".to_string(),
            guard: a.guard(),
        });
    }
    Ok(-c + 1)
}

/// Streams `⌊(k+α)/a⌋` for every `k ∈ [k_lo, k_hi)` into `f`, exactly.
///
/// Rational lattices run on pure big-integer division (exact integer hits are
/// legitimate, not ties). Guarded lattices run an incremental fixed-point scan
/// — one exact add per step — and report a precision tie as soon as any value
/// lands within the guard of an integer.
pub fn scan_floors<F: FnMut(i64, i64)>(
    a: &ExactScalar,
    alpha: &ExactScalar,
    k_lo: i64,
    k_hi: i64,
    context: &str,
    mut f: F,
) -> Result<()> {
    use num_integer::Integer;
    use num_traits::ToPrimitive;

    if k_lo >= k_hi {
        return Ok(());
    }
    match (a.as_rational(), alpha.as_rational()) {
        (Some(ra), Some(ralpha)) => {
            // (k + pα/qα) / (pa/qa) = ((k·qα + pα)·qa) / (qα·pa)
            let (pa, qa) = (ra.numer(), ra.denom());
            let (palpha, qalpha) = (ralpha.numer(), ralpha.denom());
            let denom = qalpha * pa;
            for k in k_lo..k_hi {
                let numer = (k * qalpha + palpha) * qa;
                let fl = numer.div_floor(&denom);
                let fl = fl.to_i64().ok_or_else(|| Error::IndexOverflow {
                    context: context.to_string(),
                    value: fl.to_string(),
                })?;
                f(k, fl);
            }
            Ok(())
        }
        _ => {
            let bits = crate::numerics::DEFAULT_BITS
                .max(a.to_fixed(crate::numerics::DEFAULT_BITS).bits());
            let guard = a.guard().max(alpha.guard()).max(crate::numerics::DEFAULT_GUARD);
            let radius = Fixed::from_f64(guard, bits).expect("finite guard");
            let start = &(&ExactScalar::rational(k_lo, 1) + alpha) / a;
            let step = a.recip();
            let mut v = start.to_fixed(bits);
            let step = step.to_fixed(bits);
            for k in k_lo..k_hi {
                if v.dist_to_int() < radius {
                    return Err(Error::PrecisionTie {
                        context: format!("{context} at index {k}"),
                        guard,
                    });
                }
                let fl = v.floor_int();
                let fl = fl.to_i64().ok_or_else(|| Error::IndexOverflow {
                    context: context.to_string(),
                    value: fl.to_string(),
                })?;
                f(k, fl);
                v = &v + &step;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{golden, sqrt2_inv, DEFAULT_BITS, DEFAULT_GUARD};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const RANDOM_WINDOW_CASES: usize = 1_000;

    fn sqrt2_inv_scalar() -> ExactScalar {
        ExactScalar::guarded(sqrt2_inv(DEFAULT_BITS), DEFAULT_GUARD)
    }

    #[test]
    fn enumerate_contract_examples() {
        // (ℤ+½)/(1/5) = 5(ℤ+½) over [0, 25)
        let l = AffineLattice::scaled_half_integers(ExactScalar::rational(1, 5)).unwrap();
        let pts = l.enumerate(&Window::from_i64(0, 25)).unwrap();
        let want: Vec<ExactScalar> = [5, 15, 25, 35, 45]
            .iter()
            .map(|&n| ExactScalar::rational(n, 2))
            .collect();
        assert_eq!(pts.iter().map(|(_, p)| p.clone()).collect::<Vec<_>>(), want);

        // unit lattice over [0, 3)
        let l = AffineLattice::half_integers();
        let pts = l.enumerate(&Window::from_i64(0, 3)).unwrap();
        assert_eq!(
            pts.iter().map(|(_, p)| p.clone()).collect::<Vec<_>>(),
            vec![
                ExactScalar::rational(1, 2),
                ExactScalar::rational(3, 2),
                ExactScalar::rational(5, 2)
            ]
        );

        // √2(ℤ+½) over [0, 10): 7 points starting ≈ 0.7071, 2.1213
        let l = AffineLattice::scaled_half_integers(sqrt2_inv_scalar()).unwrap();
        let pts = l.enumerate(&Window::from_i64(0, 10)).unwrap();
        assert_eq!(pts.len(), 7);
        assert!((pts[0].1.to_f64() - 0.7071067811865476).abs() < 1e-15);
        assert!((pts[1].1.to_f64() - 2.121320343559643).abs() < 1e-15);
        assert_eq!(count_f(&sqrt2_inv_scalar(), 10).unwrap(), 7);
    }

    #[test]
    fn counting_formulas_match_enumeration() {
        let cases = [
            ExactScalar::rational(1, 2),
            ExactScalar::rational(2, 5),
            ExactScalar::rational(7, 9),
            sqrt2_inv_scalar(),
            ExactScalar::guarded(golden(DEFAULT_BITS), DEFAULT_GUARD),
        ];
        for a in &cases {
            let l = AffineLattice::scaled_half_integers(a.clone()).unwrap();
            for n in [1i64, 2, 3, 10, 97, 1000] {
                let f = count_f(a, n).unwrap();
                let g = count_g(a, n).unwrap();
                assert_eq!(
                    f,
                    l.count_in(&Window::from_i64(0, n)).unwrap(),
                    "F mismatch at a={a}, N={n}"
                );
                assert_eq!(
                    g,
                    l.count_in(&Window::from_i64(-n, 0)).unwrap(),
                    "G mismatch at a={a}, N={n}"
                );
            }
        }
    }

    #[test]
    fn partition_counting_identity_spot_checks() {
        // F(a,N)+F(1−a,N)=N and the G analogue; the exhaustive N ≤ 10⁶ sweep
        // lives in the acceptance suite.
        let one = ExactScalar::one();
        for a in [
            sqrt2_inv_scalar(),
            ExactScalar::guarded(golden(DEFAULT_BITS), DEFAULT_GUARD),
        ] {
            let b = &one - &a;
            for n in [1i64, 7, 100, 12345, 1_000_000] {
                assert_eq!(count_f(&a, n).unwrap() + count_f(&b, n).unwrap(), n);
                assert_eq!(count_g(&a, n).unwrap() + count_g(&b, n).unwrap(), n);
            }
        }
    }

    #[test]
    fn enumerate_and_count_agree_on_random_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let lattices = [
            AffineLattice::scaled_half_integers(ExactScalar::rational(3, 7)).unwrap(),
            AffineLattice::scaled_half_integers(sqrt2_inv_scalar()).unwrap(),
            AffineLattice::new(ExactScalar::rational(5, 1), ExactScalar::zero()).unwrap(),
        ];
        for _ in 0..RANDOM_WINDOW_CASES {
            let lo = rng.gen_range(-10_000i64..10_000);
            let len = rng.gen_range(1i64..500);
            let w = Window::from_i64(lo, lo + len);
            let l = &lattices[rng.gen_range(0..lattices.len())];
            let pts = l.enumerate(&w).unwrap();
            assert_eq!(pts.len() as i64, l.count_in(&w).unwrap());
            // every returned point is inside, neighbors outside
            for (_, p) in &pts {
                assert!(w.contains(p));
            }
            if let Some((k0, _)) = pts.first() {
                assert!(!w.contains(&l.point(k0 - 1)));
            }
            if let Some((k1, _)) = pts.last() {
                assert!(!w.contains(&l.point(k1 + 1)));
            }
        }
    }

    #[test]
    fn scan_floors_matches_pointwise_floors() {
        let cases = [
            ExactScalar::rational(2, 5),
            ExactScalar::rational(1, 2),
            sqrt2_inv_scalar(),
        ];
        for a in &cases {
            let alpha = ExactScalar::half();
            let mut got = Vec::new();
            scan_floors(a, &alpha, -500, 500, "test", |k, fl| got.push((k, fl))).unwrap();
            let inv = a.recip();
            for (k, fl) in got {
                let point = &(&ExactScalar::rational(k, 1) + &alpha) * &inv;
                let (want, _) = point.floor_i64("oracle").unwrap();
                assert_eq!(fl, want, "a={a}, k={k}");
            }
        }
    }

    #[test]
    fn window_rejects_empty() {
        assert!(Window::new(ExactScalar::one(), ExactScalar::one()).is_err());
        assert!(AffineLattice::scaled_half_integers(ExactScalar::zero()).is_err());
    }

    proptest! {
        #[test]
        fn spacing_between_consecutive_points(
            num in 1i64..50, den in 1i64..50, k in -1_000i64..1_000,
        ) {
            let l = AffineLattice::scaled_half_integers(
                ExactScalar::rational(num, den),
            ).unwrap();
            let gap = &l.point(k + 1) - &l.point(k);
            prop_assert_eq!(gap, l.spacing());
        }

        #[test]
        fn index_range_is_sharp(lo in -300i64..300, len in 1i64..200, num in 1i64..20, den in 1i64..20) {
            let l = AffineLattice::scaled_half_integers(
                ExactScalar::rational(num, den),
            ).unwrap();
            let w = Window::from_i64(lo, lo + len);
            let (k_lo, k_hi) = l.index_range(&w).unwrap();
            if k_lo < k_hi {
                prop_assert!(w.contains(&l.point(k_lo)));
                prop_assert!(w.contains(&l.point(k_hi - 1)));
            }
            prop_assert!(!w.contains(&l.point(k_lo - 1)));
            prop_assert!(!w.contains(&l.point(k_hi)));
        }
    }
}
