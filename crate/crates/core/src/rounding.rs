//! Paired rounding maps from two source lattices onto a common target.
//!
//! For interval lengths `a, b > 0` with `d = a + b`, the pair of maps sends
//! `(ℤ+½)/a` and `(ℤ+½)/b` into `(ℤ+½)/d` by `x ↦ (⌊d·x⌋+½)/d`. Whether the
//! two uncorrected images can collide is governed by the parity of `K₀`, the
//! reduced denominator of `a/(a+b)`:
//!
//! - irrational ratio: no collisions ever (an exact integer `d·x` would make
//!   the ratio rational), any block length is a valid local period;
//! - `K₀` odd: no collisions, period `K₀` target steps;
//! - `K₀` even: both maps hit the points `K₀(ℤ+½)` scaled, and miss the
//!   midpoints between them; a one-step downward correction applied to each
//!   side on complementary residues restores a clean partition, with period
//!   `2K₀`.
//!
//! On every aligned block the two image sets then tile the target lattice
//! exactly, and the per-period sum of displacements `φ(x) − x` is exactly
//! zero — the seed certificates the later rearrangement stages consume.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{scan_floors, AffineLattice, Window};
use crate::numerics::{lowest_terms_ratio, ExactScalar};

/// Parity classification of `a/(a+b) = N₀/K₀` in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParityCase {
    /// Ratio not rational (or not declared rational): collision-free.
    Irrational,
    /// `K₀` odd: collision-free, exactly periodic.
    RationalOdd { n0: i64, k0: i64 },
    /// `K₀` even: collisions at `K₀(ℤ+½)` resolved by one-step corrections.
    RationalEven { n0: i64, k0: i64 },
}

/// Which subinterval a map carries: `Lower` = length `a`, `Upper` = length `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairSide {
    Lower,
    Upper,
}

/// One side of the rounding pair: an injection `(ℤ+½)/c → (ℤ+½)/(a+b)`.
#[derive(Clone, Debug)]
pub struct RoundingMap {
    source: AffineLattice,
    target: AffineLattice,
    total: ExactScalar,
    parity: ParityCase,
    side: PairSide,
}

impl RoundingMap {
    pub fn source(&self) -> &AffineLattice {
        &self.source
    }

    pub fn target(&self) -> &AffineLattice {
        &self.target
    }

    pub fn parity(&self) -> &ParityCase {
        &self.parity
    }

    pub fn side(&self) -> PairSide {
        self.side
    }

    /// Source steps spanning one exact period (rational cases only).
    pub fn period_source_steps(&self) -> Option<i64> {
        match &self.parity {
            ParityCase::Irrational => None,
            ParityCase::RationalOdd { n0, k0 } => Some(match self.side {
                PairSide::Lower => *n0,
                PairSide::Upper => *k0 - *n0,
            }),
            ParityCase::RationalEven { n0, k0 } => Some(match self.side {
                PairSide::Lower => 2 * n0,
                PairSide::Upper => 2 * (*k0 - *n0),
            }),
        }
    }

    /// Target steps spanning one exact period (rational cases only).
    pub fn period_target_steps(&self) -> Option<i64> {
        match &self.parity {
            ParityCase::Irrational => None,
            ParityCase::RationalOdd { k0, .. } => Some(*k0),
            ParityCase::RationalEven { k0, .. } => Some(2 * k0),
        }
    }

    /// Image of source index `k`, as a target index `m` (the frequency is
    /// `(m+½)/(a+b)`). Applies the even-case correction; a guarded value
    /// within its guard of an integer aborts with a precision tie.
    pub fn eval_index(&self, k: i64) -> Result<i64> {
        let x = self.source.point(k);
        let t = &self.total * &x;
        match &self.parity {
            ParityCase::Irrational => t.floor_i64_strict("rounding map, irrational ratio"),
            ParityCase::RationalOdd { .. } => {
                let (m, _) = t.floor_i64("rounding map, odd case")?;
                Ok(m)
            }
            ParityCase::RationalEven { k0, .. } => {
                let (m, _) = t.floor_i64("rounding map, even case")?;
                let exact_hit = t
                    .as_rational()
                    .expect("even parity implies rational data")
                    .is_integer();
                if !exact_hit {
                    return Ok(m);
                }
                // Integer hits land on residues K₀/2 and 3K₀/2 mod 2K₀; each
                // side steps down on one of them, covering the skipped
                // midpoints without collisions.
                let rem = m.rem_euclid(2 * k0);
                debug_assert!(rem == k0 / 2 || rem == 3 * k0 / 2, "unexpected collision residue");
                let correct = match self.side {
                    PairSide::Lower => rem == 3 * k0 / 2,
                    PairSide::Upper => rem == k0 / 2,
                };
                Ok(if correct { m - 1 } else { m })
            }
        }
    }

    /// Image of source index `k` as a frequency value.
    pub fn eval_point(&self, k: i64) -> Result<ExactScalar> {
        Ok(self.target.point(self.eval_index(k)?))
    }
}

/// Build the rounding pair for lengths `a`, `b` onto `(ℤ+½)/(a+b)`.
///
/// Returns `(φ, ψ, K)` where `K` is a valid local period in target steps:
/// `K₀` for odd `K₀`, `2K₀` for even, and 1 (any block length works) for an
/// irrational ratio.
pub fn build_pair(a: &ExactScalar, b: &ExactScalar) -> Result<(RoundingMap, RoundingMap, i64)> {
    if !a.is_positive() || !b.is_positive() {
        return Err(Error::InvalidSpec(format!(
            "interval lengths must be positive, got a={a}, b={b}"
        )));
    }
    let total = a + b;
    let parity = match lowest_terms_ratio(a, &total) {
        Some((n0, k0)) => {
            let n0 = n0.to_i64().ok_or_else(|| Error::IndexOverflow {
                context: "rounding pair numerator".to_string(),
                value: n0.to_string(),
            })?;
            let k0 = k0.to_i64().ok_or_else(|| Error::IndexOverflow {
                context: "rounding pair denominator".to_string(),
                value: k0.to_string(),
            })?;
            if k0 % 2 == 0 {
                ParityCase::RationalEven { n0, k0 }
            } else {
                ParityCase::RationalOdd { n0, k0 }
            }
        }
        None => ParityCase::Irrational,
    };
    let block = match &parity {
        ParityCase::Irrational => 1,
        ParityCase::RationalOdd { k0, .. } => *k0,
        ParityCase::RationalEven { k0, .. } => 2 * k0,
    };
    let target = AffineLattice::scaled_half_integers(total.clone())?;
    let phi = RoundingMap {
        source: AffineLattice::scaled_half_integers(a.clone())?,
        target: target.clone(),
        total: total.clone(),
        parity: parity.clone(),
        side: PairSide::Lower,
    };
    let psi = RoundingMap {
        source: AffineLattice::scaled_half_integers(b.clone())?,
        target,
        total,
        parity,
        side: PairSide::Upper,
    };
    Ok((phi, psi, block))
}

/// Exact sum of `φ(x) − x` over one period of a rational rounding map.
///
/// A correct construction sums to exactly 0 (this is the zero-certificate the
/// rearrangement stages rely on); any other value indicates a bug upstream.
pub fn verify_zero_avdonin_block(map: &RoundingMap) -> Result<ExactScalar> {
    let steps = map.period_source_steps().ok_or_else(|| {
        Error::InvalidSpec("zero block sums require a rational parity case".to_string())
    })?;
    let mut sum = ExactScalar::zero();
    for k in 0..steps {
        let x = map.source.point(k);
        let fx = map.eval_point(k)?;
        sum = &sum + &(&fx - &x);
    }
    Ok(sum)
}

/// Check that the two image sets tile target block `ℓ` (target indices
/// `[ℓK, (ℓ+1)K)`) exactly: the local counting identity plus disjointness.
pub fn verify_block_partition(
    phi: &RoundingMap,
    psi: &RoundingMap,
    block_len: i64,
    block_index: i64,
) -> Result<()> {
    let lo = block_index * block_len;
    let hi = lo + block_len;
    let window = block_window(phi, block_len, block_index);
    let mut hits = vec![0u8; block_len as usize];
    let mut total = 0usize;
    for map in [phi, psi] {
        let (k_lo, k_hi) = map.source.index_range(&window)?;
        for k in k_lo..k_hi {
            let m = map.eval_index(k)?;
            if m < lo || m >= hi {
                return Err(Error::InvalidSpec(format!(
                    "image index {m} escaped block {block_index} (targets [{lo}, {hi}))"
                )));
            }
            let slot = &mut hits[(m - lo) as usize];
            if *slot != 0 {
                return Err(Error::RangeCollision {
                    frequency: format!("target index {m} in block {block_index}"),
                });
            }
            *slot = 1;
            total += 1;
        }
    }
    if total != block_len as usize {
        return Err(Error::CountingMismatch {
            block: block_index,
            expected: block_len as usize,
            found: total,
        });
    }
    Ok(())
}

/// The frequency window of target block `ℓ`: `[ℓK/(a+b), (ℓ+1)K/(a+b))`.
pub fn block_window(map: &RoundingMap, block_len: i64, block_index: i64) -> Window {
    let scale = map.total.recip();
    let lo = &ExactScalar::rational(block_index * block_len, 1) * &scale;
    let hi = &ExactScalar::rational((block_index + 1) * block_len, 1) * &scale;
    Window { lo, hi }
}

/// Outcome of a Beatty-sequence partition scan over `ℤ ∩ [−N, N)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BeattyReport {
    pub n: i64,
    /// Integers hit by both floor sequences (first few).
    pub collisions: Vec<i64>,
    /// Integers hit by neither (first few).
    pub gaps: Vec<i64>,
    pub total_collisions: usize,
    pub total_gaps: usize,
    pub pass: bool,
}

const REPORT_CAP: usize = 16;

/// Verify that `⌊(ℤ+½)/a⌋` and `⌊(ℤ+½)/(1−a)⌋` together hit every integer of
/// `[−N, N)` exactly once.
///
/// For irrational `a` this must pass with zero collisions and gaps; rational
/// inputs are allowed and produce an honest failure report (the uncorrected
/// floor images genuinely collide). A precision tie during the scan surfaces
/// as an error: the input is indistinguishable from rational at this guard.
pub fn verify_beatty(a: &ExactScalar, n: i64) -> Result<BeattyReport> {
    let one = ExactScalar::one();
    if !a.is_positive() || a >= &one {
        return Err(Error::InvalidSpec(format!(
            "Beatty check needs 0 < a < 1, got {a}"
        )));
    }
    let b = &one - a;
    let half = ExactScalar::half();
    let window = Window::from_i64(-n, n);
    let mut counts = vec![0u8; (2 * n) as usize];
    for length in [a, &b] {
        let lattice = AffineLattice::scaled_half_integers(length.clone())?;
        let (k_lo, k_hi) = lattice.index_range(&window)?;
        scan_floors(length, &half, k_lo, k_hi, "Beatty partition scan", |_, fl| {
            let slot = &mut counts[(fl + n) as usize];
            *slot = slot.saturating_add(1);
        })?;
    }
    let mut collisions = Vec::new();
    let mut gaps = Vec::new();
    let (mut total_collisions, mut total_gaps) = (0usize, 0usize);
    for (i, &c) in counts.iter().enumerate() {
        let value = i as i64 - n;
        if c == 0 {
            total_gaps += 1;
            if gaps.len() < REPORT_CAP {
                gaps.push(value);
            }
        } else if c > 1 {
            total_collisions += 1;
            if collisions.len() < REPORT_CAP {
                collisions.push(value);
            }
        }
    }
    let pass = total_collisions == 0 && total_gaps == 0;
    Ok(BeattyReport {
        n,
        collisions,
        gaps,
        total_collisions,
        total_gaps,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sqrt2_inv, DEFAULT_BITS, DEFAULT_GUARD};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const RANDOM_BLOCK_CASES: usize = 1_000;

    fn sqrt2_inv_scalar() -> ExactScalar {
        ExactScalar::guarded(sqrt2_inv(DEFAULT_BITS), DEFAULT_GUARD)
    }

    fn rational(n: i64, d: i64) -> ExactScalar {
        ExactScalar::rational(n, d)
    }

    #[test]
    fn even_case_hand_example() {
        // a = b = ½: sources are the odd integers, K₀ = 2, period 4.
        let (phi, psi, block) = build_pair(&rational(1, 2), &rational(1, 2)).unwrap();
        assert_eq!(block, 4);
        assert_eq!(phi.parity(), &ParityCase::RationalEven { n0: 1, k0: 2 });
        // φ: 1→1.5, 3→2.5, 5→5.5, 7→6.5 (frequencies; target spacing is 1)
        let phi_pts: Vec<f64> = (0..4)
            .map(|k| phi.eval_point(k).unwrap().to_f64())
            .collect();
        assert_eq!(phi_pts, vec![1.5, 2.5, 5.5, 6.5]);
        // ψ: 1→0.5, 3→3.5, 5→4.5, 7→7.5
        let psi_pts: Vec<f64> = (0..4)
            .map(|k| psi.eval_point(k).unwrap().to_f64())
            .collect();
        assert_eq!(psi_pts, vec![0.5, 3.5, 4.5, 7.5]);
        // union on the first period block tiles {0.5, 1.5, 2.5, 3.5}
        verify_block_partition(&phi, &psi, block, 0).unwrap();
    }

    #[test]
    fn odd_case_example() {
        // a = 2/5, b = 3/5: K₀ = 5 odd; φ sources 1.25, 3.75 → 1.5, 3.5.
        let (phi, psi, block) = build_pair(&rational(2, 5), &rational(3, 5)).unwrap();
        assert_eq!(block, 5);
        assert_eq!(phi.parity(), &ParityCase::RationalOdd { n0: 2, k0: 5 });
        assert_eq!(phi.eval_point(0).unwrap(), rational(3, 2));
        assert_eq!(phi.eval_point(1).unwrap(), rational(7, 2));
        let psi_pts: Vec<ExactScalar> = (0..3).map(|k| psi.eval_point(k).unwrap()).collect();
        assert_eq!(
            psi_pts,
            vec![rational(1, 2), rational(5, 2), rational(9, 2)]
        );
        verify_block_partition(&phi, &psi, block, 0).unwrap();
    }

    #[test]
    fn irrational_pair_first_images() {
        // a = 1/√2: φ rounds √2(ℤ+½) into ℤ+½; the first floors are the
        // figure's yellow integers 0, 2, 3, 4, 6, 7.
        let a = sqrt2_inv_scalar();
        let b = &ExactScalar::one() - &a;
        let (phi, psi, block) = build_pair(&a, &b).unwrap();
        assert_eq!(block, 1);
        assert_eq!(phi.parity(), &ParityCase::Irrational);
        let yellow: Vec<i64> = (0..6).map(|k| phi.eval_index(k).unwrap()).collect();
        assert_eq!(yellow, vec![0, 2, 3, 4, 6, 7]);
        let blue: Vec<i64> = (0..3).map(|k| psi.eval_index(k).unwrap()).collect();
        assert_eq!(blue, vec![1, 5, 8]);
    }

    #[test]
    fn zero_block_sums_exact() {
        let cases = [
            (rational(2, 5), rational(3, 5)),
            (rational(1, 2), rational(1, 2)),
            (rational(1, 3), rational(2, 3)),
            (rational(1, 4), rational(3, 4)),
            (rational(3, 7), rational(2, 7)), // total ≠ 1 also works
        ];
        for (a, b) in cases {
            let (phi, psi, _) = build_pair(&a, &b).unwrap();
            assert_eq!(
                verify_zero_avdonin_block(&phi).unwrap(),
                ExactScalar::zero(),
                "φ block sum for a={a}, b={b}"
            );
            assert_eq!(
                verify_zero_avdonin_block(&psi).unwrap(),
                ExactScalar::zero(),
                "ψ block sum for a={a}, b={b}"
            );
        }
    }

    #[test]
    fn periodicity_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let q = rng.gen_range(2i64..40);
            let p = rng.gen_range(1..q);
            let (phi, psi, _) = build_pair(&rational(p, q), &rational(q - p, q)).unwrap();
            for map in [&phi, &psi] {
                let src = map.period_source_steps().unwrap();
                let tgt = map.period_target_steps().unwrap();
                for k in -20..20 {
                    assert_eq!(
                        map.eval_index(k + src).unwrap(),
                        map.eval_index(k).unwrap() + tgt,
                        "period broken at k={k} for p/q={p}/{q}"
                    );
                }
            }
        }
    }

    #[test]
    fn local_bijection_on_random_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let irr_a = sqrt2_inv_scalar();
        let irr_b = &ExactScalar::one() - &irr_a;
        for _ in 0..RANDOM_BLOCK_CASES {
            let block_index = rng.gen_range(-200i64..200);
            match rng.gen_range(0..3) {
                0 => {
                    // random rational pair, both parities arise
                    let q = rng.gen_range(2i64..24);
                    let p = rng.gen_range(1..q);
                    let (phi, psi, block) =
                        build_pair(&rational(p, q), &rational(q - p, q)).unwrap();
                    verify_block_partition(&phi, &psi, block, block_index).unwrap();
                }
                1 => {
                    // rational pair with non-unit total
                    let d = rng.gen_range(3i64..15);
                    let p = rng.gen_range(1i64..6);
                    let q = rng.gen_range(1i64..6);
                    let (phi, psi, block) =
                        build_pair(&rational(p, d), &rational(q, d)).unwrap();
                    verify_block_partition(&phi, &psi, block, block_index).unwrap();
                }
                _ => {
                    let (phi, psi, _) = build_pair(&irr_a, &irr_b).unwrap();
                    // any block length is a valid period in the irrational case
                    let block = rng.gen_range(1i64..32);
                    verify_block_partition(&phi, &psi, block, block_index).unwrap();
                }
            }
        }
    }

    #[test]
    fn uncorrected_images_are_nearest_points() {
        // Away from correction points, |φ(x) − x| ≤ half the target spacing.
        let a = sqrt2_inv_scalar();
        let b = &ExactScalar::one() - &a;
        let (phi, _, _) = build_pair(&a, &b).unwrap();
        let half_spacing = &phi.target.spacing() * &ExactScalar::half();
        for k in -100..100 {
            let x = phi.source.point(k);
            let fx = phi.eval_point(k).unwrap();
            assert!((&fx - &x).abs() <= half_spacing);
        }
    }

    #[test]
    fn beatty_partition_small_scans() {
        let report = verify_beatty(&sqrt2_inv_scalar(), 10_000).unwrap();
        assert!(report.pass, "1/√2 partition failed: {report:?}");

        let golden = ExactScalar::guarded(crate::numerics::golden(DEFAULT_BITS), DEFAULT_GUARD);
        assert!(verify_beatty(&golden, 10_000).unwrap().pass);

        // rational a = ½ genuinely fails: collision at 1, gap at 0
        let report = verify_beatty(&rational(1, 2), 2).unwrap();
        assert!(!report.pass);
        assert!(report.collisions.contains(&1));
        assert!(report.gaps.contains(&0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn one_period_sums_vanish(q in 2i64..30, p_seed in 1i64..1000) {
            let p = 1 + p_seed % (q - 1);
            let (phi, psi, _) = build_pair(
                &rational(p, q),
                &rational(q - p, q),
            ).unwrap();
            prop_assert_eq!(verify_zero_avdonin_block(&phi).unwrap(), ExactScalar::zero());
            prop_assert_eq!(verify_zero_avdonin_block(&psi).unwrap(), ExactScalar::zero());
        }
    }
}
