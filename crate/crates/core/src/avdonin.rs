//! Realized frequency maps and their averaged-displacement certificates.
//!
//! A [`FrequencyMap`] is an injective map from a contiguous stretch of a
//! source lattice into a target lattice, stored explicitly as target indices.
//! Its key health metric is the block discrepancy: for block length `R`, the
//! sup over blocks `[pR, (p+1)R)` of the averaged displacement
//! `|(1/R)·Σ (f(x) − x)|`. A map whose sup stays below `ε = 1/(4a)` satisfies
//! the hypothesis under which the classical theory guarantees that its range
//! spans a Riesz basis for intervals of length `a` — that theorem is treated
//! as a trusted oracle here; what this module does is measure the hypothesis,
//! exactly where the data permits.
//!
//! Certificates are *windowed*: the mathematical statement quantifies over
//! all blocks, a measurement can only scan finitely many. For rational data
//! the map is exactly periodic, so a one-period scan upgrades to a global
//! exact certificate; for guarded data the window size is reported alongside
//! the result.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{AffineLattice, Window};
use crate::numerics::{ExactScalar, Fixed, DEFAULT_BITS, DEFAULT_GUARD};
use crate::rounding::RoundingMap;

/// An injective, separated map realized over a working window.
#[derive(Clone, Debug)]
pub struct FrequencyMap {
    source: AffineLattice,
    target: AffineLattice,
    k_first: i64,
    targets: Vec<i64>,
    displacement_bound: f64,
    separation: f64,
    certificate: Option<AvdoninCertificate>,
}

/// Measured block-discrepancy certificate.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AvdoninCertificate {
    /// Block length in frequency units.
    #[serde(rename = "R")]
    pub r: f64,
    /// The same block length, exact — lets a verifier reproduce the
    /// measurement bit for bit.
    #[serde(rename = "R_exact")]
    pub r_exact: ExactScalar,
    /// Sup of averaged block displacements over the checked window.
    pub epsilon_hat: f64,
    pub blocks_checked: i64,
    /// Index `p` of the worst block `[pR, (p+1)R)`.
    pub worst_block: i64,
}

/// Outcome of testing a certificate against the `1/(4a)` threshold.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RieszHypothesisCheck {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "R_exact")]
    pub r_exact: ExactScalar,
    pub epsilon_hat: f64,
    pub threshold: f64,
    pub pass: bool,
    pub worst_block: i64,
    pub blocks_checked: i64,
}

impl FrequencyMap {
    /// Assemble a map from explicit target indices for the consecutive source
    /// indices `k_first, k_first+1, …`; verifies injectivity and measures the
    /// displacement bound and range separation.
    pub fn from_parts(
        source: AffineLattice,
        target: AffineLattice,
        k_first: i64,
        targets: Vec<i64>,
    ) -> Result<Self> {
        // injectivity: sort (target, source) pairs and look for duplicates
        let mut order: Vec<usize> = (0..targets.len()).collect();
        order.sort_unstable_by_key(|&i| targets[i]);
        for w in order.windows(2) {
            if targets[w[0]] == targets[w[1]] {
                return Err(Error::NotInjective {
                    left: k_first + w[0] as i64,
                    right: k_first + w[1] as i64,
                });
            }
        }
        let spacing = target.spacing().to_f64();
        let separation = order
            .windows(2)
            .map(|w| (targets[w[1]] - targets[w[0]]) as f64 * spacing)
            .fold(f64::INFINITY, f64::min);
        let mut displacement_bound = 0.0f64;
        for (i, &m) in targets.iter().enumerate() {
            let k = k_first + i as i64;
            let d = (target.point(m).to_f64() - source.point(k).to_f64()).abs();
            displacement_bound = displacement_bound.max(d);
        }
        Ok(FrequencyMap {
            source,
            target,
            k_first,
            targets,
            displacement_bound,
            separation,
            certificate: None,
        })
    }

    /// Realize a rounding map over a window.
    pub fn from_rounding(map: &RoundingMap, window: &Window) -> Result<Self> {
        let (k_lo, k_hi) = map.source().index_range(window)?;
        let targets: Vec<i64> = (k_lo..k_hi)
            .map(|k| map.eval_index(k))
            .collect::<Result<_>>()?;
        Self::from_parts(map.source().clone(), map.target().clone(), k_lo, targets)
    }

    /// The identity map of a lattice over a window.
    pub fn identity(lattice: AffineLattice, window: &Window) -> Result<Self> {
        let (k_lo, k_hi) = lattice.index_range(window)?;
        Self::from_parts(lattice.clone(), lattice, k_lo, (k_lo..k_hi).collect())
    }

    pub fn source(&self) -> &AffineLattice {
        &self.source
    }

    pub fn target(&self) -> &AffineLattice {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Covered source index range, half-open.
    pub fn k_range(&self) -> (i64, i64) {
        (self.k_first, self.k_first + self.targets.len() as i64)
    }

    pub fn target_index(&self, k: i64) -> Option<i64> {
        let (lo, hi) = self.k_range();
        if k < lo || k >= hi {
            return None;
        }
        Some(self.targets[(k - lo) as usize])
    }

    pub fn target_indices(&self) -> &[i64] {
        &self.targets
    }

    /// Image frequency of source index `k`.
    pub fn frequency(&self, k: i64) -> Option<ExactScalar> {
        Some(self.target.point(self.target_index(k)?))
    }

    pub fn sorted_target_indices(&self) -> Vec<i64> {
        let mut v = self.targets.clone();
        v.sort_unstable();
        v
    }

    /// Measured sup of `|f(x) − x|` over the window.
    pub fn displacement_bound(&self) -> f64 {
        self.displacement_bound
    }

    /// Measured min gap of the range, in frequency units.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn certificate(&self) -> Option<&AvdoninCertificate> {
        self.certificate.as_ref()
    }

    /// Attach an externally measured certificate.
    pub fn set_certificate(&mut self, cert: AvdoninCertificate) {
        self.certificate = Some(cert);
    }

    /// Measure and attach a block-discrepancy certificate.
    pub fn certify(&mut self, r: &ExactScalar, window: &Window) -> Result<AvdoninCertificate> {
        let cert = measure_discrepancy(self, r, window)?;
        self.certificate = Some(cert.clone());
        Ok(cert)
    }
}

/// Number of full blocks required inside a certification window.
pub const MIN_CERT_BLOCKS: i64 = 10;

/// A window spanning `blocks` full blocks of length `r`, centered at 0.
pub fn centered_window(r: &ExactScalar, blocks: i64) -> Result<Window> {
    let half = ExactScalar::rational(blocks.div_euclid(2), 1);
    let lo = &(-r) * &half;
    let hi = r * &ExactScalar::rational(blocks - blocks.div_euclid(2), 1);
    Window::new(lo, hi)
}

/// Exact full-block discrepancy scan of a realized map.
///
/// Every per-block sum is computed in integer/rational (or fixed-point)
/// arithmetic — `Σ f(x)` collapses to an integer sum of target indices, and
/// `Σ x` to an arithmetic series — so the only roundoff in `epsilon_hat` is
/// the final conversion to `f64`.
pub fn measure_discrepancy(
    map: &FrequencyMap,
    r: &ExactScalar,
    window: &Window,
) -> Result<AvdoninCertificate> {
    if !r.is_positive() {
        return Err(Error::InvalidSpec(format!("block length must be positive, got {r}")));
    }
    // Full blocks [pR, (p+1)R) ⊆ window. Windows handed in by the builders
    // sit exactly on block boundaries, so a quotient within guard of an
    // integer snaps to it rather than erroring.
    let p_lo = snap_quotient(&(&window.lo / r), true)?;
    let p_hi = snap_quotient(&(&window.hi / r), false)?;
    let blocks = p_hi - p_lo;
    if blocks < MIN_CERT_BLOCKS {
        return Err(Error::WindowTooSmall {
            have: blocks.max(0),
            need: MIN_CERT_BLOCKS,
            block_len: r.to_f64(),
        });
    }
    let (cov_lo, cov_hi) = map.k_range();
    let mut max_dev = ExactScalar::zero();
    let mut worst_block = p_lo;
    for p in p_lo..p_hi {
        let block = Window::new(r * &ExactScalar::rational(p, 1), r * &ExactScalar::rational(p + 1, 1))?;
        let (k_lo, k_hi) = map.source.index_range(&block)?;
        if k_lo < cov_lo || k_hi > cov_hi {
            return Err(Error::MalformedInput(format!(
                "certification window needs source indices [{k_lo}, {k_hi}) but map covers [{cov_lo}, {cov_hi})"
            )));
        }
        if k_lo >= k_hi {
            continue; // empty block contributes zero
        }
        let count = k_hi - k_lo;
        let sum_m: i128 = (k_lo..k_hi)
            .map(|k| map.targets[(k - map.k_first) as usize] as i128)
            .sum();
        let sum_k: i128 = (k_lo as i128 + k_hi as i128 - 1) * count as i128 / 2;
        // Σ f(x) = (Σm + n·α_t)/a_t,  Σ x = (Σk + n·α_s)/a_s
        let n = ExactScalar::rational(count, 1);
        let sum_targets = &(&big(sum_m) + &(&n * map.target.alpha())) / map.target.a();
        let sum_sources = &(&big(sum_k) + &(&n * map.source.alpha())) / map.source.a();
        let dev = (&(&sum_targets - &sum_sources) / r).abs();
        if dev > max_dev {
            max_dev = dev;
            worst_block = p;
        }
    }
    Ok(AvdoninCertificate {
        r: r.to_f64(),
        r_exact: r.clone(),
        epsilon_hat: max_dev.to_f64(),
        blocks_checked: blocks,
        worst_block,
    })
}

fn big(v: i128) -> ExactScalar {
    ExactScalar::from_bigrational(BigRational::from_integer(BigInt::from(v)))
}

/// Ceil (or floor) of a block-count quotient, snapping guard-level ties to
/// the nearest integer: quotients of boundary arithmetic land within a few
/// ulps of exact integers and must not be rejected.
fn snap_quotient(q: &ExactScalar, ceil: bool) -> Result<i64> {
    let (v, tie) = if ceil {
        q.ceil_i64("discrepancy block range")?
    } else {
        q.floor_i64("discrepancy block range")?
    };
    if !tie {
        return Ok(v);
    }
    let (rounded, tie2) = (q + &ExactScalar::half()).floor_i64("discrepancy block range")?;
    if tie2 {
        return Err(Error::PrecisionTie {
            context: "discrepancy block range".to_string(),
            guard: q.guard(),
        });
    }
    Ok(rounded)
}

/// Test a map's stored certificate against the `1/(4a)` hypothesis threshold
/// for an interval of length `a`.
pub fn check_riesz_hypothesis(
    map: &FrequencyMap,
    interval_length: &ExactScalar,
) -> Result<RieszHypothesisCheck> {
    let cert = map.certificate().ok_or_else(|| {
        Error::MalformedInput("map has no discrepancy certificate; certify it first".to_string())
    })?;
    Ok(check_certificate(cert, interval_length))
}

/// The same threshold comparison on a bare certificate.
pub fn check_certificate(
    cert: &AvdoninCertificate,
    interval_length: &ExactScalar,
) -> RieszHypothesisCheck {
    let threshold = ExactScalar::rational(1, 4).div_f64_safe(interval_length);
    RieszHypothesisCheck {
        r: cert.r,
        r_exact: cert.r_exact.clone(),
        epsilon_hat: cert.epsilon_hat,
        threshold,
        pass: cert.epsilon_hat < threshold,
        worst_block: cert.worst_block,
        blocks_checked: cert.blocks_checked,
    }
}

/// Piecewise test functions for the generalized equidistribution check.
#[derive(Clone, Debug)]
pub enum PiecewiseTest {
    /// `f(u) = u`, mean ½: the classical fractional-part average.
    FractionalPart,
    /// `f(u) = 1_{[0,c)}(u)`, mean `c`.
    IndicatorBelow(ExactScalar),
}

impl PiecewiseTest {
    fn mean(&self) -> ExactScalar {
        match self {
            PiecewiseTest::FractionalPart => ExactScalar::half(),
            PiecewiseTest::IndicatorBelow(c) => c.clone(),
        }
    }
}

/// Worst block deviation of fractional parts: the max over `m ∈ [m_lo, m_hi)`
/// of `|(1/R)·Σ_{k=mR}^{(m+1)R−1} frac((k+α)/a) − ½|`.
pub fn measure_equidistribution(
    a: &ExactScalar,
    alpha: &ExactScalar,
    r: i64,
    m_lo: i64,
    m_hi: i64,
) -> Result<f64> {
    measure_equidistribution_with(a, alpha, r, m_lo, m_hi, &PiecewiseTest::FractionalPart)
}

/// Generalized form: block averages of `f(frac((k+α)/a))` against the mean of
/// `f` on `[0,1)`.
pub fn measure_equidistribution_with(
    a: &ExactScalar,
    alpha: &ExactScalar,
    r: i64,
    m_lo: i64,
    m_hi: i64,
    f: &PiecewiseTest,
) -> Result<f64> {
    if r < 1 || m_lo >= m_hi {
        return Err(Error::InvalidSpec(
            "equidistribution scan needs R ≥ 1 and a nonempty block range".to_string(),
        ));
    }
    match (a.as_rational(), alpha.as_rational()) {
        (Some(_), Some(_)) => equidistribution_rational(a, alpha, r, m_lo, m_hi, f),
        _ => equidistribution_guarded(a, alpha, r, m_lo, m_hi, f),
    }
}

fn equidistribution_rational(
    a: &ExactScalar,
    alpha: &ExactScalar,
    r: i64,
    m_lo: i64,
    m_hi: i64,
    f: &PiecewiseTest,
) -> Result<f64> {
    let step = a.recip();
    let mean = f.mean();
    let r_scalar = ExactScalar::rational(r, 1);
    let mut worst = ExactScalar::zero();
    for m in m_lo..m_hi {
        let mut sum = ExactScalar::zero();
        for k in m * r..(m + 1) * r {
            let x = &(&ExactScalar::rational(k, 1) + alpha) * &step;
            let rat = x.as_rational().expect("rational path");
            let frac = ExactScalar::from_bigrational(rat - rat.floor());
            sum = &sum + &apply_piece(&frac, f);
        }
        let dev = (&(&sum / &r_scalar) - &mean).abs();
        if dev > worst {
            worst = dev;
        }
    }
    Ok(worst.to_f64())
}

fn equidistribution_guarded(
    a: &ExactScalar,
    alpha: &ExactScalar,
    r: i64,
    m_lo: i64,
    m_hi: i64,
    f: &PiecewiseTest,
) -> Result<f64> {
    let bits = DEFAULT_BITS.max(a.to_fixed(DEFAULT_BITS).bits());
    let guard = a.guard().max(alpha.guard()).max(DEFAULT_GUARD);
    let radius = Fixed::from_f64(guard, bits).expect("finite guard");
    let step = a.recip().to_fixed(bits);
    let start = &(&ExactScalar::rational(m_lo * r, 1) + alpha) / a;
    let mut v = start.to_fixed(bits);
    let half = Fixed::from_ratio(&BigInt::from(1), &BigInt::from(2), bits);
    let mean = match f {
        PiecewiseTest::FractionalPart => half.clone(),
        PiecewiseTest::IndicatorBelow(c) => c.to_fixed(bits),
    };
    let threshold = match f {
        PiecewiseTest::IndicatorBelow(c) => Some(c.to_fixed(bits)),
        PiecewiseTest::FractionalPart => None,
    };
    let r_fixed = Fixed::from_i64(r, bits);
    let one = Fixed::one(bits);
    let mut worst = Fixed::zero(bits);
    for m in m_lo..m_hi {
        let mut sum = Fixed::zero(bits);
        for k in m * r..(m + 1) * r {
            if v.dist_to_int() < radius {
                return Err(Error::PrecisionTie {
                    context: format!("equidistribution scan at index {k}"),
                    guard,
                });
            }
            let frac = v.frac();
            match &threshold {
                None => sum = &sum + &frac,
                Some(c) => {
                    if frac < *c {
                        sum = &sum + &one;
                    }
                }
            }
            v = &v + &step;
        }
        let avg = &sum / &r_fixed;
        let dev = (&avg - &mean).abs();
        if dev > worst {
            worst = dev;
        }
    }
    Ok(worst.to_f64())
}

fn apply_piece(frac: &ExactScalar, f: &PiecewiseTest) -> ExactScalar {
    match f {
        PiecewiseTest::FractionalPart => frac.clone(),
        PiecewiseTest::IndicatorBelow(c) => {
            if frac < c {
                ExactScalar::one()
            } else {
                ExactScalar::zero()
            }
        }
    }
}

impl ExactScalar {
    /// `self / other` reported as f64 — a convenience for thresholds.
    fn div_f64_safe(&self, other: &ExactScalar) -> f64 {
        (self / other).to_f64()
    }
}
