//! Finite-section diagnostics for exponential systems.
//!
//! Everything in this module works on plain `f64` frequency lists — the
//! numerically measured side of the library, complementing the exact
//! certificates elsewhere. Given frequencies `λ` and an interval
//! `[t0, t0 + length]`, the system under study is `{ e^{2πiλt} }`.
//!
//! Provided diagnostics:
//!
//! - [`gram_bounds`]: extreme eigenvalues of the finite-section Gram matrix,
//!   the quadratic-form Riesz bounds realised by the truncated system.
//! - [`completeness_residual`]: squared distance from a test function to the
//!   span of the truncated system, via an eigenvalue-clamped normal solve.
//! - [`vandermonde_bounds`]: exact frame bounds for unions of shifted
//!   arithmetic progressions `Nℤ + k`, computed from an `|J| × |J|`
//!   Vandermonde factor instead of a large truncation.
//! - [`beurling_density`]: windowed counting densities (lower, upper, and
//!   centered) at a list of radii.
//! - [`controls`]: deterministic generators for known-degenerate and
//!   known-healthy frequency families, used as negative/positive controls.
//!
//! Conventions are fixed once here and relied on by the tests: the Gram
//! entry is `G[i][j] = ∫ e^{2πi(λ_i - λ_j)t} dt` over the interval, and
//! moments are `u[i] = ∫ e^{2πiλ_i t} · conj(f(t)) dt`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod controls;

const TAU: f64 = std::f64::consts::TAU;

/// `∫ e^{2πiνt} dt` over `[lo, hi]`, closed form.
fn oscillatory_integral(nu: f64, lo: f64, hi: f64) -> Complex<f64> {
    if nu == 0.0 {
        return Complex::new(hi - lo, 0.0);
    }
    let w = TAU * nu;
    let num = Complex::cis(w * hi) - Complex::cis(w * lo);
    num / Complex::new(0.0, w)
}

/// Validates a frequency list: non-empty, finite, and free of exact
/// duplicates (a duplicate makes the Gram matrix singular by construction,
/// which would silently poison every bound downstream).
fn validate_frequencies(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::InvalidSpec(
            "frequency list must be non-empty".into(),
        ));
    }
    for &f in freqs {
        if !f.is_finite() {
            return Err(Error::MalformedInput(format!(
                "non-finite frequency {f}"
            )));
        }
    }
    let mut sorted = freqs.to_vec();
    sorted.sort_by(f64::total_cmp);
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::DuplicateFrequency { frequency: pair[0] });
        }
    }
    Ok(())
}

fn validate_interval(t0: f64, length: f64) -> Result<()> {
    if !t0.is_finite() || !length.is_finite() || length <= 0.0 {
        return Err(Error::MalformedInput(format!(
            "invalid interval: t0 = {t0}, length = {length}"
        )));
    }
    Ok(())
}

/// Gram matrix of `{ e^{2πiλt} }` on `[t0, t0 + length]`:
/// `G[i][j] = ∫ e^{2πi(λ_i - λ_j)t} dt`. Hermitian to the bit, since the
/// closed-form integral commutes exactly with conjugation.
pub fn gram_matrix(freqs: &[f64], t0: f64, length: f64) -> Result<DMatrix<Complex<f64>>> {
    validate_frequencies(freqs)?;
    validate_interval(t0, length)?;
    let n = freqs.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        oscillatory_integral(freqs[i] - freqs[j], t0, t0 + length)
    }))
}

/// Extreme eigenvalues of a finite Gram section, with the interval echoed
/// back so reports are self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramEstimate {
    /// Left endpoint of the interval.
    pub t0: f64,
    /// Interval length.
    pub length: f64,
    /// Number of frequencies in the section.
    pub n: usize,
    /// Smallest eigenvalue — the finite-section lower Riesz bound.
    pub lambda_min: f64,
    /// Largest eigenvalue — the finite-section upper Riesz bound.
    pub lambda_max: f64,
    /// `lambda_max / lambda_min`, infinite when the section is singular.
    pub condition: f64,
}

/// Computes [`GramEstimate`] for a frequency list on `[t0, t0 + length]`.
///
/// The eigenvalues of the Hermitian Gram matrix are exactly the extrema of
/// `‖Σ c_λ e^{2πiλt}‖²_{L²} / ‖c‖²` over the truncated index set, so
/// `lambda_min > 0` bounded away from zero across truncations is the
/// observable signature of a Riesz sequence.
pub fn gram_bounds(freqs: &[f64], t0: f64, length: f64) -> Result<GramEstimate> {
    let g = gram_matrix(freqs, t0, length)?;
    let eigen = SymmetricEigen::new(g);
    let mut lambda_min = f64::INFINITY;
    let mut lambda_max = f64::NEG_INFINITY;
    for &w in eigen.eigenvalues.iter() {
        lambda_min = lambda_min.min(w);
        lambda_max = lambda_max.max(w);
    }
    let condition = if lambda_min > 0.0 {
        lambda_max / lambda_min
    } else {
        f64::INFINITY
    };
    Ok(GramEstimate {
        t0,
        length,
        n: freqs.len(),
        lambda_min,
        lambda_max,
        condition,
    })
}

/// Test functions with closed-form moments against complex exponentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `f(t) = e^{2πiνt}`.
    Exponential { frequency: f64 },
    /// `f(t) = 1` on `[lo, hi)`, zero elsewhere.
    Indicator { lo: f64, hi: f64 },
    /// `f(t) = t^p` with `p ≤ 3`.
    Monomial { power: u32 },
}

impl TestFunction {
    fn validate(&self) -> Result<()> {
        match *self {
            TestFunction::Exponential { frequency } => {
                if !frequency.is_finite() {
                    return Err(Error::MalformedInput(
                        "non-finite test frequency".into(),
                    ));
                }
            }
            TestFunction::Indicator { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    return Err(Error::MalformedInput(format!(
                        "indicator support [{lo}, {hi}) is empty or non-finite"
                    )));
                }
            }
            TestFunction::Monomial { power } => {
                if power > 3 {
                    return Err(Error::InvalidSpec(format!(
                        "monomial power {power} exceeds the supported maximum 3"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `∫ e^{2πiλt} · conj(f(t)) dt` over `[t0, t0 + length]`, closed form.
    pub fn moment(&self, lambda: f64, t0: f64, length: f64) -> Complex<f64> {
        let hi = t0 + length;
        match *self {
            TestFunction::Exponential { frequency } => {
                oscillatory_integral(lambda - frequency, t0, hi)
            }
            TestFunction::Indicator { lo, hi: s_hi } => {
                let a = t0.max(lo);
                let b = hi.min(s_hi);
                if a >= b {
                    Complex::new(0.0, 0.0)
                } else {
                    oscillatory_integral(lambda, a, b)
                }
            }
            TestFunction::Monomial { power } => monomial_moment(power, lambda, t0, hi),
        }
    }

    /// `∫ |f(t)|² dt` over `[t0, t0 + length]`, closed form.
    pub fn norm_sq(&self, t0: f64, length: f64) -> f64 {
        let hi = t0 + length;
        match *self {
            TestFunction::Exponential { .. } => length,
            TestFunction::Indicator { lo, hi: s_hi } => {
                (hi.min(s_hi) - t0.max(lo)).max(0.0)
            }
            TestFunction::Monomial { power } => {
                let q = 2 * power + 1;
                (hi.powi(q as i32) - t0.powi(q as i32)) / f64::from(q)
            }
        }
    }
}

/// `∫ t^p e^{2πiλt} dt` over `[a, b]` by the integration-by-parts recursion
/// `I_p = [t^p e^{2πiλt} / (2πiλ)]_a^b - (p / (2πiλ)) I_{p-1}`.
fn monomial_moment(power: u32, lambda: f64, a: f64, b: f64) -> Complex<f64> {
    if lambda == 0.0 {
        let q = power + 1;
        return Complex::new(
            (b.powi(q as i32) - a.powi(q as i32)) / f64::from(q),
            0.0,
        );
    }
    let iw = Complex::new(0.0, TAU * lambda);
    let e_b = Complex::cis(TAU * lambda * b);
    let e_a = Complex::cis(TAU * lambda * a);
    let mut acc = (e_b - e_a) / iw;
    for p in 1..=power {
        let boundary = (b.powi(p as i32) * e_b - a.powi(p as i32) * e_a) / iw;
        acc = boundary - Complex::new(f64::from(p), 0.0) / iw * acc;
    }
    acc
}

/// Squared distance from `f` to the span of the truncated exponential
/// system: `‖f‖² - Re(uᴴ G⁻¹ u)` with `u` the moment vector.
///
/// The normal equations are solved through the Gram eigendecomposition with
/// eigenvalues clamped below at `max(λ_max, 1) · 1e-12`: a singular or
/// near-singular section then contributes nothing along its null directions
/// instead of amplifying noise, so the residual stays a trustworthy upper
/// bound on distance-to-span up to roundoff.
pub fn completeness_residual(
    freqs: &[f64],
    t0: f64,
    length: f64,
    test: &TestFunction,
) -> Result<f64> {
    test.validate()?;
    let g = gram_matrix(freqs, t0, length)?;
    let eigen = SymmetricEigen::new(g);
    let lambda_max = eigen
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |m, &w| m.max(w));
    let clamp = lambda_max.max(1.0) * 1e-12;

    let u = DVector::from_iterator(
        freqs.len(),
        freqs.iter().map(|&l| test.moment(l, t0, length)),
    );
    let mut y = eigen.eigenvectors.adjoint() * &u;
    for (i, &w) in eigen.eigenvalues.iter().enumerate() {
        y[i] /= Complex::new(w.max(clamp), 0.0);
    }
    let x = &eigen.eigenvectors * y;
    Ok(test.norm_sq(t0, length) - u.dotc(&x).re)
}

/// Exact frame bounds for the union `⋃_{k ∈ residues} (modulus·ℤ + k)` on an
/// interval of length `|residues| / modulus`.
///
/// Splitting the interval into `|residues|` unit-density pieces block-
/// diagonalises the Gram form, leaving the `|J| × |J|` matrix `VᴴV / N` with
/// `V[m][j] = e^{2πi·m·k_j / N}`: its eigenvalues are the frame bounds, and
/// every finite section of the full system realises them exactly (see the
/// cross-check test). Returns `(lambda_min, lambda_max)`.
pub fn vandermonde_bounds(modulus: usize, residues: &[usize]) -> Result<(f64, f64)> {
    check_residues(modulus, residues)?;
    let s = residues.len();
    let v = DMatrix::from_fn(s, s, |m, j| {
        Complex::cis(TAU * (m as f64) * (residues[j] as f64) / (modulus as f64))
    });
    let g = v.adjoint() * &v / Complex::new(modulus as f64, 0.0);
    let eigen = SymmetricEigen::new(g);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &w in eigen.eigenvalues.iter() {
        lo = lo.min(w);
        hi = hi.max(w);
    }
    Ok((lo, hi))
}

fn check_residues(modulus: usize, residues: &[usize]) -> Result<()> {
    if modulus == 0 {
        return Err(Error::InvalidSpec("modulus must be positive".into()));
    }
    if residues.is_empty() {
        return Err(Error::InvalidSpec(
            "residue list must be non-empty".into(),
        ));
    }
    for pair in residues.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::InvalidSpec(
                "residues must be strictly increasing".into(),
            ));
        }
    }
    if *residues.last().expect("non-empty") >= modulus {
        return Err(Error::InvalidSpec(format!(
            "residue {} is not below the modulus {}",
            residues.last().expect("non-empty"),
            modulus
        )));
    }
    Ok(())
}

/// Symmetric truncation of `⋃_{k ∈ residues} (modulus·ℤ + k)` with
/// `per_lattice` points per progression (`ℓ ∈ [-per/2, per - per/2)`),
/// sorted ascending. Companion generator for cross-checking
/// [`vandermonde_bounds`] against [`gram_bounds`] on actual truncations.
pub fn shifted_lattice_union(
    modulus: usize,
    residues: &[usize],
    per_lattice: usize,
) -> Result<Vec<f64>> {
    check_residues(modulus, residues)?;
    if per_lattice == 0 {
        return Err(Error::InvalidSpec(
            "per-lattice truncation must be positive".into(),
        ));
    }
    let half = (per_lattice / 2) as i64;
    let hi = (per_lattice - per_lattice / 2) as i64;
    let mut out = Vec::with_capacity(residues.len() * per_lattice);
    for &k in residues {
        for ell in -half..hi {
            out.push((modulus as i64 * ell + k as i64) as f64);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Windowed counting densities at a list of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    /// The radii the densities were measured at.
    pub radii: Vec<f64>,
    /// `min` over sliding length-`r` windows of `count / r` — converges to
    /// the lower uniform density as `r` grows.
    pub d_minus: Vec<f64>,
    /// `max` over sliding length-`r` windows of `count / r` — converges to
    /// the upper uniform density.
    pub d_plus: Vec<f64>,
    /// `count([-r, r]) / (2r)`, the centered counting density.
    pub centered: Vec<f64>,
}

/// Measures lower/upper/centered counting densities of `freqs` at each
/// radius. Sliding minima are taken over windows `(λ, λ + r]` anchored just
/// above a point and maxima over `[λ, λ + r)` anchored at a point — the two
/// families where the extrema of a count over all translates are attained.
/// Every radius must be positive and no larger than the frequency span.
pub fn beurling_density(freqs: &[f64], radii: &[f64]) -> Result<DensityReport> {
    validate_frequencies(freqs)?;
    if freqs.len() < 2 {
        return Err(Error::InvalidSpec(
            "density measurement needs at least two frequencies".into(),
        ));
    }
    let mut pts = freqs.to_vec();
    pts.sort_by(f64::total_cmp);
    let span = pts[pts.len() - 1] - pts[0];

    let mut d_minus = Vec::with_capacity(radii.len());
    let mut d_plus = Vec::with_capacity(radii.len());
    let mut centered = Vec::with_capacity(radii.len());
    for &r in radii {
        if !r.is_finite() || r <= 0.0 || r > span {
            return Err(Error::MalformedInput(format!(
                "radius {r} outside (0, span = {span}]"
            )));
        }
        let mut max_count = 0usize;
        let mut min_count = usize::MAX;
        for (i, &lam) in pts.iter().enumerate() {
            if lam + r > pts[pts.len() - 1] {
                break;
            }
            // Window [λ_i, λ_i + r): half-open ⇒ count is maximal here.
            let j_open = pts.partition_point(|&x| x < lam + r);
            max_count = max_count.max(j_open - i);
            // Window (λ_i, λ_i + r]: λ_i itself excluded ⇒ count is minimal.
            let j_closed = pts.partition_point(|&x| x <= lam + r);
            min_count = min_count.min(j_closed - (i + 1));
        }
        let lo = pts.partition_point(|&x| x < -r);
        let hi = pts.partition_point(|&x| x <= r);
        d_plus.push(max_count as f64 / r);
        d_minus.push(min_count as f64 / r);
        centered.push((hi - lo) as f64 / (2.0 * r));
    }
    Ok(DensityReport {
        radii: radii.to_vec(),
        d_minus,
        d_plus,
        centered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIXTURE_TOL: f64 = 1e-6;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn orthogonal_half_integer_gram_is_scaled_identity() {
        // On a length-1 interval the half-integer exponentials are an
        // orthonormal family: both Gram bounds collapse to the length.
        let freqs: Vec<f64> = (-32..32).map(|k| k as f64 + 0.5).collect();
        let est = gram_bounds(&freqs, 0.0, 1.0).unwrap();
        assert!(approx(est.lambda_min, 1.0, 1e-10), "{}", est.lambda_min);
        assert!(approx(est.lambda_max, 1.0, 1e-10), "{}", est.lambda_max);

        // Same statement on a length-2/3 interval with spacing-3/2 points.
        let len = 2.0f64 / 3.0;
        let freqs: Vec<f64> = (-12..12).map(|k| (k as f64 + 0.5) / len).collect();
        let est = gram_bounds(&freqs, 0.37, len).unwrap();
        assert!(approx(est.lambda_min, len, 1e-10), "{}", est.lambda_min);
        assert!(approx(est.lambda_max, len, 1e-10), "{}", est.lambda_max);
    }

    #[test]
    fn gram_rejects_duplicates_and_bad_intervals() {
        assert!(matches!(
            gram_bounds(&[1.0, 2.0, 1.0], 0.0, 1.0),
            Err(Error::DuplicateFrequency { .. })
        ));
        assert!(gram_bounds(&[], 0.0, 1.0).is_err());
        assert!(gram_bounds(&[1.0], 0.0, 0.0).is_err());
        assert!(gram_bounds(&[1.0, f64::NAN], 0.0, 1.0).is_err());
    }

    #[test]
    fn kadec_union_lower_bound_decays_with_truncation() {
        // The two perturbed half-families are individually healthy on a
        // length-1/2 interval but their union's lower Gram bound drains away
        // as the truncation grows: frozen reference values from an
        // independent dense-eigensolver implementation of the same
        // generators.
        let union64 = controls::kadec_union(64);
        let est64 = gram_bounds(&union64, 0.0, 1.0).unwrap();
        assert!(approx(est64.lambda_min, 0.44581018, FIXTURE_TOL), "{}", est64.lambda_min);

        let union128 = controls::kadec_union(128);
        let est128 = gram_bounds(&union128, 0.0, 1.0).unwrap();
        assert!(approx(est128.lambda_min, 0.39751561, FIXTURE_TOL), "{}", est128.lambda_min);
        assert!(est64.lambda_min - est128.lambda_min >= 1e-4);

        let first = gram_bounds(&controls::kadec_first(64), 0.0, 0.5).unwrap();
        assert!(approx(first.lambda_min, 0.26053319, FIXTURE_TOL), "{}", first.lambda_min);
        let second = gram_bounds(&controls::kadec_second(64), 0.0, 0.5).unwrap();
        assert!(approx(second.lambda_min, 0.33327154, FIXTURE_TOL), "{}", second.lambda_min);
    }

    #[test]
    fn incomplete_family_keeps_a_visible_residual() {
        // Half-density gaps leave the constant function far from the span;
        // frozen reference values as above.
        let one = TestFunction::Monomial { power: 0 };
        let r64 = completeness_residual(&controls::incomplete_set(64), 0.5, 0.5, &one).unwrap();
        assert!(approx(r64, 0.233971, 1e-5), "{r64}");
        let r128 = completeness_residual(&controls::incomplete_set(128), 0.5, 0.5, &one).unwrap();
        assert!(approx(r128, 0.223478, 1e-5), "{r128}");
        assert!(r128 < r64);
    }

    #[test]
    fn removing_zero_from_integers_leaves_unit_residual() {
        // The integers minus {0} cannot reproduce a constant on a length-1
        // interval at all: every remaining exponential is orthogonal to it.
        let freqs = controls::integers_without_zero(64);
        let one = TestFunction::Monomial { power: 0 };
        let r = completeness_residual(&freqs, 0.0, 1.0, &one).unwrap();
        assert!(approx(r, 1.0, 1e-12), "{r}");
    }

    #[test]
    fn vandermonde_bounds_match_closed_forms() {
        let s2 = std::f64::consts::SQRT_2;
        let cases: [(&[usize], f64, f64); 7] = [
            (&[0, 1], (2.0 - s2) / 4.0, (2.0 + s2) / 4.0),
            (&[0, 2], 0.5, 0.5),
            (&[0, 3], (2.0 - s2) / 4.0, (2.0 + s2) / 4.0),
            (&[1, 3], 0.5, 0.5),
            (&[0, 1, 2], 0.25, 1.0),
            (&[0, 1, 3], 0.25, 1.0),
            (&[0, 1, 2, 3], 1.0, 1.0),
        ];
        for (residues, want_lo, want_hi) in cases {
            let (lo, hi) = vandermonde_bounds(4, residues).unwrap();
            assert!(approx(lo, want_lo, 1e-9), "{residues:?}: {lo} vs {want_lo}");
            assert!(approx(hi, want_hi, 1e-9), "{residues:?}: {hi} vs {want_hi}");
        }

        assert!(vandermonde_bounds(4, &[0, 4]).is_err());
        assert!(vandermonde_bounds(4, &[1, 1]).is_err());
        assert!(vandermonde_bounds(4, &[2, 1]).is_err());
        assert!(vandermonde_bounds(0, &[0]).is_err());
        assert!(vandermonde_bounds(4, &[]).is_err());
    }

    #[test]
    fn finite_sections_realise_vandermonde_bounds_exactly() {
        // Splitting [0, |J|/N] into unit-density pieces block-diagonalises
        // the truncated Gram matrix, so the finite section realises the
        // Vandermonde bounds exactly — not just asymptotically.
        let residues = [0usize, 1];
        let per = 256 / residues.len();
        let freqs = shifted_lattice_union(4, &residues, per).unwrap();
        assert_eq!(freqs.len(), 256);
        let est = gram_bounds(&freqs, 0.0, residues.len() as f64 / 4.0).unwrap();
        let (lo, hi) = vandermonde_bounds(4, &residues).unwrap();
        assert!(approx(est.lambda_min, lo, 1e-9), "{} vs {lo}", est.lambda_min);
        assert!(approx(est.lambda_max, hi, 1e-9), "{} vs {hi}", est.lambda_max);
    }

    #[test]
    fn moments_match_quadrature() {
        // Composite Simpson as an independent oracle for every closed-form
        // moment, plus a few fixed pins so a sign convention cannot flip in
        // the formula and the oracle at once.
        let (a, len) = (0.3f64, 0.8f64);
        for power in 0..=3u32 {
            let f = TestFunction::Monomial { power };
            for lambda in [0.0, 1.0, -2.5, 7.25] {
                let got = f.moment(lambda, a, len);
                let want = simpson(|t| t.powi(power as i32), lambda, a, a + len);
                assert!(
                    (got - want).norm() <= 1e-9,
                    "p={power} λ={lambda}: {got} vs {want}"
                );
            }
        }
        let pins = [
            (1u32, 1.0, Complex::new(0.085814349271, -0.165591202329)),
            (2, -2.5, Complex::new(-0.071301414505, 0.006484555753)),
            (3, 7.25, Complex::new(-0.003403053165, -0.028917647130)),
            (0, 7.25, Complex::new(-0.022993849798, -0.011715951654)),
        ];
        for (power, lambda, want) in pins {
            let got = TestFunction::Monomial { power }.moment(lambda, a, len);
            assert!((got - want).norm() <= 1e-9, "p={power} λ={lambda}: {got}");
        }

        // Exponential and indicator moments against the same quadrature.
        let exp = TestFunction::Exponential { frequency: 1.75 };
        let got = exp.moment(-0.5, 0.2, 1.1);
        let want = simpson(|t| 1.0, -0.5 - 1.75, 0.2, 1.3);
        assert!((got - want).norm() <= 1e-9);
        assert!(approx(exp.moment(1.75, 0.2, 1.1).re, 1.1, 1e-12));

        let ind = TestFunction::Indicator { lo: 0.5, hi: 0.9 };
        let got = ind.moment(2.0, 0.0, 1.0);
        let want = simpson(|_| 1.0, 2.0, 0.5, 0.9);
        assert!((got - want).norm() <= 1e-9, "{got} vs {want}");
        assert!(approx(ind.norm_sq(0.0, 1.0), 0.4, 1e-12));
        assert!(approx(ind.norm_sq(0.0, 0.7), 0.2, 1e-12));

        assert!(TestFunction::Monomial { power: 4 }.validate().is_err());
    }

    /// `∫ g(t) e^{2πiλt} dt` by composite Simpson on 4096 panels.
    fn simpson(g: impl Fn(f64) -> f64, lambda: f64, a: f64, b: f64) -> Complex<f64> {
        let n = 4096usize;
        let h = (b - a) / n as f64;
        let eval = |t: f64| Complex::cis(TAU * lambda * t) * Complex::new(g(t), 0.0);
        let mut acc = eval(a) + eval(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += eval(a + i as f64 * h) * Complex::new(w, 0.0);
        }
        acc * Complex::new(h / 3.0, 0.0)
    }

    #[test]
    fn orthogonal_family_reproduces_its_own_members() {
        // Residual of e^{2πi·(−2.5)t} against half-integers on [0,1]: the
        // function is itself a member, so the residual vanishes; a constant
        // is not in the (incomplete-by-one-dimension) truncation but nearly
        // so, leaving a small positive residual.
        let freqs: Vec<f64> = (-16..16).map(|k| k as f64 + 0.5).collect();
        let member = TestFunction::Exponential { frequency: -2.5 };
        let r = completeness_residual(&freqs, 0.0, 1.0, &member).unwrap();
        assert!(r.abs() <= 1e-10, "{r}");

        let constant = TestFunction::Monomial { power: 0 };
        let r = completeness_residual(&freqs, 0.0, 1.0, &constant).unwrap();
        assert!(r > 0.0 && r < 0.05, "{r}");
    }

    #[test]
    fn densities_are_exact_on_lattices() {
        // Integers plus one extra half-integer point: the sliding lower
        // density is exactly 1 (the extra point never helps the minimum),
        // while the upper and centered densities carry the +1 excess.
        let mut freqs: Vec<f64> = (-1500..=1500).map(f64::from).collect();
        freqs.push(0.5);
        let rep = beurling_density(&freqs, &[1000.0]).unwrap();
        assert_eq!(rep.d_minus[0], 1.0);
        assert_eq!(rep.d_plus[0], 1001.0 / 1000.0);
        assert_eq!(rep.centered[0], 2002.0 / 2000.0);

        // Half-spaced lattice: every window of integer radius r holds
        // exactly 2r points.
        let freqs: Vec<f64> = (-800..=800).map(|k| k as f64 / 2.0).collect();
        let rep = beurling_density(&freqs, &[100.0, 250.0]).unwrap();
        assert_eq!(rep.d_minus, vec![2.0, 2.0]);
        assert_eq!(rep.d_plus, vec![2.0, 2.0]);
        assert_eq!(rep.centered, vec![2.005, 2.002]);

        assert!(beurling_density(&freqs, &[0.0]).is_err());
        assert!(beurling_density(&freqs, &[1e9]).is_err());
        assert!(beurling_density(&[1.0], &[1.0]).is_err());
    }

    fn distinct_freqs() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::btree_set(-40i32..40, 3..12)
            .prop_map(|s| s.into_iter().map(|k| k as f64 * 0.45).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        // Translating the interval conjugates the Gram matrix by a unitary
        // diagonal: the spectrum — and with it both Riesz bounds — is
        // invariant, and sections are always positive semidefinite.
        #[test]
        fn gram_spectrum_is_translation_invariant(
            freqs in distinct_freqs(),
            t0 in -2.0f64..2.0,
            shift in -3.0f64..3.0,
            length in 0.3f64..1.7,
        ) {
            let base = gram_bounds(&freqs, t0, length).unwrap();
            let moved = gram_bounds(&freqs, t0 + shift, length).unwrap();
            prop_assert!(base.lambda_min >= -1e-10);
            prop_assert!((base.lambda_min - moved.lambda_min).abs() <= 1e-9);
            prop_assert!((base.lambda_max - moved.lambda_max).abs() <= 1e-9);
        }

        // Rescaling time by s maps the system on [t0, t0+L] to frequencies
        // λ/s on [s·t0, s·t0 + s·L] and multiplies every Gram eigenvalue
        // by s.
        #[test]
        fn gram_spectrum_scales_with_the_interval(
            freqs in distinct_freqs(),
            t0 in -1.0f64..1.0,
            length in 0.3f64..1.7,
            scale in 0.25f64..4.0,
        ) {
            let base = gram_bounds(&freqs, t0, length).unwrap();
            let scaled_freqs: Vec<f64> = freqs.iter().map(|f| f / scale).collect();
            let scaled = gram_bounds(&scaled_freqs, scale * t0, scale * length).unwrap();
            prop_assert!((scaled.lambda_min - scale * base.lambda_min).abs() <= 1e-9 * scale.max(1.0));
            prop_assert!((scaled.lambda_max - scale * base.lambda_max).abs() <= 1e-9 * scale.max(1.0));
        }
    }
}
