//! Per-block rebalancing of composed maps.
//!
//! Composing a rounding pair `φ̂, ψ̂` (lattices of densities `a`, `b` into the
//! combined lattice of density `a+b`) with an outer map `σ` preserves
//! injectivity but can spoil the averaged-displacement budget: the naive
//! compositions `σ∘φ̂`, `σ∘ψ̂` inherit `σ`'s per-point wobble unevenly. This
//! module rebuilds the pair block by block. Within each block of `K₀`
//! combined-lattice points the assignment of `a`-side sources to targets is
//! walked through adjacent swaps until the block residual
//!
//! `S(φ) = Σ (σ(φ(x)) − x)` over the `a`-side sources of the block
//!
//! is at most `M̂ + 1/(2(a+b))` in absolute value, where `M̂` bounds the
//! displacement of all three input maps. Each adjacent swap moves `S` by at
//! most `2M̂ + 1/(a+b)`, so walking from an assignment with `S` of one sign
//! toward the opposite staircase must step across zero and land within half a
//! swap of it. The `b`-side map takes the leftover targets in order.
//!
//! All residual arithmetic is exact (integer index sums over the lattices
//! involved), so rational inputs yield exact rational residuals and the stop
//! criterion is deterministic.

use rayon::prelude::*;

use crate::avdonin::{AvdoninCertificate, FrequencyMap};
use crate::error::{Error, Result};
use crate::lattice::{AffineLattice, Window};
use crate::numerics::ExactScalar;
use crate::rounding::RoundingMap;

/// One block's balancing task: sources of both sides, the block's targets,
/// and the outer map's values on them.
#[derive(Clone, Debug)]
pub struct BlockProblem {
    block_index: i64,
    /// Source-lattice indices of the `a` side inside the block, ascending.
    source_a: Vec<i64>,
    /// Source-lattice indices of the `b` side inside the block, ascending.
    source_b: Vec<i64>,
    /// First combined-lattice index of the block; the block holds
    /// `k0` consecutive indices.
    target_first: i64,
    k0: i64,
    /// Outer-map image index for each of the block's `k0` targets.
    sigma_values: Vec<i64>,
    /// Seed assignment: positions (offsets into the block's targets) taken by
    /// the `a`-side rounding images, ascending.
    seed_positions: Vec<usize>,
    /// Displacement bound covering the rounding pair and the outer map.
    m_hat: f64,
    lattice_a: AffineLattice,
    lattice_b: AffineLattice,
    lattice_mid: AffineLattice,
    lattice_out: AffineLattice,
}

/// A balanced block assignment: `a`-side positions, residual, complement.
#[derive(Clone, Debug)]
pub struct BalancedAssignment {
    /// Positions (offsets into the block's targets) used by the `a` side,
    /// ascending; the i-th source maps to the i-th position.
    pub phi_positions: Vec<usize>,
    /// Complementary positions for the `b` side, ascending.
    pub psi_positions: Vec<usize>,
    /// Exact residual `S(φ)` of the returned assignment.
    pub s_exact: ExactScalar,
    /// The residual as a float, for reporting.
    pub s: f64,
    pub swap_steps: u64,
    /// Largest |ΔS| observed along the walk.
    pub max_step: f64,
}

impl BlockProblem {
    /// Assemble the balancing task for block `block_index` of length `k0`
    /// combined-lattice points, seeding from the rounding pair's own images.
    pub fn from_maps(
        phi_hat: &RoundingMap,
        psi_hat: &RoundingMap,
        sigma: &FrequencyMap,
        k0: i64,
        block_index: i64,
    ) -> Result<Self> {
        if k0 <= 0 {
            return Err(Error::InvalidSpec("block length k0 must be positive".to_string()));
        }
        let mid = phi_hat.target().clone();
        if psi_hat.target() != &mid || sigma.source() != &mid {
            return Err(Error::InvalidSpec(
                "rounding pair and outer map must share the combined lattice".to_string(),
            ));
        }
        let target_first = block_index
            .checked_mul(k0)
            .ok_or_else(|| Error::IndexOverflow {
                context: "block target range".to_string(),
                value: format!("{block_index}·{k0}"),
            })?;
        let window = block_frequency_window(&mid, k0, block_index)?;
        let (a_lo, a_hi) = phi_hat.source().index_range(&window)?;
        let (b_lo, b_hi) = psi_hat.source().index_range(&window)?;
        let source_a: Vec<i64> = (a_lo..a_hi).collect();
        let source_b: Vec<i64> = (b_lo..b_hi).collect();
        let found = source_a.len() + source_b.len();
        if found != k0 as usize {
            return Err(Error::CountingMismatch {
                block: block_index,
                expected: k0 as usize,
                found,
            });
        }
        let mut sigma_values = Vec::with_capacity(k0 as usize);
        for t in target_first..target_first + k0 {
            let m = sigma.target_index(t).ok_or_else(|| {
                Error::MalformedInput(format!(
                    "outer map does not cover combined index {t} in block {block_index}"
                ))
            })?;
            sigma_values.push(m);
        }
        let mut seed_positions = Vec::with_capacity(source_a.len());
        for &k in &source_a {
            let m = phi_hat.eval_index(k)?;
            let pos = m - target_first;
            if pos < 0 || pos >= k0 {
                return Err(Error::InvalidSpec(format!(
                    "rounding image {m} of source {k} escapes block {block_index}; \
                     is k0 a multiple of the parity period?"
                )));
            }
            seed_positions.push(pos as usize);
        }
        let mut sorted = seed_positions.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seed_positions.len() {
            return Err(Error::InvalidSpec(format!(
                "rounding images collide inside block {block_index}"
            )));
        }
        // The rounding pair never moves a point further than half the
        // combined spacing; the outer map's own measured bound joins in.
        let half_spacing = mid.spacing().to_f64() / 2.0;
        let m_hat = sigma.displacement_bound().max(half_spacing) * (1.0 + 1e-9);
        Ok(BlockProblem {
            block_index,
            source_a,
            source_b,
            target_first,
            k0,
            sigma_values,
            seed_positions: sorted,
            m_hat,
            lattice_a: phi_hat.source().clone(),
            lattice_b: psi_hat.source().clone(),
            lattice_mid: mid,
            lattice_out: sigma.target().clone(),
        })
    }

    /// Override the displacement bound (e.g. an analytic bound from the
    /// caller); the balancing guarantee needs it to dominate the outer map's
    /// true per-point displacement on this block.
    pub fn with_displacement_bound(mut self, m_hat: f64) -> Self {
        self.m_hat = m_hat;
        self
    }

    pub fn block_index(&self) -> i64 {
        self.block_index
    }

    /// First combined-lattice index of the block.
    pub fn target_first(&self) -> i64 {
        self.target_first
    }

    pub fn source_a_indices(&self) -> &[i64] {
        &self.source_a
    }

    pub fn source_b_indices(&self) -> &[i64] {
        &self.source_b
    }

    /// The four lattices involved: `a` side, `b` side, combined, output.
    pub fn lattices(&self) -> (&AffineLattice, &AffineLattice, &AffineLattice, &AffineLattice) {
        (&self.lattice_a, &self.lattice_b, &self.lattice_mid, &self.lattice_out)
    }

    pub fn n0(&self) -> usize {
        self.source_a.len()
    }

    pub fn k0(&self) -> i64 {
        self.k0
    }

    pub fn displacement_bound(&self) -> f64 {
        self.m_hat
    }

    /// `M̂ + 1/(2(a+b))`: the residual bound the walk must reach.
    pub fn residual_bound(&self) -> ExactScalar {
        let half_spacing = &self.lattice_mid.spacing() * &ExactScalar::half();
        &dyadic(self.m_hat) + &half_spacing
    }

    /// `2M̂ + 1/(a+b)`: the largest residual change one adjacent swap causes.
    pub fn step_bound(&self) -> ExactScalar {
        &dyadic(2.0 * self.m_hat) + &self.lattice_mid.spacing()
    }

    /// Exact residual of an assignment, given the used positions.
    fn residual(&self, positions: &[usize]) -> ExactScalar {
        let sum_m: i128 = positions
            .iter()
            .map(|&j| self.sigma_values[j] as i128)
            .sum();
        let sum_k: i128 = self.source_a.iter().map(|&k| k as i128).sum();
        let n = ExactScalar::rational(positions.len() as i64, 1);
        let img = &(&big(sum_m) + &(&n * self.lattice_out.alpha())) / self.lattice_out.a();
        let src = &(&big(sum_k) + &(&n * self.lattice_a.alpha())) / self.lattice_a.a();
        &img - &src
    }
}

/// Exact dyadic embedding of a float.
fn dyadic(v: f64) -> ExactScalar {
    ExactScalar::from_f64_exact(v).expect("finite float")
}

fn big(v: i128) -> ExactScalar {
    ExactScalar::from_bigrational(num_rational::BigRational::from_integer(
        num_bigint::BigInt::from(v),
    ))
}

/// Frequency interval `[ℓ·k0, (ℓ+1)·k0) / (a+b)` of block `ℓ`.
pub fn block_frequency_window(mid: &AffineLattice, k0: i64, l: i64) -> Result<Window> {
    let lo = l.checked_mul(k0).ok_or_else(|| Error::IndexOverflow {
        context: "block window".to_string(),
        value: format!("{l}·{k0}"),
    })?;
    let spacing = mid.spacing();
    Window::new(
        &ExactScalar::rational(lo, 1) * &spacing,
        &ExactScalar::rational(lo + k0, 1) * &spacing,
    )
}

/// Walk the block's assignment through adjacent swaps until the residual is
/// within `M̂ + 1/(2(a+b))` of zero.
pub fn block_balance(p: &BlockProblem) -> Result<BalancedAssignment> {
    let bound = p.residual_bound();
    let step_bound = p.step_bound();
    let k0 = p.k0 as usize;
    let n0 = p.source_a.len();
    let mut used = vec![false; k0];
    let mut positions = p.seed_positions.clone();
    for &j in &positions {
        used[j] = true;
    }
    let mut s = p.residual(&positions);
    let mut swap_steps = 0u64;
    let mut max_step = ExactScalar::zero();
    let max_swaps = (n0 as u64) * ((k0 - n0) as u64) + 1;
    let out_spacing = p.lattice_out.spacing();
    while s.abs() > bound {
        if swap_steps >= max_swaps {
            return Err(no_crossing(p));
        }
        // Walk opposite the residual's sign: downward swaps trade a used
        // position for the free one just below it, lowering Σ σ(t) on
        // average; upward swaps do the reverse.
        let downward = s.is_positive();
        let Some((from, to)) = next_adjacent_swap(&used, downward) else {
            return Err(no_crossing(p));
        };
        let delta = &ExactScalar::rational(
            p.sigma_values[to] - p.sigma_values[from],
            1,
        ) * &out_spacing;
        assert!(
            delta.abs() <= step_bound,
            "swap step {} exceeds 2M̂ + 1/(a+b) = {} in block {}",
            delta.abs(),
            step_bound,
            p.block_index
        );
        used[from] = false;
        used[to] = true;
        let idx = positions.iter().position(|&j| j == from).expect("position in use");
        positions[idx] = to;
        s = &s + &delta;
        swap_steps += 1;
        let mag = delta.abs();
        if mag > max_step {
            max_step = mag;
        }
    }
    positions.sort_unstable();
    let psi_positions: Vec<usize> = (0..k0).filter(|&j| !used[j]).collect();
    debug_assert_eq!(positions.len() + psi_positions.len(), k0);
    Ok(BalancedAssignment {
        s: s.to_f64(),
        s_exact: s,
        phi_positions: positions,
        psi_positions,
        swap_steps,
        max_step: max_step.to_f64(),
    })
}

/// Choose the canonical adjacent swap: downward takes the lowest used
/// position with a free slot just below; upward the highest used position
/// with a free slot just above.
fn next_adjacent_swap(used: &[bool], downward: bool) -> Option<(usize, usize)> {
    if downward {
        (1..used.len()).find(|&j| used[j] && !used[j - 1]).map(|j| (j, j - 1))
    } else {
        (0..used.len() - 1)
            .rev()
            .find(|&j| used[j] && !used[j + 1])
            .map(|j| (j, j + 1))
    }
}

fn no_crossing(p: &BlockProblem) -> Error {
    let k0 = p.k0 as usize;
    let n0 = p.source_a.len();
    let bottom: Vec<usize> = (0..n0).collect();
    let top: Vec<usize> = (k0 - n0..k0).collect();
    let s_bot = p.residual(&bottom).to_f64();
    let s_top = p.residual(&top).to_f64();
    Error::NoCrossing {
        block: p.block_index,
        s_min: s_bot.min(s_top),
        s_max: s_bot.max(s_top),
    }
}

/// Settings and measurements of one composition pass.
#[derive(Clone, Debug)]
pub struct CompositionReport {
    pub k0: i64,
    pub m_hat: f64,
    /// Analytic displacement bound `M̂ + K₀/(a+b)` of the rebuilt pair.
    pub displacement_analytic: f64,
    pub blocks: i64,
    pub total_swaps: u64,
    pub max_step: f64,
    pub cert_phi: AvdoninCertificate,
    pub cert_psi: AvdoninCertificate,
    pub attempts: u32,
}

/// Attempt caps for the doubling search.
const MAX_K0_ATTEMPTS: u32 = 6;

/// Rebuild `σ∘φ̂`, `σ∘ψ̂` block by block over the outer map's full coverage
/// and certify both at the block length; the measured discrepancies must meet
/// `ε + 3δ`, where `ε` is the outer map's budget and `δ` the pair's.
///
/// `K₀` starts at the smallest multiple of the rounding pair's parity period
/// satisfying `M̂(a+b) + ½ ≤ δK₀` and doubles when a measured certificate
/// misses the budget.
pub fn compose_and_certify(
    phi_hat: &RoundingMap,
    psi_hat: &RoundingMap,
    sigma: &FrequencyMap,
    delta: f64,
    epsilon: f64,
) -> Result<(FrequencyMap, FrequencyMap, CompositionReport)> {
    if delta <= 0.0 {
        return Err(Error::InvalidSpec("delta must be positive".to_string()));
    }
    let mid = phi_hat.target().clone();
    let total = mid.a(); // a+b
    let half_spacing = mid.spacing().to_f64() / 2.0;
    let m_hat = sigma.displacement_bound().max(half_spacing) * (1.0 + 1e-9);
    let period = phi_hat.period_target_steps().unwrap_or(1);
    // smallest multiple of the parity period with M̂(a+b) + ½ ≤ δ·K₀
    let need = (m_hat * total.to_f64() + 0.5) / delta;
    let mut k0 = period * ((need / period as f64).ceil().max(1.0) as i64);
    let budget = epsilon + 3.0 * delta;
    let mut attempts = 0u32;
    let mut last_measured = f64::INFINITY;
    while attempts < MAX_K0_ATTEMPTS {
        attempts += 1;
        let (phi, psi, mut report) =
            compose_once(phi_hat, psi_hat, sigma, k0)?;
        report.m_hat = m_hat;
        report.attempts = attempts;
        let measured = report.cert_phi.epsilon_hat.max(report.cert_psi.epsilon_hat);
        if measured <= budget {
            return Ok((phi, psi, report));
        }
        last_measured = measured;
        k0 *= 2;
    }
    Err(Error::BudgetExceeded {
        measured: last_measured,
        target: budget,
        attempts,
    })
}

/// One composition pass at a fixed `K₀`.
fn compose_once(
    phi_hat: &RoundingMap,
    psi_hat: &RoundingMap,
    sigma: &FrequencyMap,
    k0: i64,
) -> Result<(FrequencyMap, FrequencyMap, CompositionReport)> {
    let mid = phi_hat.target().clone();
    let (cov_lo, cov_hi) = sigma.k_range();
    // full blocks inside the outer map's coverage
    let l_lo = -(-cov_lo).div_euclid(k0);
    let l_hi = cov_hi.div_euclid(k0);
    if l_hi - l_lo < crate::avdonin::MIN_CERT_BLOCKS {
        return Err(Error::WindowTooSmall {
            have: (l_hi - l_lo).max(0),
            need: crate::avdonin::MIN_CERT_BLOCKS,
            block_len: k0 as f64 * mid.spacing().to_f64(),
        });
    }
    let balanced: Vec<(BlockProblem, BalancedAssignment)> = (l_lo..l_hi)
        .into_par_iter()
        .map(|l| {
            let p = BlockProblem::from_maps(phi_hat, psi_hat, sigma, k0, l)?;
            let b = block_balance(&p)?;
            Ok((p, b))
        })
        .collect::<Result<_>>()?;
    let mut targets_phi = Vec::new();
    let mut targets_psi = Vec::new();
    let mut total_swaps = 0u64;
    let mut max_step = 0.0f64;
    for (p, b) in &balanced {
        for &j in &b.phi_positions {
            targets_phi.push(p.sigma_values[j]);
        }
        for &j in &b.psi_positions {
            targets_psi.push(p.sigma_values[j]);
        }
        total_swaps += b.swap_steps;
        max_step = max_step.max(b.max_step);
    }
    let first = &balanced.first().expect("nonempty block range").0;
    let k_first_a = first.source_a.first().copied();
    let k_first_b = first.source_b.first().copied();
    // Blocks tile the frequency axis, so per-block source ranges concatenate
    // into one contiguous index range per side.
    let window = Window::new(
        &ExactScalar::rational(l_lo * k0, 1) * &mid.spacing(),
        &ExactScalar::rational(l_hi * k0, 1) * &mid.spacing(),
    )?;
    let (a_lo, a_hi) = phi_hat.source().index_range(&window)?;
    let (b_lo, b_hi) = psi_hat.source().index_range(&window)?;
    debug_assert_eq!(k_first_a.unwrap_or(a_lo), a_lo);
    debug_assert_eq!(k_first_b.unwrap_or(b_lo), b_lo);
    if targets_phi.len() != (a_hi - a_lo) as usize || targets_psi.len() != (b_hi - b_lo) as usize {
        return Err(Error::InvalidSpec(
            "balanced blocks do not concatenate into contiguous coverage".to_string(),
        ));
    }
    let mut phi = FrequencyMap::from_parts(
        phi_hat.source().clone(),
        sigma.target().clone(),
        a_lo,
        targets_phi,
    )?;
    let mut psi = FrequencyMap::from_parts(
        psi_hat.source().clone(),
        sigma.target().clone(),
        b_lo,
        targets_psi,
    )?;
    let r = &ExactScalar::rational(k0, 1) * &mid.spacing();
    let cert_phi = phi.certify(&r, &window)?;
    let cert_psi = psi.certify(&r, &window)?;
    let report = CompositionReport {
        k0,
        m_hat: 0.0, // filled by the caller
        displacement_analytic: sigma.displacement_bound() + k0 as f64 * mid.spacing().to_f64(),
        blocks: l_hi - l_lo,
        total_swaps,
        max_step,
        cert_phi,
        cert_psi,
        attempts: 0,
    };
    Ok((phi, psi, report))
}

/// Check that the rebuilt pair's ranges exactly partition the outer map's
/// range over the covered blocks.
pub fn verify_partition_of_range(
    phi: &FrequencyMap,
    psi: &FrequencyMap,
    sigma: &FrequencyMap,
    k0: i64,
) -> Result<()> {
    let (cov_lo, cov_hi) = sigma.k_range();
    let l_lo = -(-cov_lo).div_euclid(k0);
    let l_hi = cov_hi.div_euclid(k0);
    let mut combined = phi.target_indices().to_vec();
    combined.extend_from_slice(psi.target_indices());
    combined.sort_unstable();
    let mut expected: Vec<i64> = (l_lo * k0..l_hi * k0)
        .map(|t| {
            sigma.target_index(t).ok_or_else(|| {
                Error::MalformedInput(format!("outer map does not cover index {t}"))
            })
        })
        .collect::<Result<_>>()?;
    expected.sort_unstable();
    if combined != expected {
        return Err(Error::InvalidSpec(
            "rebuilt pair does not partition the outer map's range".to_string(),
        ));
    }
    Ok(())
}
