//! Top-level drivers: build a certified partition of the half-integers into
//! frequency sets, one per interval length, and recombine certified sets.
//!
//! Given lengths `b₁ + … + b_n = 1`, the driver peels intervals off one at a
//! time. Stage 1 splits `[0,1]` as `(b₁, c₁)` with the rounding pair; its
//! `φ̂`-side becomes `Λ₁` and its `ψ̂`-side the outer map for the next stage.
//! Stage `j` splits the remainder `c_{j−1} = b_j + c_j`, rounds, and
//! rebalances through the accumulated outer map (module [`crate::rearrange`]),
//! so the certified budget grows like `(1 − 2^{−j})·δ` and stays below
//! `δ = 4^{−K}` for every produced set. The last set takes the final
//! remainder map unchanged.
//!
//! Unions of produced sets are recombined by [`recombine_union`]: the
//! rounding pair of the two densities is inverted blockwise to route every
//! combined-lattice point through whichever input map owns it; `k`-fold
//! unions are left folds of this pairwise step, certified against
//! `4^{k−1}·δ`.
//!
//! Window semantics: the caller's window is a *minimum*. Long certification
//! blocks need long windows, so the builder works on a padded super-window
//! and reports the full contiguous cover it certified, which always contains
//! the request. Every reported certificate is re-measured on the reported
//! data with its exact block length recorded, so an independent pass over
//! the artifact reproduces each number bit for bit.

use serde::{Deserialize, Serialize};

use crate::avdonin::{
    check_certificate, AvdoninCertificate, FrequencyMap, RieszHypothesisCheck,
};
use crate::error::{Error, Result};
use crate::lattice::{AffineLattice, Window};
use crate::numerics::ExactScalar;
use crate::rearrange::{compose_and_certify, verify_partition_of_range};
use crate::rounding::{build_pair, RoundingMap};

/// Which unions of the produced sets to certify.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnionRequest {
    /// No union certificates.
    None,
    /// Every subset of size 2..=budget (only sensible for small `n`).
    AllWithinBudget,
    /// Specific index sets (1-based labels).
    Explicit(Vec<Vec<usize>>),
}

/// Validated build request: interval lengths and the union-size budget `K`
/// that fixes the per-set tolerance `δ = 4^{−K}`.
#[derive(Clone, Debug)]
pub struct PartitionSpec {
    lengths: Vec<ExactScalar>,
    union_budget: u32,
    unions: UnionRequest,
    truncated: bool,
}

impl PartitionSpec {
    /// Lengths must be positive and sum to 1 — exactly when all rational,
    /// within guards otherwise.
    pub fn new(lengths: Vec<ExactScalar>, union_budget: u32) -> Result<Self> {
        if lengths.len() < 2 {
            return Err(Error::InvalidSpec(
                "need at least two interval lengths".to_string(),
            ));
        }
        if union_budget < 1 {
            return Err(Error::InvalidSpec("union budget must be ≥ 1".to_string()));
        }
        let mut sum = ExactScalar::zero();
        let mut all_rational = true;
        for b in &lengths {
            if !b.is_positive() {
                return Err(Error::InvalidSpec(format!(
                    "interval lengths must be positive, got {b}"
                )));
            }
            all_rational &= b.is_rational();
            sum = &sum + b;
        }
        let diff = (&sum - &ExactScalar::one()).abs();
        if all_rational {
            if !diff.is_zero() {
                return Err(Error::InvalidSpec(format!(
                    "rational lengths must sum to 1 exactly, off by {diff}"
                )));
            }
        } else if diff.to_f64() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "lengths must sum to 1, off by {}",
                diff.to_f64()
            )));
        }
        Ok(PartitionSpec {
            lengths,
            union_budget,
            unions: UnionRequest::AllWithinBudget,
            truncated: false,
        })
    }

    /// Truncation of an infinite list: the unassigned remainder `1 − Σ b_j`
    /// is carried as one synthetic final interval.
    pub fn truncated(mut lengths: Vec<ExactScalar>, union_budget: u32) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidSpec("need at least one length".to_string()));
        }
        let mut sum = ExactScalar::zero();
        for b in &lengths {
            sum = &sum + b;
        }
        let tail = &ExactScalar::one() - &sum;
        if !tail.is_positive() {
            return Err(Error::InvalidSpec(
                "truncated lengths must leave a positive tail".to_string(),
            ));
        }
        lengths.push(tail);
        let mut spec = Self::new(lengths, union_budget)?;
        spec.truncated = true;
        Ok(spec)
    }

    pub fn with_unions(mut self, unions: UnionRequest) -> Self {
        self.unions = unions;
        self
    }

    pub fn lengths(&self) -> &[ExactScalar] {
        &self.lengths
    }

    pub fn union_budget(&self) -> u32 {
        self.union_budget
    }

    pub fn union_request(&self) -> &UnionRequest {
        &self.unions
    }

    /// Per-set tolerance `δ = 4^{−K}`.
    pub fn delta(&self) -> f64 {
        0.25f64.powi(self.union_budget as i32)
    }
}

/// One produced frequency set, serialization-ready.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetReport {
    pub label: String,
    /// Interval length this set serves.
    pub length: ExactScalar,
    /// Frequencies inside the reported window, ascending.
    pub frequencies: Vec<f64>,
    pub certificate: RieszHypothesisCheck,
}

/// Certificate for one requested union of sets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnionReport {
    #[serde(rename = "J")]
    pub j: Vec<usize>,
    /// `4^{|J|−1}·δ`.
    pub budget: f64,
    pub budget_pass: bool,
    pub certificate: RieszHypothesisCheck,
}

/// Per-stage construction record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: usize,
    /// Composition block length in combined-lattice steps (stage 1: the
    /// certification block length in target steps).
    pub k0: i64,
    pub blocks: i64,
    pub swaps: u64,
    pub max_step: f64,
    pub budget: f64,
    pub epsilon_hat_phi: f64,
    pub epsilon_hat_psi: f64,
    pub attempts: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BuildLog {
    pub stages: Vec<StageLog>,
    pub notes: Vec<String>,
}

/// Echo of the request inside the artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpecEcho {
    pub lengths: Vec<ExactScalar>,
    pub budget_k: u32,
    pub delta: f64,
    pub truncated: bool,
}

/// The serializable partition artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionResult {
    pub spec: SpecEcho,
    /// Certified index window `[lo, hi)`: the sets jointly hold exactly the
    /// frequencies `m + ½` for `m` in this range (before shifting). Always
    /// contains the window the build was asked for.
    pub window: [i64; 2],
    /// Whether frequencies have been shifted down by ½ onto the integers.
    pub shifted: bool,
    pub sets: Vec<SetReport>,
    pub unions: Vec<UnionReport>,
    pub log: BuildLog,
}

impl PartitionResult {
    /// True when every per-set and per-union check passed.
    pub fn all_pass(&self) -> bool {
        self.sets.iter().all(|s| s.certificate.pass)
            && self
                .unions
                .iter()
                .all(|u| u.budget_pass && u.certificate.pass)
    }
}

/// A build outcome: the artifact plus the live maps behind it.
pub struct PartitionBuild {
    pub result: PartitionResult,
    /// One realized map per set, in label order, trimmed to the reported
    /// window and carrying the reported certificate.
    pub maps: Vec<FrequencyMap>,
    /// Realized union maps for the requested index sets.
    pub union_maps: Vec<(Vec<usize>, FrequencyMap)>,
}

const PAD_ATTEMPTS: u32 = 6;
const LADDER_ATTEMPTS: u32 = 10;

/// Build the certified partition over (at least) the requested window.
///
/// The working window is padded — composition stages consume boundary blocks
/// and certificates need many blocks — and the pad doubles on a shortfall.
pub fn build_partition(spec: &PartitionSpec, window: &Window) -> Result<PartitionBuild> {
    let half = AffineLattice::half_integers();
    let (req_lo, req_hi) = half.index_range(window)?;
    if req_hi - req_lo < 4 {
        return Err(Error::InvalidSpec(
            "requested window holds fewer than four half-integers".to_string(),
        ));
    }
    let span = (req_hi - req_lo) as f64;
    let mut pad = (0.25 * span).max(256.0) + 64.0 * spec.lengths.len() as f64;
    let mut notes = Vec::new();
    let mut attempt = 1;
    loop {
        match build_once(spec, req_lo, req_hi, pad, &notes) {
            Ok(build) => return Ok(build),
            Err(Error::WindowTooSmall { have, need, .. }) if attempt < PAD_ATTEMPTS => {
                notes.push(format!(
                    "attempt {attempt}: working pad {pad:.0} too small ({have} of {need} blocks); doubling"
                ));
                pad *= 2.0;
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn build_once(
    spec: &PartitionSpec,
    req_lo: i64,
    req_hi: i64,
    pad: f64,
    base_notes: &[String],
) -> Result<PartitionBuild> {
    let mut notes = base_notes.to_vec();
    notes.push(format!("working window pad: {pad:.0} frequency units"));
    let work = Window::new(
        &ExactScalar::rational(req_lo, 1) - &dyadic(pad),
        &ExactScalar::rational(req_hi, 1) + &dyadic(pad),
    )?;
    let n = spec.lengths.len();
    let delta = spec.delta();
    let mut stages = Vec::new();
    let mut maps: Vec<FrequencyMap> = Vec::new();
    let mut set_lengths: Vec<ExactScalar> = Vec::new();

    // stage 1: split 1 = b₁ + c₁ by the rounding pair alone
    let b1 = spec.lengths[0].clone();
    let c1 = &ExactScalar::one() - &b1;
    if !c1.is_positive() {
        return Err(Error::InvalidSpec("first length must be below 1".to_string()));
    }
    let (phi1_hat, psi1_hat, _) = build_pair(&b1, &c1)?;
    let eps1 = delta / 2.0;
    let mut phi1 = FrequencyMap::from_rounding(&phi1_hat, &work)?;
    let mut psi1 = FrequencyMap::from_rounding(&psi1_hat, &work)?;
    let r0 = ExactScalar::rational(stage1_block_length(&phi1_hat, eps1), 1);
    let cert_phi1 = certify_to_budget(&mut phi1, &r0, eps1, &work)?;
    let cert_psi1 = certify_to_budget(&mut psi1, &r0, eps1, &work)?;
    stages.push(StageLog {
        stage: 1,
        k0: cert_phi1.r as i64,
        blocks: cert_phi1.blocks_checked,
        swaps: 0,
        max_step: 0.0,
        budget: eps1,
        epsilon_hat_phi: cert_phi1.epsilon_hat,
        epsilon_hat_psi: cert_psi1.epsilon_hat,
        attempts: 1,
    });
    maps.push(phi1);
    set_lengths.push(b1);

    // stages 2..n−1: split the remainder and rebalance through the outer map
    let mut sigma = psi1;
    let mut c_prev = c1;
    for j in 2..n {
        let bj = spec.lengths[j - 1].clone();
        let cj = &c_prev - &bj;
        if !cj.is_positive() {
            return Err(Error::InvalidSpec(format!(
                "length {j} exhausts the remaining interval"
            )));
        }
        let (phij_hat, psij_hat, _) = build_pair(&bj, &cj)?;
        let eps_pair = delta / (3.0 * 2f64.powi(j as i32));
        let eps_sigma = (1.0 - 2f64.powi(-(j as i32 - 1))) * delta;
        let (phij, psij, report) =
            compose_and_certify(&phij_hat, &psij_hat, &sigma, eps_pair, eps_sigma)?;
        verify_partition_of_range(&phij, &psij, &sigma, report.k0)?;
        stages.push(StageLog {
            stage: j,
            k0: report.k0,
            blocks: report.blocks,
            swaps: report.total_swaps,
            max_step: report.max_step,
            budget: eps_sigma + 3.0 * eps_pair,
            epsilon_hat_phi: report.cert_phi.epsilon_hat,
            epsilon_hat_psi: report.cert_psi.epsilon_hat,
            attempts: report.attempts,
        });
        maps.push(phij);
        set_lengths.push(bj);
        sigma = psij;
        c_prev = cj;
    }

    // final set: the remainder map itself
    maps.push(sigma);
    set_lengths.push(c_prev);

    // the union of all sets must cover the requested range contiguously,
    // with no frequency claimed twice
    let mut merged: Vec<i64> = Vec::new();
    for m in &maps {
        merged.extend_from_slice(m.target_indices());
    }
    merged.sort_unstable();
    for w in merged.windows(2) {
        if w[0] == w[1] {
            return Err(Error::RangeCollision {
                frequency: format!("{}", w[0] as f64 + 0.5),
            });
        }
    }
    let (run_lo, run_hi) = longest_run(&merged);
    if run_lo > req_lo || run_hi < req_hi {
        return Err(Error::WindowTooSmall {
            have: run_hi.saturating_sub(run_lo),
            need: req_hi - req_lo,
            block_len: 1.0,
        });
    }
    notes.push(format!(
        "requested window [{req_lo}, {req_hi}); certified cover [{run_lo}, {run_hi})"
    ));

    // trim every map to the certified cover and re-measure its certificate
    // there: the trimmed blocks are a subset of the build blocks, so budgets
    // survive, and the reported numbers are reproducible from reported data
    let mut sets = Vec::new();
    for (i, (map, len)) in maps.iter_mut().zip(&set_lengths).enumerate() {
        let r_exact = map
            .certificate()
            .ok_or_else(|| Error::InvalidSpec("set left uncertified".to_string()))?
            .r_exact
            .clone();
        let mut trimmed = restrict_by_targets(map, run_lo, run_hi)?;
        let cert = canonical_certificate(&mut trimmed, &r_exact)?;
        if cert.epsilon_hat > delta {
            return Err(Error::BudgetExceeded {
                measured: cert.epsilon_hat,
                target: delta,
                attempts: 1,
            });
        }
        let label = if spec.truncated && i == n - 1 {
            "Lambda_tail".to_string()
        } else {
            format!("Lambda_{}", i + 1)
        };
        sets.push(SetReport {
            label,
            length: len.clone(),
            frequencies: trimmed
                .target_indices()
                .iter()
                .map(|&m| m as f64 + 0.5)
                .collect(),
            certificate: check_certificate(&cert, len),
        });
        *map = trimmed;
    }

    // requested unions, rebuilt from the trimmed maps so a verifier working
    // from the artifact recombines the identical object
    let mut unions = Vec::new();
    let mut union_maps = Vec::new();
    for j_set in resolve_unions(&spec.unions, n, spec.union_budget)? {
        let budget = 4f64.powi(j_set.len() as i32 - 1) * delta;
        let sel_maps: Vec<&FrequencyMap> = j_set.iter().map(|&j| &maps[j - 1]).collect();
        let sel_lens: Vec<&ExactScalar> = j_set.iter().map(|&j| &set_lengths[j - 1]).collect();
        let (umap, ucert) = combine_union(&sel_maps, &sel_lens, budget)?;
        let mut total = ExactScalar::zero();
        for l in &sel_lens {
            total = &total + *l;
        }
        unions.push(UnionReport {
            j: j_set.clone(),
            budget,
            budget_pass: ucert.epsilon_hat <= budget,
            certificate: check_certificate(&ucert, &total),
        });
        union_maps.push((j_set, umap));
    }

    let result = PartitionResult {
        spec: SpecEcho {
            lengths: spec.lengths.clone(),
            budget_k: spec.union_budget,
            delta,
            truncated: spec.truncated,
        },
        window: [run_lo, run_hi],
        shifted: false,
        sets,
        unions,
        log: BuildLog { stages, notes },
    };
    Ok(PartitionBuild {
        result,
        maps,
        union_maps,
    })
}

/// Starting block length for the first stage: the exact period when the
/// split is rational (one-period sums are exact), else sized to the budget.
fn stage1_block_length(phi_hat: &RoundingMap, eps: f64) -> i64 {
    phi_hat
        .period_target_steps()
        .unwrap_or_else(|| (1.0 / eps).ceil() as i64)
}

/// All requested label sets, validated, in deterministic order.
fn resolve_unions(req: &UnionRequest, n: usize, budget: u32) -> Result<Vec<Vec<usize>>> {
    match req {
        UnionRequest::None => Ok(Vec::new()),
        UnionRequest::AllWithinBudget => {
            let cap = (budget as usize).min(n);
            let mut out = Vec::new();
            // subsets ordered by size, then lexicographically
            for size in 2..=cap {
                let mut idx: Vec<usize> = (1..=size).collect();
                loop {
                    out.push(idx.clone());
                    let mut i = size;
                    while i > 0 && idx[i - 1] == n - size + i {
                        i -= 1;
                    }
                    if i == 0 {
                        break;
                    }
                    idx[i - 1] += 1;
                    for k in i..size {
                        idx[k] = idx[k - 1] + 1;
                    }
                }
            }
            Ok(out)
        }
        UnionRequest::Explicit(list) => {
            let mut out = Vec::new();
            for j_set in list {
                let mut j = j_set.clone();
                j.sort_unstable();
                j.dedup();
                if j.len() < 2 || j.len() != j_set.len() {
                    return Err(Error::InvalidSpec(format!(
                        "union request {j_set:?} must hold at least two distinct labels"
                    )));
                }
                if j.len() > budget as usize {
                    return Err(Error::InvalidSpec(format!(
                        "union request {j_set:?} exceeds the budget K = {budget}"
                    )));
                }
                if j.iter().any(|&x| x < 1 || x > n) {
                    return Err(Error::InvalidSpec(format!(
                        "union request {j_set:?} references a missing set"
                    )));
                }
                out.push(j);
            }
            Ok(out)
        }
    }
}

/// Left-fold pairwise recombination of disjoint certified maps, without a
/// certificate. The fold ascends the label order handed in.
pub fn recombine_union(
    maps: &[&FrequencyMap],
    lengths: &[&ExactScalar],
) -> Result<FrequencyMap> {
    if maps.len() != lengths.len() || maps.is_empty() {
        return Err(Error::InvalidSpec(
            "need one length per map and at least one map".to_string(),
        ));
    }
    let mut acc = maps[0].clone();
    let mut acc_len = lengths[0].clone();
    for (map, len) in maps.iter().zip(lengths).skip(1) {
        acc = combine_pair(&acc, &acc_len, map, len)?;
        acc_len = &acc_len + *len;
    }
    Ok(acc)
}

/// Recombine and certify against `target` on an escalating block-length
/// ladder. The best certificate is kept either way: a budget miss shows up
/// in the returned numbers, not as an error.
pub fn combine_union(
    maps: &[&FrequencyMap],
    lengths: &[&ExactScalar],
    target: f64,
) -> Result<(FrequencyMap, AvdoninCertificate)> {
    let mut acc = recombine_union(maps, lengths)?;
    let r_base = maps
        .iter()
        .filter_map(|m| m.certificate().map(|c| c.r))
        .fold(8.0f64, f64::max)
        .ceil() as i64;
    let w = coverage_window(&acc);
    let (cert, _) = ladder(&mut acc, &ExactScalar::rational(r_base, 1), target, &w)?;
    Ok((acc, cert))
}

/// The frequency interval a map's source coverage spans.
fn coverage_window(map: &FrequencyMap) -> Window {
    let (lo, hi) = map.k_range();
    Window::new(map.source().point(lo), map.source().point(hi)).expect("nonempty coverage")
}

/// Re-measure a map's certificate over its own coverage at an exact block
/// length — the canonical, reproducible form.
pub fn canonical_certificate(
    map: &mut FrequencyMap,
    r: &ExactScalar,
) -> Result<AvdoninCertificate> {
    let w = coverage_window(map);
    map.certify(r, &w)
}

/// Restriction of a monotone map to the targets in `[lo, hi)`.
fn restrict_by_targets(map: &FrequencyMap, lo: i64, hi: i64) -> Result<FrequencyMap> {
    let t = map.target_indices();
    if t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpec(
            "cannot restrict a non-monotone map by target range".to_string(),
        ));
    }
    let a = t.partition_point(|&m| m < lo);
    let b = t.partition_point(|&m| m < hi);
    if a >= b {
        return Err(Error::MalformedInput(
            "restriction leaves an empty map".to_string(),
        ));
    }
    FrequencyMap::from_parts(
        map.source().clone(),
        map.target().clone(),
        map.k_range().0 + a as i64,
        t[a..b].to_vec(),
    )
}

/// Pairwise recombination `ρ = τ∘φ̂⁻¹ ∪ η∘ψ̂⁻¹`: route every combined-lattice
/// point through the rounding pair of the two densities to whichever input
/// map owns its preimage.
fn combine_pair(
    tau: &FrequencyMap,
    a: &ExactScalar,
    eta: &FrequencyMap,
    b: &ExactScalar,
) -> Result<FrequencyMap> {
    if tau.target() != eta.target() {
        return Err(Error::InvalidSpec(
            "maps to combine must share their target lattice".to_string(),
        ));
    }
    let (phi, psi, kb) = build_pair(a, b)?;
    if tau.source() != phi.source() || eta.source() != psi.source() {
        return Err(Error::InvalidSpec(
            "map sources must match the densities being combined".to_string(),
        ));
    }
    // disjointness, with the colliding frequency named
    {
        let mut all = tau.target_indices().to_vec();
        all.extend_from_slice(eta.target_indices());
        all.sort_unstable();
        for w in all.windows(2) {
            if w[0] == w[1] {
                return Err(Error::RangeCollision {
                    frequency: format!("{}", w[0] as f64 + 0.5),
                });
            }
        }
    }
    let mid = phi.target().clone();
    let (ta_lo, ta_hi) = tau.k_range();
    let (tb_lo, tb_hi) = eta.k_range();
    if ta_lo >= ta_hi || tb_lo >= tb_hi {
        return Err(Error::InvalidSpec("cannot combine empty maps".to_string()));
    }
    // combined blocks whose preimages stay strictly inside both coverages
    let l_lo = (phi.eval_index(ta_lo)?.div_euclid(kb) + 1)
        .max(psi.eval_index(tb_lo)?.div_euclid(kb) + 1);
    let l_hi = (phi.eval_index(ta_hi - 1)?.div_euclid(kb))
        .min(psi.eval_index(tb_hi - 1)?.div_euclid(kb));
    if l_hi - l_lo < 1 {
        return Err(Error::WindowTooSmall {
            have: (l_hi - l_lo).max(0),
            need: 1,
            block_len: kb as f64 * mid.spacing().to_f64(),
        });
    }
    let m_lo = l_lo * kb;
    let m_hi = l_hi * kb;
    let ka_lo = first_image_at_or_above(&phi, m_lo)?;
    let ka_hi = first_image_at_or_above(&phi, m_hi)?;
    let kb_lo = first_image_at_or_above(&psi, m_lo)?;
    let kb_hi = first_image_at_or_above(&psi, m_hi)?;
    if ka_lo < ta_lo || ka_hi > ta_hi || kb_lo < tb_lo || kb_hi > tb_hi {
        return Err(Error::MalformedInput(
            "combined blocks escape the input maps' coverage".to_string(),
        ));
    }
    // merged sweep: each combined index is claimed by exactly one side
    let mut rho = Vec::with_capacity((m_hi - m_lo) as usize);
    let mut ka = ka_lo;
    let mut kbp = kb_lo;
    let mut img_a = if ka < ka_hi { Some(phi.eval_index(ka)?) } else { None };
    let mut img_b = if kbp < kb_hi { Some(psi.eval_index(kbp)?) } else { None };
    for m in m_lo..m_hi {
        if img_a == Some(m) {
            rho.push(tau.target_index(ka).ok_or_else(|| {
                Error::MalformedInput(format!("first map does not cover source {ka}"))
            })?);
            ka += 1;
            img_a = if ka < ka_hi { Some(phi.eval_index(ka)?) } else { None };
        } else if img_b == Some(m) {
            rho.push(eta.target_index(kbp).ok_or_else(|| {
                Error::MalformedInput(format!("second map does not cover source {kbp}"))
            })?);
            kbp += 1;
            img_b = if kbp < kb_hi { Some(psi.eval_index(kbp)?) } else { None };
        } else {
            return Err(Error::CountingMismatch {
                block: m.div_euclid(kb),
                expected: kb as usize,
                found: 0,
            });
        }
    }
    if ka != ka_hi || kbp != kb_hi {
        return Err(Error::InvalidSpec(
            "combined sweep left sources unconsumed".to_string(),
        ));
    }
    FrequencyMap::from_parts(mid, tau.target().clone(), m_lo, rho)
}

/// Smallest source index whose rounded image reaches `m_bound`; found by a
/// short exact walk from a float guess (rounding moves points by at most a
/// couple of target steps).
fn first_image_at_or_above(rm: &RoundingMap, m_bound: i64) -> Result<i64> {
    let d = rm.target().a().to_f64();
    let a = rm.source().a().to_f64();
    let alpha = rm.source().alpha().to_f64();
    let x = (m_bound as f64 + 0.5) / d;
    let mut k = (x * a - alpha).round() as i64;
    while rm.eval_index(k)? >= m_bound {
        k -= 1;
    }
    while rm.eval_index(k)? < m_bound {
        k += 1;
    }
    Ok(k)
}

/// Double the block length until the budget is met. A miss is an error: if
/// the window ran out first it surfaces as [`Error::WindowTooSmall`] so the
/// caller can widen and retry, otherwise as [`Error::BudgetExceeded`].
fn certify_to_budget(
    map: &mut FrequencyMap,
    r0: &ExactScalar,
    epsilon: f64,
    window: &Window,
) -> Result<AvdoninCertificate> {
    let (cert, window_limited) = ladder(map, r0, epsilon, window)?;
    if cert.epsilon_hat > epsilon {
        if window_limited {
            return Err(Error::WindowTooSmall {
                have: cert.blocks_checked,
                need: 2 * crate::avdonin::MIN_CERT_BLOCKS,
                block_len: cert.r,
            });
        }
        return Err(Error::BudgetExceeded {
            measured: cert.epsilon_hat,
            target: epsilon,
            attempts: LADDER_ATTEMPTS,
        });
    }
    Ok(cert)
}

/// Measure at `r0`, doubling while the budget is missed and the window still
/// holds enough blocks. Returns the best certificate (attached to the map)
/// and whether the ladder was cut short by the window.
///
/// A precision tie means a block boundary of that particular `r` fell within
/// the guard of a lattice point (it happens when a guarded length telescopes
/// onto a rational value), so that `r` cannot be measured at this guard; the
/// ladder steps to `r + 1`, which moves every boundary, instead of failing.
fn ladder(
    map: &mut FrequencyMap,
    r0: &ExactScalar,
    epsilon: f64,
    window: &Window,
) -> Result<(AvdoninCertificate, bool)> {
    let mut r = r0.clone();
    let mut best: Option<AvdoninCertificate> = None;
    let mut window_limited = false;
    let mut shortfall: Option<Error> = None;
    for _ in 0..LADDER_ATTEMPTS {
        match map.certify(&r, window) {
            Ok(cert) => {
                let better = best
                    .as_ref()
                    .map_or(true, |b| cert.epsilon_hat < b.epsilon_hat);
                if better {
                    best = Some(cert.clone());
                }
                if cert.epsilon_hat <= epsilon {
                    break;
                }
                r = &r * &ExactScalar::rational(2, 1);
            }
            Err(e @ Error::WindowTooSmall { .. }) => {
                window_limited = true;
                shortfall = Some(e);
                break;
            }
            Err(e @ Error::PrecisionTie { .. }) => {
                shortfall = Some(e);
                r = &r + &ExactScalar::one();
            }
            Err(e) => return Err(e),
        }
    }
    match best {
        Some(cert) => {
            map.set_certificate(cert.clone());
            Ok((cert, window_limited))
        }
        None => Err(shortfall.unwrap_or(Error::WindowTooSmall {
            have: 0,
            need: crate::avdonin::MIN_CERT_BLOCKS,
            block_len: r0.to_f64(),
        })),
    }
}

/// Rebuild the order-preserving map behind a stored frequency set.
///
/// The construction's maps are strictly monotone, so sorted frequencies
/// matched in order to the source lattice reproduce the original map. The
/// source offset is pinned by exact sum matching: shifting the offset by one
/// step moves the source sum by the full window length, which dwarfs the
/// certified displacement sums.
pub fn reconstruct_monotone_map(
    length: &ExactScalar,
    target_indices: &[i64],
) -> Result<FrequencyMap> {
    if target_indices.is_empty() {
        return Err(Error::MalformedInput("empty frequency set".to_string()));
    }
    let mut sorted = target_indices.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateFrequency {
                frequency: w[0] as f64 + 0.5,
            });
        }
    }
    let source = AffineLattice::scaled_half_integers(length.clone())?;
    let n = sorted.len() as i64;
    let b = length.to_f64();
    let first = sorted[0] as f64 + 0.5;
    let base = (b * first - 0.5).round() as i64;
    let sum_m: i128 = sorted.iter().map(|&m| m as i128).sum();
    // Σλ = Σ(m+½); pick the offset whose source sum lands nearest
    let lam_sum = &big(sum_m) + &(&ExactScalar::rational(n, 1) * &ExactScalar::half());
    let mut best: Option<(ExactScalar, i64)> = None;
    for k0 in (base - 8)..=(base + 8) {
        let sum_k: i128 = (k0 as i128 + k0 as i128 + n as i128 - 1) * n as i128 / 2;
        let src_sum = &(&big(sum_k) + &(&ExactScalar::rational(n, 1) * source.alpha()))
            / source.a();
        let dev = (&lam_sum - &src_sum).abs();
        let better = best.as_ref().map_or(true, |(d, _)| dev < *d);
        if better {
            best = Some((dev, k0));
        }
    }
    let (_, k_first) = best.expect("candidate range nonempty");
    FrequencyMap::from_parts(source, AffineLattice::half_integers(), k_first, sorted)
}

/// Shift every reported frequency down by ½, onto the integers. A common
/// shift is a unitary modulation on the interval, so Riesz bounds — and the
/// recorded certificates, which describe the half-integer representation —
/// carry over verbatim.
pub fn shift_to_integers(mut r: PartitionResult) -> PartitionResult {
    if r.shifted {
        return r;
    }
    for set in &mut r.sets {
        for f in &mut set.frequencies {
            *f -= 0.5;
        }
    }
    r.shifted = true;
    r
}

/// Undo [`shift_to_integers`].
pub fn shift_to_half_integers(mut r: PartitionResult) -> PartitionResult {
    if !r.shifted {
        return r;
    }
    for set in &mut r.sets {
        for f in &mut set.frequencies {
            *f += 0.5;
        }
    }
    r.shifted = false;
    r
}

fn dyadic(v: f64) -> ExactScalar {
    ExactScalar::from_f64_exact(v).expect("finite float")
}

fn big(v: i128) -> ExactScalar {
    ExactScalar::from_bigrational(num_rational::BigRational::from_integer(
        num_bigint::BigInt::from(v),
    ))
}

/// Longest run of consecutive integers in a sorted slice, as `[lo, hi)`.
fn longest_run(sorted: &[i64]) -> (i64, i64) {
    if sorted.is_empty() {
        return (0, 0);
    }
    let (mut best_lo, mut best_hi) = (sorted[0], sorted[0] + 1);
    let (mut lo, mut hi) = (sorted[0], sorted[0] + 1);
    for &m in &sorted[1..] {
        if m == hi {
            hi += 1;
        } else {
            lo = m;
            hi = m + 1;
        }
        if hi - lo > best_hi - best_lo {
            best_lo = lo;
            best_hi = hi;
        }
    }
    (best_lo, best_hi)
}
