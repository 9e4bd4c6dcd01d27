//! The `partition` subcommand: build a certified partition and write the
//! artifact.

use expbasis::compose::{build_partition, PartitionSpec};
use expbasis::lattice::Window;
use expbasis::numerics::DEFAULT_GUARD;
use expbasis::ExactScalar;

use crate::config::RunConfig;
use crate::{emit, parse, Failure, PartitionArgs};

pub fn run(args: &PartitionArgs) -> Result<u8, Failure> {
    let file = RunConfig::load(args.config.as_ref())?;
    let lengths_str = args
        .lengths
        .clone()
        .or(file.lengths.clone())
        .ok_or_else(|| Failure::malformed("missing --lengths (flag or config)"))?;
    let window_str = args
        .window
        .clone()
        .or(file.window.clone())
        .unwrap_or_else(|| "-128:128".to_string());
    let budget_k = args.budget_k.or(file.budget_k).unwrap_or(2);
    let guard = args.guard.or(file.guard).unwrap_or(DEFAULT_GUARD);
    let unions_str = args
        .unions
        .clone()
        .or(file.unions.clone())
        .unwrap_or_else(|| "all".to_string());
    let out = args.out.clone().or(file.out_path());

    let lengths = parse::lengths(&lengths_str, guard)?;
    let (lo, hi) = parse::window(&window_str)?;
    let unions = parse::unions(&unions_str)?;

    let spec = make_spec(lengths, budget_k)?.with_unions(unions);
    let window = Window::from_i64(lo, hi);

    let build = build_partition(&spec, &window).map_err(Failure::from_core)?;
    let result = &build.result;

    eprintln!(
        "certified window [{}, {}) over {} sets",
        result.window[0],
        result.window[1],
        result.sets.len()
    );
    for set in &result.sets {
        eprintln!(
            "  {}: {} frequencies, eps_hat {:.3e} vs threshold {:.3e} -> {}",
            set.label,
            set.frequencies.len(),
            set.certificate.epsilon_hat,
            set.certificate.threshold,
            verdict(set.certificate.pass)
        );
    }
    for union in &result.unions {
        eprintln!(
            "  union {:?}: eps_hat {:.3e} vs budget {:.3e} -> {}",
            union.j,
            union.certificate.epsilon_hat,
            union.budget,
            verdict(union.budget_pass && union.certificate.pass)
        );
    }

    let mut payload = serde_json::to_string_pretty(result).map_err(|e| Failure {
        code: 1,
        message: format!("serialization failed: {e}"),
    })?;
    payload.push('\n');
    emit(&out, &payload)?;

    Ok(if result.all_pass() { 0 } else { 2 })
}

/// Lengths summing to 1 describe the whole interval; a smaller sum gets the
/// remainder appended as an automatic tail set.
pub(crate) fn make_spec(lengths: Vec<ExactScalar>, budget_k: u32) -> Result<PartitionSpec, Failure> {
    let one = ExactScalar::one();
    let total = lengths
        .iter()
        .fold(ExactScalar::zero(), |acc, l| &acc + l);
    let gap = &one - &total;
    let spec = if gap.is_positive() && gap.to_f64().abs() > 1e-9 {
        PartitionSpec::truncated(lengths, budget_k)
    } else {
        PartitionSpec::new(lengths, budget_k)
    };
    spec.map_err(Failure::from_core)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}
