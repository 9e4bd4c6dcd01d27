//! The `figures` subcommand: deterministic point-set emission for plotting.
//!
//! Figure 1 is the two-interval split of `[0, 1]` at `1/√2`: the half-
//! integer lattice divides into a *yellow* set (serving the length-`1/√2`
//! interval) and a *blue* set (the complement interval). Figure 2 refines
//! the yellow interval further into *green* (`1/5`) and *red*
//! (`1/√2 − 1/5`) sets built through the yellow stage, with yellow itself
//! reported as the certified union of green and red. Custom lengths emit
//! the same schema with `Lambda_i` labels.

use expbasis::compose::{build_partition, PartitionBuild, UnionRequest};
use expbasis::lattice::Window;
use expbasis::numerics::{sqrt2_inv, DEFAULT_BITS, DEFAULT_GUARD};
use expbasis::ExactScalar;
use serde::Serialize;

use crate::{emit, parse, Failure, FiguresArgs};

#[derive(Serialize)]
struct FigureData {
    #[serde(skip_serializing_if = "Option::is_none")]
    figure: Option<u8>,
    /// The emitted frame `[lo, hi)` in half-integer lattice indices.
    window: [i64; 2],
    series: Vec<Series>,
}

#[derive(Serialize)]
struct Series {
    label: String,
    /// Interval length the series serves (f64 echo).
    length: f64,
    /// Frequencies inside the frame, ascending.
    frequencies: Vec<f64>,
}

pub fn run(args: &FiguresArgs) -> Result<u8, Failure> {
    let guard = args.guard.unwrap_or(DEFAULT_GUARD);
    let data = match (args.figure, args.lengths.as_deref()) {
        (Some(1), None) => figure_one(args)?,
        (Some(2), None) => figure_two(args)?,
        (Some(n), None) => {
            return Err(Failure::malformed(format!("unknown figure {n}: use 1 or 2")))
        }
        (None, Some(lengths)) => custom(args, lengths, guard)?,
        (None, None) => return Err(Failure::malformed("need --figure 1|2 or --lengths")),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let mut payload = serde_json::to_string_pretty(&data).map_err(|e| Failure {
        code: 1,
        message: format!("serialization failed: {e}"),
    })?;
    payload.push('\n');
    emit(&args.out, &payload)?;
    Ok(0)
}

fn frame(args: &FiguresArgs) -> Result<(i64, i64), Failure> {
    match &args.window {
        Some(w) => parse::window(w),
        None => Ok((-6, 25)),
    }
}

fn figure_one(args: &FiguresArgs) -> Result<FigureData, Failure> {
    let frame = frame(args)?;
    let a = ExactScalar::guarded(sqrt2_inv(DEFAULT_BITS), DEFAULT_GUARD);
    let b = &ExactScalar::one() - &a;
    let build = build(vec![a, b], UnionRequest::None, frame)?;
    Ok(FigureData {
        figure: Some(1),
        window: [frame.0, frame.1],
        series: vec![
            series_from_set(&build, 0, "yellow", frame),
            series_from_set(&build, 1, "blue", frame),
        ],
    })
}

fn figure_two(args: &FiguresArgs) -> Result<FigureData, Failure> {
    let frame = frame(args)?;
    let s = ExactScalar::guarded(sqrt2_inv(DEFAULT_BITS), DEFAULT_GUARD);
    let fifth = ExactScalar::rational(1, 5);
    // The refinement builds outside-in: the blue complement splits off
    // first, then the remaining length-1/√2 interval divides into red and
    // green; yellow is certified as the red∪green union.
    let lengths = vec![&ExactScalar::one() - &s, &s - &fifth, fifth];
    let build = build(lengths, UnionRequest::Explicit(vec![vec![2, 3]]), frame)?;
    let yellow = union_series(&build, &[2, 3], "yellow", frame)?;
    Ok(FigureData {
        figure: Some(2),
        window: [frame.0, frame.1],
        series: vec![
            series_from_set(&build, 2, "green", frame),
            series_from_set(&build, 1, "red", frame),
            series_from_set(&build, 0, "blue", frame),
            yellow,
        ],
    })
}

fn custom(args: &FiguresArgs, lengths: &str, guard: f64) -> Result<FigureData, Failure> {
    let frame = frame(args)?;
    let lengths = parse::lengths(lengths, guard)?;
    let build = build(lengths, UnionRequest::None, frame)?;
    let series = (0..build.result.sets.len())
        .map(|i| {
            let label = build.result.sets[i].label.clone();
            series_from_set(&build, i, &label, frame)
        })
        .collect();
    Ok(FigureData {
        figure: None,
        window: [frame.0, frame.1],
        series,
    })
}

fn build(
    lengths: Vec<ExactScalar>,
    unions: UnionRequest,
    frame: (i64, i64),
) -> Result<PartitionBuild, Failure> {
    let spec = crate::partition::make_spec(lengths, 2)?.with_unions(unions);
    build_partition(&spec, &Window::from_i64(frame.0, frame.1)).map_err(Failure::from_core)
}

fn series_from_set(
    build: &PartitionBuild,
    index: usize,
    label: &str,
    frame: (i64, i64),
) -> Series {
    let set = &build.result.sets[index];
    Series {
        label: label.to_string(),
        length: set.length.to_f64(),
        frequencies: clip(&set.frequencies, frame),
    }
}

fn union_series(
    build: &PartitionBuild,
    j: &[usize],
    label: &str,
    frame: (i64, i64),
) -> Result<Series, Failure> {
    let (_, map) = build
        .union_maps
        .iter()
        .find(|(idx, _)| idx == j)
        .ok_or_else(|| Failure {
            code: 1,
            message: format!("union {j:?} missing from build"),
        })?;
    let freqs: Vec<f64> = map
        .sorted_target_indices()
        .iter()
        .map(|&m| m as f64 + 0.5)
        .collect();
    let length = j
        .iter()
        .map(|&i| build.result.sets[i - 1].length.to_f64())
        .sum();
    Ok(Series {
        label: label.to_string(),
        length,
        frequencies: clip(&freqs, frame),
    })
}

/// Keeps the frequencies whose lattice index lies in `[lo, hi)`.
fn clip(freqs: &[f64], frame: (i64, i64)) -> Vec<f64> {
    freqs
        .iter()
        .copied()
        .filter(|f| {
            let m = (f - 0.5).round() as i64;
            m >= frame.0 && m < frame.1
        })
        .collect()
}
