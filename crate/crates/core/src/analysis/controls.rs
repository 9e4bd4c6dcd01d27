//! Deterministic frequency families used as positive and negative controls.
//!
//! Each generator takes a count, collects candidates nearest the origin
//! first (ties broken toward the negative side), and returns the selection
//! sorted ascending — so truncations of the same family are nested and every
//! run reproduces the same list bit for bit.

/// Selects the `count` candidates closest to the origin and sorts them.
fn nearest(mut candidates: Vec<f64>, count: usize) -> Vec<f64> {
    candidates.sort_by(|p, q| p.abs().total_cmp(&q.abs()).then(p.total_cmp(q)));
    candidates.truncate(count);
    candidates.sort_by(f64::total_cmp);
    candidates
}

/// `{0} ∪ {2n - 1/4 : n ≥ 1} ∪ {-2n + 1/4 : n ≥ 1}` — even integers pulled
/// a quarter step inward. On a length-1/2 interval this family alone keeps a
/// healthy lower Gram bound.
pub fn kadec_first(count: usize) -> Vec<f64> {
    let mut vals = vec![0.0];
    for n in 1..=count as i64 {
        vals.push(2.0 * n as f64 - 0.25);
        vals.push(-2.0 * n as f64 + 0.25);
    }
    nearest(vals, count)
}

/// `{2n + 3/4 : n ≥ 1} ∪ {-2n - 3/4 : n ≥ 1}` — odd integers pushed a
/// quarter step outward; the healthy counterpart interleaving
/// [`kadec_first`].
pub fn kadec_second(count: usize) -> Vec<f64> {
    let mut vals = Vec::with_capacity(2 * count);
    for n in 1..=count as i64 {
        vals.push(2.0 * n as f64 + 0.75);
        vals.push(-2.0 * n as f64 - 0.75);
    }
    nearest(vals, count)
}

/// Balanced union of [`kadec_first`] and [`kadec_second`], `total / 2`
/// points from each half (`total` is expected even). Both halves are
/// individually well-behaved, but their quarter-step perturbations add up
/// to a half step in opposite directions, so the union's lower Gram bound
/// on a length-1 interval decays as the truncation grows — the canonical
/// example of two Riesz sequences whose union fails to be one.
pub fn kadec_union(total: usize) -> Vec<f64> {
    let half = total / 2;
    let mut vals = kadec_first(half);
    vals.extend(kadec_second(half));
    vals.sort_by(f64::total_cmp);
    vals
}

/// Positive even integers and perturbed negative odds, `count / 2` nearest
/// from each side: `{2n : n ≥ 1} ∪ {2n + 1 - 0.1 : n ≤ -1}`. Density 1/2 on
/// each side — far too sparse to span a length-1/2 interval, so
/// completeness residuals stay bounded away from zero.
pub fn incomplete_set(count: usize) -> Vec<f64> {
    let mut vals = Vec::with_capacity(count);
    for n in 1..=(count / 2) as i64 {
        vals.push(2.0 * n as f64);
    }
    for n in 1..=(count - count / 2) as i64 {
        vals.push(2.0 * (-n) as f64 + 1.0 - 0.1);
    }
    vals.sort_by(f64::total_cmp);
    vals
}

/// `{-half, …, -1, 1, …, half}` — the integers with zero removed. Every
/// member is orthogonal to the constant function on a length-1 interval, so
/// the completeness residual of `f ≡ 1` is exactly `1` at any truncation.
pub fn integers_without_zero(half: usize) -> Vec<f64> {
    (-(half as i64)..=half as i64)
        .filter(|&k| k != 0)
        .map(|k| k as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic_and_nested() {
        let a = kadec_first(32);
        assert_eq!(a.len(), 32);
        assert_eq!(a, kadec_first(32));
        // Nearest-first selection nests: the 32-point set is a subset of
        // the 64-point one.
        let b = kadec_first(64);
        assert!(a.iter().all(|v| b.contains(v)));
        assert!(a.contains(&0.0) && a.contains(&1.75) && a.contains(&-1.75));

        let c = kadec_second(32);
        assert_eq!(c.len(), 32);
        assert!(c.contains(&2.75) && c.contains(&-2.75) && !c.contains(&0.0));

        let u = kadec_union(64);
        assert_eq!(u.len(), 64);
        assert!(u.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn incomplete_set_balances_both_sides() {
        let v = incomplete_set(64);
        assert_eq!(v.len(), 64);
        assert_eq!(v.iter().filter(|&&x| x > 0.0).count(), 32);
        assert!(v.contains(&2.0) && v.contains(&64.0));
        assert!(v.contains(&(2.0 * -1.0 + 1.0 - 0.1)));
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn integer_control_omits_zero_only() {
        let v = integers_without_zero(64);
        assert_eq!(v.len(), 128);
        assert!(!v.contains(&0.0));
        assert!(v.contains(&-64.0) && v.contains(&64.0));
    }
}
