//! Longest North-East paths through a static realization.
//!
//! A weakly NE path to `(x, t)` first collects boundary points (sources up to
//! some `z ≥ 0`, or sinks up to time `|z|` for `z < 0`) and then a strictly
//! increasing chain of α-points. Writing `N(z)` for the boundary count and
//! `A(z)` for the best chain after leaving the axis at `z`, the path length is
//! `L = max_z N(z) + A(z)` over `z ∈ [−t, x]`, and the exit points are the
//! extremes of the closure of the maximizing set.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::{Builder, StepProfile};
use crate::realization::{Point, Realization};

/// Largest total point count accepted by [`brute_force_longest`].
pub const BRUTE_FORCE_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathResult {
    /// Length of a longest weakly NE path.
    #[serde(rename = "L")]
    pub length: u64,
    /// Right-most exit point; positive on the x-axis, negative on the time axis.
    #[serde(rename = "Z")]
    pub exit: f64,
    /// Left-most exit point.
    #[serde(rename = "Z_prime")]
    pub exit_left: f64,
    #[serde(skip)]
    pub boundary: StepProfile,
    #[serde(skip)]
    pub chain: StepProfile,
}

impl PathResult {
    /// `N + A` on `[−t, x]`.
    pub fn total(&self) -> StepProfile {
        self.boundary.add(&self.chain)
    }
}

fn check_corner(r: &Realization, x: f64, t: f64) -> Result<()> {
    let d = r.domain();
    if x.is_finite() && t.is_finite() && d.contains(x, t) {
        Ok(())
    } else {
        Err(Error::OutOfBox { x, t, box_x: d.x, box_t: d.t })
    }
}

fn count_le(sorted: &[f64], v: f64) -> usize {
    sorted.partition_point(|&u| u <= v)
}

/// `N(z)` on `[−t, x]`: sources in `[0, z]` for `z ≥ 0`, sinks in `[0, |z|]`
/// for `z ≤ 0`.
pub fn source_sink_profile(r: &Realization, x: f64, t: f64) -> Result<StepProfile> {
    check_corner(r, x, t)?;
    let sources = r.sources();
    let sinks = r.sinks();
    let knots = sources.iter().copied().chain(sinks.iter().map(|s| -s)).chain([0.0]);
    Ok(StepProfile::from_fn(knots, -t, x, |z| {
        if z >= 0.0 {
            count_le(sources, z) as i64
        } else {
            count_le(sinks, -z) as i64
        }
    }))
}

/// Prefix-maximum Fenwick tree over `0..len`.
struct MaxFenwick {
    tree: Vec<u32>,
}

impl MaxFenwick {
    fn new(len: usize) -> Self {
        MaxFenwick { tree: vec![0; len + 1] }
    }

    fn raise(&mut self, idx: usize, value: u32) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].max(value);
            i += i & i.wrapping_neg();
        }
    }

    /// Maximum over `0..end`.
    fn prefix_max(&self, end: usize) -> u32 {
        let mut i = end;
        let mut best = 0;
        while i > 0 {
            best = best.max(self.tree[i]);
            i -= i & i.wrapping_neg();
        }
        best
    }
}

/// α-points of `(0, x] × (0, t]` in increasing time order, each with the
/// length of the longest strictly increasing chain that starts at it.
struct Chains {
    by_time: Vec<(Point, u32)>,
    /// Indices into `by_time` in decreasing x order.
    by_x_desc: Vec<usize>,
}

fn chain_lengths(alpha_points: &[Point], x: f64, t: f64) -> Chains {
    let mut pts: Vec<Point> = alpha_points.iter().copied().filter(|p| p.x <= x && p.s <= t).collect();
    pts.sort_by(|a, b| a.s.total_cmp(&b.s));
    let n = pts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pts[b].x.total_cmp(&pts[a].x));
    // The i-th earliest point sits at Fenwick slot n − 1 − i, so "later than
    // s" is a prefix.
    let mut fenwick = MaxFenwick::new(n);
    let mut len = vec![0u32; n];
    for &i in &order {
        let slot = n - 1 - i;
        let l = 1 + fenwick.prefix_max(slot);
        fenwick.raise(slot, l);
        len[i] = l;
    }
    Chains { by_time: pts.into_iter().zip(len).collect(), by_x_desc: order }
}

/// `A(z)` on `[−t, x]`: longest strictly NE chain to `(x, t)` using α-points
/// with position `> z` (for `z ≥ 0`) or time `> |z|` (for `z < 0`).
///
/// One decreasing-x sweep with a Fenwick tree, `O(n log n)`.
pub fn strict_chain_profile(alpha_points: &[Point], x: f64, t: f64) -> StepProfile {
    let Chains { by_time, by_x_desc } = chain_lengths(alpha_points, x, t);
    let n = by_time.len();
    // later[j]: longest chain from the j-th earliest point or any later one
    let mut later = vec![0i64; n + 1];
    for j in (0..n).rev() {
        later[j] = later[j + 1].max(i64::from(by_time[j].1));
    }
    // right[a]: longest chain from the point with the a-th smallest x or any
    // point further right
    let mut right = vec![0i64; n + 1];
    for (k, &i) in by_x_desc.iter().enumerate() {
        let a = n - 1 - k;
        right[a] = right[a + 1].max(i64::from(by_time[i].1));
    }

    let mut b = Builder::start(-t, 0);
    for j in (0..n).rev() {
        b.step(later[j + 1], -by_time[j].0.s, later[j + 1]);
    }
    b.step(later[0], 0.0, right[0]);
    for (k, &i) in by_x_desc.iter().rev().enumerate() {
        b.step(right[k], by_time[i].0.x, right[k + 1]);
    }
    b.step(0, x, 0);
    b.finish()
}

/// Longest weakly NE path from the origin to `(x, t)` and its exit points.
pub fn longest_weakly_ne(r: &Realization, x: f64, t: f64) -> Result<PathResult> {
    let boundary = source_sink_profile(r, x, t)?;
    let chain = strict_chain_profile(r.alpha_points(), x, t);
    let max = boundary.add(&chain).maximum();
    Ok(PathResult { length: max.value as u64, exit: max.sup, exit_left: max.inf, boundary, chain })
}

/// Longest strictly increasing chain of α-points in `(0, x] × (0, t]`, by
/// patience sorting.
pub fn longest_strictly_ne(alpha_points: &[Point], x: f64, t: f64) -> u64 {
    let mut pts: Vec<Point> = alpha_points.iter().copied().filter(|p| p.x <= x && p.s <= t).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    // tails[k] = smallest final time over chains of length k + 1
    let mut tails: Vec<f64> = Vec::new();
    for p in pts {
        let k = tails.partition_point(|&u| u < p.s);
        if k == tails.len() {
            tails.push(p.s);
        } else {
            tails[k] = p.s;
        }
    }
    tails.len() as u64
}

/// Exhaustive reference for [`longest_weakly_ne`] on small realizations.
///
/// Evaluates `N(z) + A(z)` from scratch at every candidate breakpoint and at
/// the midpoint of every gap, computing `A` by a quadratic chain DP over the
/// admissible α-points. Returns `(L, Z, Z')`.
pub fn brute_force_longest(r: &Realization, x: f64, t: f64) -> Result<(u64, f64, f64)> {
    check_corner(r, x, t)?;
    let alpha: Vec<Point> = r.alpha_points().iter().copied().filter(|p| p.x <= x && p.s <= t).collect();
    let sources: Vec<f64> = r.sources().iter().copied().filter(|&u| u <= x).collect();
    let sinks: Vec<f64> = r.sinks().iter().copied().filter(|&s| s <= t).collect();
    let count = alpha.len() + sources.len() + sinks.len();
    if count > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge { count, cap: BRUTE_FORCE_CAP });
    }

    let value = |z: f64| -> i64 {
        let (boundary, usable): (usize, Vec<Point>) = if z >= 0.0 {
            (sources.iter().filter(|&&u| u <= z).count(), alpha.iter().copied().filter(|p| p.x > z).collect())
        } else {
            (sinks.iter().filter(|&&s| s <= -z).count(), alpha.iter().copied().filter(|p| p.s > -z).collect())
        };
        let mut best = vec![1i64; usable.len()];
        let mut order: Vec<usize> = (0..usable.len()).collect();
        order.sort_by(|&i, &j| usable[i].x.total_cmp(&usable[j].x));
        for (a, &i) in order.iter().enumerate() {
            for &j in &order[..a] {
                if usable[j].x < usable[i].x && usable[j].s < usable[i].s {
                    best[i] = best[i].max(best[j] + 1);
                }
            }
        }
        boundary as i64 + best.into_iter().max().unwrap_or(0)
    };

    let mut knots: Vec<f64> = vec![-t, 0.0, x];
    knots.extend(&sources);
    knots.extend(sinks.iter().map(|s| -s));
    knots.extend(alpha.iter().flat_map(|p| [p.x, -p.s]));
    knots.retain(|&z| z >= -t && z <= x);
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    // (value, left end, right end) of each knot and each gap
    let mut pieces: Vec<(i64, f64, f64)> = knots.iter().map(|&z| (value(z), z, z)).collect();
    pieces.extend(knots.windows(2).map(|w| (value(0.5 * (w[0] + w[1])), w[0], w[1])));
    let best = pieces.iter().map(|p| p.0).max().unwrap();
    let winners = pieces.iter().filter(|p| p.0 == best);
    let sup = winners.clone().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let inf = winners.map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok((best as u64, sup, inf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{empty, fixture_a};
    use crate::realization::{generate, strip_boundaries, Domain, Intensities};

    #[test]
    fn fixture_boundary_profile() {
        let n = source_sink_profile(&fixture_a(), 2.0, 2.0).unwrap();
        assert_eq!(n.value(0.4), Some(0));
        assert_eq!(n.value(0.5), Some(1));
        assert_eq!(n.value(2.0), Some(2));
        assert_eq!(n.value(-1.0), Some(1));
        assert_eq!(n.value(-0.99), Some(0));
        assert_eq!(n.value(0.0), Some(0));
    }

    #[test]
    fn fixture_chain_profile() {
        let a = strict_chain_profile(fixture_a().alpha_points(), 2.0, 2.0);
        for z in [0.0, 0.3, 0.999] {
            assert_eq!(a.value(z), Some(1), "z = {z}");
        }
        for z in [1.0, 1.5, 2.0] {
            assert_eq!(a.value(z), Some(0), "z = {z}");
        }
        assert_eq!(a.value(-0.49), Some(1));
        assert_eq!(a.value(-0.5), Some(0));
        assert_eq!(a.value(-2.0), Some(0));
    }

    #[test]
    fn fixture_longest_path() {
        // N + A = 2 on [0.5, 1.0) and on [1.5, 2]; the closure of the argmax
        // is [0.5, 1.0] ∪ [1.5, 2].
        let res = longest_weakly_ne(&fixture_a(), 2.0, 2.0).unwrap();
        assert_eq!((res.length, res.exit, res.exit_left), (2, 2.0, 0.5));
        assert_eq!(brute_force_longest(&fixture_a(), 2.0, 2.0).unwrap(), (2, 2.0, 0.5));
        assert_eq!(longest_strictly_ne(fixture_a().alpha_points(), 2.0, 2.0), 1);
    }

    #[test]
    fn empty_realization() {
        let e = empty(3.0);
        let res = longest_weakly_ne(&e, 3.0, 3.0).unwrap();
        assert_eq!((res.length, res.exit, res.exit_left), (0, 3.0, -3.0));
        assert_eq!(brute_force_longest(&e, 3.0, 3.0).unwrap(), (0, 3.0, -3.0));
        assert_eq!(longest_strictly_ne(e.alpha_points(), 3.0, 3.0), 0);
        assert_eq!(strict_chain_profile(&[], 3.0, 3.0).maximum().value, 0);
    }

    #[test]
    fn single_alpha_point() {
        let r = Realization::new(
            Domain::square(2.0).unwrap(),
            Intensities::stationary(1.0).unwrap(),
            vec![Point::new(0.7, 1.2)],
            vec![],
            vec![],
            0,
            0,
        )
        .unwrap();
        let res = longest_weakly_ne(&r, 2.0, 2.0).unwrap();
        assert_eq!(res.length, 1);
        // argmax is (−1.2, 0.7)
        assert_eq!((res.exit, res.exit_left), (0.7, -1.2));
        assert!(res.exit >= 0.0);
    }

    #[test]
    fn chain_on_the_diagonal() {
        let pts: Vec<Point> = (1..=5).map(|i| Point::new(i as f64 / 10.0, i as f64 / 10.0)).collect();
        assert_eq!(longest_strictly_ne(&pts, 1.0, 1.0), 5);
        assert_eq!(strict_chain_profile(&pts, 1.0, 1.0).value(0.0), Some(5));
    }

    #[test]
    fn out_of_box_is_rejected() {
        assert!(matches!(longest_weakly_ne(&fixture_a(), 3.0, 1.0), Err(Error::OutOfBox { .. })));
    }

    #[test]
    fn brute_force_cap() {
        let r = generate(Intensities::stationary(1.0).unwrap(), Domain::square(10.0).unwrap(), 1, 0).unwrap();
        assert!(matches!(brute_force_longest(&r, 10.0, 10.0), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn sweep_matches_brute_force_on_small_boxes() {
        let i = Intensities::stationary(1.0).unwrap();
        let mut checked = 0;
        for id in 0..2000 {
            let r = generate(i, Domain::square(2.5).unwrap(), 17, id).unwrap();
            let Ok(bf) = brute_force_longest(&r, 2.5, 2.5) else { continue };
            let fast = longest_weakly_ne(&r, 2.5, 2.5).unwrap();
            assert_eq!((fast.length, fast.exit, fast.exit_left), bf, "stream {id}");
            checked += 1;
        }
        assert!(checked > 1000);
    }

    #[test]
    fn chain_profile_at_zero_is_l0() {
        let i = Intensities::stationary(1.0).unwrap();
        for id in 0..200 {
            let r = generate(i, Domain::square(8.0).unwrap(), 4, id).unwrap();
            let a = strict_chain_profile(r.alpha_points(), 8.0, 8.0);
            assert_eq!(a.value(0.0).unwrap() as u64, longest_strictly_ne(r.alpha_points(), 8.0, 8.0));
            let s = longest_weakly_ne(&strip_boundaries(&r), 8.0, 8.0).unwrap();
            assert_eq!(s.length, longest_strictly_ne(r.alpha_points(), 8.0, 8.0));
        }
    }
}
