//! Integer-valued step functions on a closed interval.
//!
//! A profile is stored as its knots `lo = k_0 < k_1 < … < k_m = hi` together
//! with the value *at* every knot and the value on every open gap between
//! consecutive knots. This represents right- and left-continuous steps alike,
//! which matters because the exit-point profiles are right-continuous for
//! `z > 0` and left-continuous for `z < 0`.

use std::fmt::Write;

#[derive(Clone, Debug, PartialEq)]
pub struct StepProfile {
    knots: Vec<f64>,
    at: Vec<i64>,
    open: Vec<i64>,
}

/// Maximum of a profile together with the extremes of the closure of the set
/// where it is attained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maximum {
    pub value: i64,
    pub sup: f64,
    pub inf: f64,
}

/// Either a single knot or the open gap between two knots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub left: f64,
    pub right: f64,
    pub value: i64,
}

impl StepProfile {
    /// Builds the profile of `f` on `[lo, hi]`. `f` must be constant on every
    /// open gap between the supplied breakpoints; knots outside the interval
    /// are ignored.
    pub fn from_fn(breakpoints: impl IntoIterator<Item = f64>, lo: f64, hi: f64, f: impl Fn(f64) -> i64) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        let mut knots: Vec<f64> = breakpoints.into_iter().filter(|&z| z > lo && z < hi).collect();
        knots.push(lo);
        knots.push(hi);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let at = knots.iter().map(|&z| f(z)).collect();
        let open = knots.windows(2).map(|w| f(0.5 * (w[0] + w[1]))).collect();
        StepProfile { knots, at, open }
    }

    pub fn constant(lo: f64, hi: f64, value: i64) -> Self {
        Self::from_fn(std::iter::empty(), lo, hi, |_| value)
    }

    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Value at `z`, or `None` outside the domain.
    pub fn value(&self, z: f64) -> Option<i64> {
        if !(self.lo()..=self.hi()).contains(&z) {
            return None;
        }
        match self.knots.binary_search_by(|k| k.total_cmp(&z)) {
            Ok(i) => Some(self.at[i]),
            Err(i) => Some(self.open[i - 1]),
        }
    }

    /// Knots and gaps in increasing order.
    pub fn pieces(&self) -> impl Iterator<Item = Piece> + '_ {
        let m = self.knots.len();
        (0..2 * m - 1).map(move |j| {
            let i = j / 2;
            if j % 2 == 0 {
                Piece { left: self.knots[i], right: self.knots[i], value: self.at[i] }
            } else {
                Piece { left: self.knots[i], right: self.knots[i + 1], value: self.open[i] }
            }
        })
    }

    /// Pointwise sum. Both profiles must live on the same interval.
    pub fn add(&self, other: &StepProfile) -> StepProfile {
        assert!(self.lo() == other.lo() && self.hi() == other.hi(), "profiles on different domains");
        let (ka, kb) = (&self.knots, &other.knots);
        let mut out = Builder::start(self.lo(), self.at[0] + other.at[0]);
        let (mut i, mut j) = (1, 1);
        while i < ka.len() {
            let z = ka[i].min(kb[j]);
            let gap = self.open[i - 1] + other.open[j - 1];
            let va = if ka[i] == z { self.at[i] } else { self.open[i - 1] };
            let vb = if kb[j] == z { other.at[j] } else { other.open[j - 1] };
            out.step(gap, z, va + vb);
            i += usize::from(ka[i] == z);
            j += usize::from(kb[j] == z);
        }
        debug_assert_eq!(j, kb.len());
        out.finish()
    }

    pub fn maximum(&self) -> Maximum {
        let value = self.pieces().map(|p| p.value).max().unwrap();
        let (mut sup, mut inf) = (f64::NEG_INFINITY, f64::INFINITY);
        for p in self.pieces().filter(|p| p.value == value) {
            sup = sup.max(p.right);
            inf = inf.min(p.left);
        }
        Maximum { value, sup, inf }
    }

    /// Supremum over the closed interval `[a, b] ∩ [lo, hi]`.
    pub fn max_on(&self, a: f64, b: f64) -> Option<i64> {
        let (a, b) = (a.max(self.lo()), b.min(self.hi()));
        if a > b {
            return None;
        }
        self.pieces()
            .filter(|p| if p.left == p.right { a <= p.left && p.left <= b } else { p.left < b && p.right > a })
            .map(|p| p.value)
            .max()
    }

    /// Two-column `z,value` CSV tracing the staircase outline, ready for a
    /// line plot.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,value\n");
        for p in self.pieces() {
            writeln!(out, "{},{}", p.left, p.value).unwrap();
            if p.left != p.right {
                writeln!(out, "{},{}", p.right, p.value).unwrap();
            }
        }
        out
    }
}

/// Assembles a profile from knots supplied in increasing order.
pub(crate) struct Builder {
    knots: Vec<f64>,
    at: Vec<i64>,
    open: Vec<i64>,
}

impl Builder {
    pub(crate) fn start(lo: f64, at_lo: i64) -> Self {
        Builder { knots: vec![lo], at: vec![at_lo], open: Vec::new() }
    }

    /// Appends the gap after the last knot and then the knot `z`. A knot equal
    /// to the last one is ignored.
    pub(crate) fn step(&mut self, gap: i64, z: f64, at: i64) {
        let last = *self.knots.last().unwrap();
        if z == last {
            debug_assert_eq!(at, *self.at.last().unwrap());
            return;
        }
        assert!(z > last, "knots out of order: {z} after {last}");
        self.open.push(gap);
        self.knots.push(z);
        self.at.push(at);
    }

    pub(crate) fn finish(self) -> StepProfile {
        StepProfile { knots: self.knots, at: self.at, open: self.open }
    }
}
