//! Small hand-checkable realizations.

use crate::realization::{Domain, Intensities, Point, Realization};

/// Box `(2, 2)`, sources `{0.5, 1.5}`, one sink at time `1.0`, one α-point at
/// `(1.0, 0.5)`, unit intensities.
pub fn fixture_a() -> Realization {
    Realization::new(
        Domain { x: 2.0, t: 2.0 },
        Intensities { alpha: 1.0, lambda: 1.0 },
        vec![Point::new(1.0, 0.5)],
        vec![0.5, 1.5],
        vec![1.0],
        0,
        0,
    )
    .expect("fixture is in general position")
}

/// A realization with no points at all on a box of side `side`.
pub fn empty(side: f64) -> Realization {
    Realization::new(
        Domain { x: side, t: side },
        Intensities { alpha: 1.0, lambda: 1.0 },
        Vec::new(),
        Vec::new(),
        Vec::new(),
        0,
        0,
    )
    .expect("empty realization is valid")
}
