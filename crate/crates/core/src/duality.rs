//! Point reflection of a realization through `(t/2, t/2)`.
//!
//! Reflecting the space-time picture of the process on `[0, t]²` gives
//! another picture of Hammersley's process. In it the sources are the
//! reflected North crossings, the sinks the reflected East crossings, and the
//! α-points the reflected upper-right corners of the original paths (the
//! places a particle jumped away from, or left through a sink). Longest
//! weakly NE paths of the original become (dual) second class particle
//! trajectories of the reflection, so `Z(t) = Y(t)` and `Z'(t) = Y'(t)`.

use serde::Serialize;

use crate::dynamics::{self, east_crossing_times, evolve, Crossings, Event, Kind};
use crate::error::{Error, Result};
use crate::paths::longest_weakly_ne;
use crate::realization::{Domain, Point, Realization};
use crate::stats::{correlation, Summary};

/// A realization on `[0, t]²` obtained by [`reflect`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReflectedRealization {
    pub realization: Realization,
    pub side: f64,
}

pub fn reflect(r: &Realization, t: f64) -> Result<ReflectedRealization> {
    let d = r.domain();
    if !(t > 0.0 && t <= d.x && t <= d.t) {
        return Err(Error::InvalidParameter(format!("square [0, {t}]² must lie inside the box ({}, {})", d.x, d.t)));
    }
    let (config, log) = evolve(r, t)?;
    if let Some(&time) = log.starved_sinks.first() {
        return Err(Error::StarvedSink { time });
    }
    let corners = log.events.iter().filter_map(|e| match *e {
        Event::AlphaJump { s, old, .. } if old <= t => Some(Point::new(t - old, t - s)),
        Event::SinkExit { s, exited } if exited <= t => Some(Point::new(t - exited, t - s)),
        _ => None,
    });
    let sources = config.positions().iter().take_while(|&&p| p <= t).map(|p| t - p);
    let sinks = east_crossing_times(&log, t).into_iter().map(|s| t - s);
    let realization = Realization::new(
        Domain::square(t)?,
        r.intensities(),
        corners.collect(),
        sources.collect(),
        sinks.collect(),
        r.seed(),
        r.stream_id(),
    )?;
    Ok(ReflectedRealization { realization, side: t })
}

/// Exit points of `r` next to the second class particle values of its
/// reflection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExitCorrespondence {
    pub t: f64,
    pub z: f64,
    pub z_prime: f64,
    pub y: f64,
    pub y_prime: f64,
    pub z_matches: bool,
    pub z_prime_matches: bool,
    /// The realization as JSON when either pair disagrees.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump: Option<String>,
}

impl ExitCorrespondence {
    pub fn matches(&self) -> bool {
        self.z_matches && self.z_prime_matches
    }
}

pub fn exit_equals_y_check(r: &Realization, t: f64) -> Result<ExitCorrespondence> {
    let path = longest_weakly_ne(r, t, t)?;
    let refl = reflect(r, t)?.realization;
    let normal = dynamics::second_class_trajectory(&refl, t, Kind::Normal)?;
    let dual = dynamics::second_class_trajectory(&refl, t, Kind::Dual)?;
    let y = dynamics::y_value(&normal, t)?;
    let y_prime = dynamics::y_value(&dual, t)?;
    // reflected coordinates are t − u; allow for the rounding of t − (t − u)
    let tol = 1e-9 * t.max(1.0);
    let z_matches = (path.exit - y).abs() <= tol;
    let z_prime_matches = (path.exit_left - y_prime).abs() <= tol;
    let dump = if z_matches && z_prime_matches { None } else { Some(r.to_json()?) };
    Ok(ExitCorrespondence { t, z: path.exit, z_prime: path.exit_left, y, y_prime, z_matches, z_prime_matches, dump })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moment {
    pub estimate: f64,
    pub se: f64,
    pub expected: f64,
}

impl Moment {
    pub fn within(&self, sigmas: f64) -> bool {
        (self.estimate - self.expected).abs() <= sigmas * self.se
    }
}

/// Moments of the crossing counts against their stationary Poisson laws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BurkeReport {
    pub replications: usize,
    pub mean_north: Moment,
    pub var_north: Moment,
    pub mean_east: Moment,
    pub var_east: Moment,
    pub corr_north_east: Moment,
    pub corr_south_west: Moment,
}

impl BurkeReport {
    pub fn passes(&self, sigmas: f64) -> bool {
        [self.mean_north, self.var_north, self.mean_east, self.var_east, self.corr_north_east, self.corr_south_west]
            .iter()
            .all(|m| m.within(sigmas))
    }
}

/// `N ~ Poisson(λx)` and `E ~ Poisson(t/λ)` independent, and likewise `S, W`.
pub fn burke_statistics(samples: &[Crossings], x: f64, t: f64, lambda: f64) -> Result<BurkeReport> {
    if samples.len() < 3 {
        return Err(Error::EmptySample);
    }
    let col = |f: fn(&Crossings) -> u64| samples.iter().map(|c| f(c) as f64).collect::<Vec<_>>();
    let (n, e, s, w) = (col(|c| c.north), col(|c| c.east), col(|c| c.south), col(|c| c.west));
    let sn = Summary::of(&n)?;
    let se = Summary::of(&e)?;
    let (r_ne, se_ne) = correlation(&n, &e)?;
    let (r_sw, se_sw) = correlation(&s, &w)?;
    Ok(BurkeReport {
        replications: samples.len(),
        mean_north: Moment { estimate: sn.mean, se: sn.se_mean, expected: lambda * x },
        var_north: Moment { estimate: sn.variance, se: sn.se_variance, expected: lambda * x },
        mean_east: Moment { estimate: se.mean, se: se.se_mean, expected: t / lambda },
        var_east: Moment { estimate: se.variance, se: se.se_variance, expected: t / lambda },
        corr_north_east: Moment { estimate: r_ne, se: se_ne, expected: 0.0 },
        corr_south_west: Moment { estimate: r_sw, se: se_sw, expected: 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::crossings;
    use crate::fixtures::{empty, fixture_a};
    use crate::realization::{generate, Intensities};

    #[test]
    fn fixture_reflection() {
        let refl = reflect(&fixture_a(), 2.0).unwrap().realization;
        // the N-crossing at 1.0 becomes a source at 1.0; no path enters from
        // the east, so there are no sinks
        assert_eq!(refl.sources(), &[1.0]);
        assert!(refl.sinks().is_empty());
        // corners (1.5, 0.5) and (0.5, 1.0) of the original paths
        assert_eq!(refl.alpha_points(), &[Point::new(1.5, 1.0), Point::new(0.5, 1.5)]);
    }

    #[test]
    fn fixture_exit_points_are_reflected_second_class_particles() {
        let c = exit_equals_y_check(&fixture_a(), 2.0).unwrap();
        assert_eq!((c.z, c.y), (2.0, 2.0));
        assert_eq!((c.z_prime, c.y_prime), (0.5, 0.5));
        assert!(c.matches() && c.dump.is_none());
    }

    #[test]
    fn empty_interior() {
        let r = Realization::new(
            Domain::square(2.0).unwrap(),
            Intensities::stationary(1.0).unwrap(),
            vec![],
            vec![0.3, 1.7],
            vec![0.9, 1.2],
            0,
            0,
        )
        .unwrap();
        // N(2) = N(−2) = 2: the argmax is [−2, −1.2] ∪ [1.7, 2]
        let c = exit_equals_y_check(&r, 2.0).unwrap();
        assert_eq!((c.z, c.z_prime), (2.0, -2.0));
        assert!(c.matches(), "{c:?}");
        let c = exit_equals_y_check(&empty(2.0), 2.0).unwrap();
        assert!(c.matches(), "{c:?}");
    }

    #[test]
    fn reflection_is_an_involution_and_keeps_books() {
        let i = Intensities::stationary(1.0).unwrap();
        for id in 0..300 {
            let r = generate(i, Domain::square(8.0).unwrap(), 31, id).unwrap();
            let Ok(refl) = reflect(&r, 8.0) else { continue };
            let refl = refl.realization;
            let c = crossings(&r, 8.0, 8.0).unwrap();
            assert_eq!(refl.sources().len() as u64, c.north);
            assert_eq!(refl.sinks().len() as u64, c.east);
            assert_eq!(refl.alpha_points().len() as i64, r.alpha_points().len() as i64 + c.west as i64 - c.east as i64);
            let back = reflect(&refl, 8.0).unwrap().realization;
            let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
            assert_eq!(back.alpha_points().len(), r.alpha_points().len());
            for (p, q) in back.alpha_points().iter().zip(r.alpha_points()) {
                assert!(close(p.x, q.x) && close(p.s, q.s));
            }
            assert!(back.sources().iter().zip(r.sources()).all(|(a, b)| close(*a, *b)));
            assert!(back.sinks().iter().zip(r.sinks()).all(|(a, b)| close(*a, *b)));
        }
    }

    #[test]
    fn exit_points_match_on_random_realizations() {
        let i = Intensities::stationary(1.0).unwrap();
        let mut checked = 0;
        for id in 0..500 {
            let r = generate(i, Domain::square(6.0).unwrap(), 32, id).unwrap();
            let Ok(c) = exit_equals_y_check(&r, 6.0) else { continue };
            assert!(c.matches(), "id={id}: {c:?}");
            checked += 1;
        }
        assert!(checked > 490);
    }

    #[test]
    fn reflection_needs_square_inside_box() {
        assert!(reflect(&fixture_a(), 2.5).is_err());
    }

    #[test]
    fn burke_needs_samples() {
        assert!(burke_statistics(&[], 1.0, 1.0, 1.0).is_err());
    }
}
