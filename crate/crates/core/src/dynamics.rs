//! Hammersley's process as a discrete-event simulation on a finite window.
//!
//! Particles start at the sources. At an α-point `(x, s)` the particle
//! immediately to the right of `x` jumps to `x`; if there is none inside the
//! window, a particle enters from beyond the right edge and is born at `x`. At
//! a sink the leftmost particle leaves. Restricted to `[0, X]` this reproduces
//! the half-line process exactly.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::realization::{Point, Realization};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Configuration {
    positions: VecDeque<f64>,
    clock: f64,
}

/// What an α-point did to a configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
enum AlphaOutcome {
    Jumped { old: f64 },
    Born,
}

impl Configuration {
    pub fn new(positions: impl IntoIterator<Item = f64>, clock: f64) -> Self {
        let positions: VecDeque<f64> = positions.into_iter().collect();
        assert!(
            positions.iter().zip(positions.iter().skip(1)).all(|(a, b)| a < b),
            "positions must be strictly increasing"
        );
        Configuration { positions, clock }
    }

    pub fn positions(&self) -> &VecDeque<f64> {
        &self.positions
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Number of particles at positions `≤ x`.
    pub fn count_le(&self, x: f64) -> usize {
        self.positions.partition_point(|&p| p <= x)
    }

    /// The `k`-th particle from the left, 1-based.
    pub fn kth(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.positions.get(i).copied())
    }

    fn alpha(&mut self, x: f64, s: f64) -> AlphaOutcome {
        self.clock = s;
        let i = self.positions.partition_point(|&p| p < x);
        match self.positions.get_mut(i) {
            // No particle sits in (x, old), so the order is preserved in place.
            Some(p) => {
                let old = std::mem::replace(p, x);
                AlphaOutcome::Jumped { old }
            }
            None => {
                self.positions.push_back(x);
                AlphaOutcome::Born
            }
        }
    }

    fn sink(&mut self, s: f64) -> Option<f64> {
        self.clock = s;
        self.positions.pop_front()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Event {
    AlphaJump { x: f64, s: f64, old: f64 },
    Birth { x: f64, s: f64 },
    SinkExit { s: f64, exited: f64 },
}

impl Event {
    pub fn time(&self) -> f64 {
        match *self {
            Event::AlphaJump { s, .. } | Event::Birth { s, .. } | Event::SinkExit { s, .. } => s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventLog {
    pub initial: Vec<f64>,
    pub events: Vec<Event>,
    /// Sink times at which the window was empty; those sinks did nothing.
    pub starved_sinks: Vec<f64>,
    pub window: f64,
    pub until: f64,
}

impl EventLog {
    pub fn is_starved(&self) -> bool {
        !self.starved_sinks.is_empty()
    }

    fn ensure_not_starved(&self) -> Result<()> {
        match self.starved_sinks.first() {
            Some(&time) => Err(Error::StarvedSink { time }),
            None => Ok(()),
        }
    }

    /// Number of sinks that removed a particle.
    pub fn sinks_used(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::SinkExit { .. })).count()
    }

    /// Re-applies the logged moves to the initial configuration.
    pub fn replay(&self) -> Configuration {
        let mut c = Configuration::new(self.initial.iter().copied(), 0.0);
        for e in &self.events {
            match *e {
                Event::AlphaJump { x, s, old } => {
                    let i = c.positions.partition_point(|&p| p < old);
                    assert_eq!(c.positions.get(i), Some(&old), "log does not match configuration");
                    c.positions[i] = x;
                    c.clock = s;
                }
                Event::Birth { x, s } => {
                    c.positions.push_back(x);
                    c.clock = s;
                }
                Event::SinkExit { s, exited } => {
                    assert_eq!(c.positions.pop_front(), Some(exited), "log does not match configuration");
                    c.clock = s;
                }
            }
        }
        c.clock = self.until;
        c
    }

    /// `time,type,x_old,x_new` rows; empty cells where a coordinate does not apply.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(f64, String)> = self
            .events
            .iter()
            .map(|e| match *e {
                Event::AlphaJump { x, s, old } => (s, format!("{s},alpha-jump,{old},{x}")),
                Event::Birth { x, s } => (s, format!("{s},birth,,{x}")),
                Event::SinkExit { s, exited } => (s, format!("{s},sink-exit,{exited},")),
            })
            .chain(self.starved_sinks.iter().map(|&s| (s, format!("{s},starved-sink,,"))))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = String::from("time,type,x_old,x_new\n");
        for (_, row) in rows {
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}

/// One straight piece of a particle's space-time path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub path: usize,
    pub x0: f64,
    pub t0: f64,
    pub x1: f64,
    pub t1: f64,
}

/// Space-time paths as straight segments: vertical while a particle rests,
/// horizontal when it jumps, enters from the right edge, or leaves through a
/// sink.
pub fn space_time_paths(log: &EventLog) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut live: HashMap<u64, (usize, f64)> = HashMap::new();
    let mut next_id = 0;
    for &p in &log.initial {
        live.insert(p.to_bits(), (next_id, 0.0));
        next_id += 1;
    }
    for e in &log.events {
        match *e {
            Event::AlphaJump { x, s, old } => {
                let (id, since) = live.remove(&old.to_bits()).expect("jumping particle is live");
                segments.push(Segment { path: id, x0: old, t0: since, x1: old, t1: s });
                segments.push(Segment { path: id, x0: old, t0: s, x1: x, t1: s });
                live.insert(x.to_bits(), (id, s));
            }
            Event::Birth { x, s } => {
                segments.push(Segment { path: next_id, x0: log.window, t0: s, x1: x, t1: s });
                live.insert(x.to_bits(), (next_id, s));
                next_id += 1;
            }
            Event::SinkExit { s, exited } => {
                let (id, since) = live.remove(&exited.to_bits()).expect("exiting particle is live");
                segments.push(Segment { path: id, x0: exited, t0: since, x1: exited, t1: s });
                segments.push(Segment { path: id, x0: exited, t0: s, x1: 0.0, t1: s });
            }
        }
    }
    for (bits, (id, since)) in live {
        let p = f64::from_bits(bits);
        segments.push(Segment { path: id, x0: p, t0: since, x1: p, t1: log.until });
    }
    // stable: within a path, segments are already in time order
    segments.sort_by_key(|s| s.path);
    segments
}

pub fn segments_to_csv(segments: &[Segment]) -> String {
    let mut out = String::from("path,x0,t0,x1,t1\n");
    for s in segments {
        writeln!(out, "{},{},{},{},{}", s.path, s.x0, s.t0, s.x1, s.t1).unwrap();
    }
    out
}

#[derive(Clone, Copy, Debug)]
enum Driver {
    Alpha(Point),
    Sink(f64),
}

impl Driver {
    fn time(&self) -> f64 {
        match *self {
            Driver::Alpha(p) => p.s,
            Driver::Sink(s) => s,
        }
    }
}

/// α-points and sinks up to `until`, merged by time.
fn drivers(r: &Realization, until: f64) -> Vec<Driver> {
    let alpha = r.alpha_points().iter().take_while(|p| p.s <= until).map(|&p| Driver::Alpha(p));
    let sinks = r.sinks().iter().take_while(|&&s| s <= until).map(|&s| Driver::Sink(s));
    let mut all: Vec<Driver> = alpha.chain(sinks).collect();
    all.sort_by(|a, b| a.time().total_cmp(&b.time()));
    assert!(all.windows(2).all(|w| w[0].time() < w[1].time()), "event times must be distinct");
    all
}

fn check_horizon(r: &Realization, until: f64) -> Result<()> {
    let d = r.domain();
    if until.is_finite() && (0.0..=d.t).contains(&until) {
        Ok(())
    } else {
        Err(Error::OutOfBox { x: 0.0, t: until, box_x: d.x, box_t: d.t })
    }
}

/// Runs the process from the sources up to time `until`.
pub fn evolve(r: &Realization, until: f64) -> Result<(Configuration, EventLog)> {
    check_horizon(r, until)?;
    let mut config = Configuration::new(r.sources().iter().copied(), 0.0);
    let mut log = EventLog {
        initial: r.sources().to_vec(),
        events: Vec::new(),
        starved_sinks: Vec::new(),
        window: r.domain().x,
        until,
    };
    for d in drivers(r, until) {
        match d {
            Driver::Alpha(Point { x, s }) => match config.alpha(x, s) {
                AlphaOutcome::Jumped { old } => log.events.push(Event::AlphaJump { x, s, old }),
                AlphaOutcome::Born => log.events.push(Event::Birth { x, s }),
            },
            Driver::Sink(s) => match config.sink(s) {
                Some(exited) => log.events.push(Event::SinkExit { s, exited }),
                None => log.starved_sinks.push(s),
            },
        }
    }
    config.clock = until;
    Ok((config, log))
}

fn check_x(r: &Realization, x: f64, t: f64) -> Result<()> {
    let d = r.domain();
    if x.is_finite() && d.contains(x, t) {
        Ok(())
    } else {
        Err(Error::OutOfBox { x, t, box_x: d.x, box_t: d.t })
    }
}

/// `L(x, t)`: sinks used in `[0, t]` plus particles in `[0, x]` at time `t`.
pub fn flux(r: &Realization, x: f64, t: f64) -> Result<u64> {
    check_x(r, x, t)?;
    let (config, log) = evolve(r, t)?;
    log.ensure_not_starved()?;
    Ok((log.sinks_used() + config.count_le(x)) as u64)
}

/// Space-time path crossings of the four sides of `[0, x] × [0, t]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossings {
    pub north: u64,
    pub east: u64,
    pub south: u64,
    pub west: u64,
}

/// Times at which a path enters `[0, x]` across its right side: jumps from
/// beyond `x`, births, and sinks that take a particle lying beyond `x`.
pub fn east_crossing_times(log: &EventLog, x: f64) -> Vec<f64> {
    log.events
        .iter()
        .filter_map(|e| match *e {
            Event::AlphaJump { x: to, s, old } if old > x && to <= x => Some(s),
            Event::Birth { x: to, s } if to <= x => Some(s),
            Event::SinkExit { s, exited } if exited > x => Some(s),
            _ => None,
        })
        .collect()
}

pub fn crossings(r: &Realization, x: f64, t: f64) -> Result<Crossings> {
    check_x(r, x, t)?;
    let (config, log) = evolve(r, t)?;
    log.ensure_not_starved()?;
    let c = Crossings {
        north: config.count_le(x) as u64,
        east: east_crossing_times(&log, x).len() as u64,
        south: r.sources().partition_point(|&u| u <= x) as u64,
        west: log.sinks_used() as u64,
    };
    assert_eq!(c.south + c.east, c.north + c.west, "crossing balance violated: {c:?}");
    Ok(c)
}

/// Location at time `t` of the particle that started at the `k`-th source
/// (1-based, counted from the left). Particles that left through a sink sit at
/// `0`; `None` means the particle is still beyond the window.
pub fn particle_location(r: &Realization, k: usize, t: f64) -> Result<Option<f64>> {
    if k == 0 {
        return Err(Error::InvalidParameter("particle index is 1-based".into()));
    }
    let (config, log) = evolve(r, t)?;
    log.ensure_not_starved()?;
    let exited = log.sinks_used();
    if k <= exited {
        Ok(Some(0.0))
    } else {
        Ok(config.kth(k - exited))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Extra source at the origin.
    Normal,
    /// Extra sink at the origin, i.e. the first source removed.
    Dual,
}

/// Piecewise-constant, right-continuous path of a (dual) second class particle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub kind: Kind,
    /// `(time, new position)`, the first entry at time 0.
    pub jumps: Vec<(f64, f64)>,
    /// Time at which the particle left the window to the right, if it did.
    pub escaped_at: Option<f64>,
    pub window: f64,
    pub until: f64,
}

impl Trajectory {
    /// Position at time `t`; `+∞` once the particle has left the window.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.until).contains(&t) {
            return Err(Error::HorizonInsufficient { needed: t, covered: self.until });
        }
        if self.escaped_at.is_some_and(|e| e <= t) {
            return Ok(f64::INFINITY);
        }
        let i = self.jumps.partition_point(|j| j.0 <= t);
        Ok(self.jumps[i - 1].1)
    }

    /// `inf{s : X(s) ≥ a}`, if reached within the horizon.
    pub fn hitting_time(&self, a: f64) -> Option<f64> {
        let jump = self.jumps.iter().find(|j| j.1 >= a).map(|j| j.0);
        jump.or(if a > self.window { None } else { self.escaped_at })
    }
}

/// Index of the single extra element of `big` over `small`.
fn discrepancy(big: &VecDeque<f64>, small: &VecDeque<f64>) -> f64 {
    debug_assert_eq!(big.len(), small.len() + 1);
    let (mut lo, mut hi) = (0, small.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if big[mid] == small[mid] {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    debug_assert!(big.iter().skip(lo + 1).eq(small.iter().skip(lo)));
    big[lo]
}

/// Tracks a second class particle by running the process and a perturbed copy
/// on the same α-points and sinks: the copy has an extra particle at `0`
/// (normal) or lacks the first source (dual). The two configurations differ
/// in one particle, whose position is the trajectory. The trajectory is exact
/// until the particle leaves the window.
pub fn second_class_trajectory(r: &Realization, until: f64, kind: Kind) -> Result<Trajectory> {
    check_horizon(r, until)?;
    let mut orig = Configuration::new(r.sources().iter().copied(), 0.0);
    let mut copy = match kind {
        Kind::Normal => Configuration::new(std::iter::once(0.0).chain(r.sources().iter().copied()), 0.0),
        Kind::Dual => Configuration::new(r.sources().iter().skip(1).copied(), 0.0),
    };
    let mut traj = Trajectory { kind, jumps: Vec::new(), escaped_at: None, window: r.domain().x, until };
    match r.sources().first() {
        _ if kind == Kind::Normal => traj.jumps.push((0.0, 0.0)),
        Some(&first) => traj.jumps.push((0.0, first)),
        None => traj.escaped_at = Some(0.0),
    }

    for d in drivers(r, until) {
        match d {
            Driver::Alpha(Point { x, s }) => {
                orig.alpha(x, s);
                copy.alpha(x, s);
            }
            // A sink meeting an empty window takes a particle from beyond it.
            // If that happens to one copy only, the discrepancy jumps out of
            // the window.
            Driver::Sink(s) => {
                orig.sink(s);
                copy.sink(s);
            }
        }
        if traj.escaped_at.is_some() {
            continue;
        }
        let (big, small) = match kind {
            Kind::Normal => (&copy.positions, &orig.positions),
            Kind::Dual => (&orig.positions, &copy.positions),
        };
        if big.len() == small.len() {
            debug_assert_eq!(big, small);
            traj.escaped_at = Some(d.time());
            continue;
        }
        let pos = discrepancy(big, small);
        if pos != traj.jumps.last().unwrap().1 {
            traj.jumps.push((d.time(), pos));
        }
    }
    Ok(traj)
}

/// `Y(t) = t − X(t)` if `X(t) ≤ t`, else `inf{s : X(s) ≥ t} − t`.
pub fn y_value(traj: &Trajectory, t: f64) -> Result<f64> {
    let x = traj.value_at(t)?;
    if x.is_infinite() && traj.window < t {
        // left a window narrower than t: cannot tell whether X(t) ≤ t
        return Err(Error::HorizonInsufficient { needed: t, covered: traj.window });
    }
    if x <= t {
        Ok(t - x)
    } else {
        let hit = traj.hitting_time(t).expect("X(t) > t implies t was reached");
        Ok(hit - t)
    }
}
