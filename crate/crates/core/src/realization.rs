//! Poisson input data: α-points in the box, sources on the x-axis and sinks on
//! the time axis, plus the couplings used to compare processes with different
//! source intensities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng;

/// Point intensities. The sink rate is always `1 / lambda`, which makes the
/// process with sources and sinks stationary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intensities {
    pub alpha: f64,
    pub lambda: f64,
}

impl Intensities {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        ensure(alpha.is_finite() && alpha > 0.0, || format!("alpha must be positive, got {alpha}"))?;
        ensure(lambda.is_finite() && lambda > 0.0, || format!("lambda must be positive, got {lambda}"))?;
        Ok(Intensities { alpha, lambda })
    }

    /// Unit α-intensity with source rate `lambda`.
    pub fn stationary(lambda: f64) -> Result<Self> {
        Self::new(1.0, lambda)
    }

    pub fn source_rate(&self) -> f64 {
        self.lambda
    }

    pub fn sink_rate(&self) -> f64 {
        1.0 / self.lambda
    }
}

/// The simulation box `(0, x] × (0, t]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x: f64,
    pub t: f64,
}

impl Domain {
    pub fn new(x: f64, t: f64) -> Result<Self> {
        ensure(x.is_finite() && x > 0.0, || format!("box width must be positive, got {x}"))?;
        ensure(t.is_finite() && t > 0.0, || format!("box height must be positive, got {t}"))?;
        Ok(Domain { x, t })
    }

    pub fn square(side: f64) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        (0.0..=self.x).contains(&x) && (0.0..=self.t).contains(&t)
    }
}

/// A point in space-time: position `x`, time `s`. Serialized as `[x, s]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Point {
    pub x: f64,
    pub s: f64,
}

impl Point {
    pub fn new(x: f64, s: f64) -> Self {
        Point { x, s }
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, s): (f64, f64)) -> Self {
        Point { x, s }
    }
}

impl From<Point> for (f64, f64) {
    fn from(p: Point) -> Self {
        (p.x, p.s)
    }
}

#[derive(Deserialize)]
struct RawRealization {
    #[serde(rename = "box")]
    domain: Domain,
    intensities: Intensities,
    seed: u64,
    stream_id: u64,
    alpha_points: Vec<Point>,
    sources: Vec<f64>,
    sinks: Vec<f64>,
}

impl TryFrom<RawRealization> for Realization {
    type Error = Error;

    fn try_from(raw: RawRealization) -> Result<Self> {
        Realization::new(raw.domain, raw.intensities, raw.alpha_points, raw.sources, raw.sinks, raw.seed, raw.stream_id)
    }
}

/// One draw of the three driving point processes, in general position.
///
/// α-points are kept sorted by time, sources and sinks ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRealization")]
pub struct Realization {
    #[serde(rename = "box")]
    domain: Domain,
    intensities: Intensities,
    seed: u64,
    stream_id: u64,
    alpha_points: Vec<Point>,
    sources: Vec<f64>,
    sinks: Vec<f64>,
}

impl Realization {
    /// Builds a realization from explicit data, sorting it into canonical
    /// order and checking every invariant.
    pub fn new(
        domain: Domain,
        intensities: Intensities,
        mut alpha_points: Vec<Point>,
        mut sources: Vec<f64>,
        mut sinks: Vec<f64>,
        seed: u64,
        stream_id: u64,
    ) -> Result<Self> {
        let domain = Domain::new(domain.x, domain.t)?;
        let intensities = Intensities::new(intensities.alpha, intensities.lambda)?;
        let inside = |v: f64, hi: f64| v.is_finite() && v > 0.0 && v <= hi;
        for p in &alpha_points {
            if !inside(p.x, domain.x) || !inside(p.s, domain.t) {
                return Err(Error::InvalidRealization(format!(
                    "α-point ({}, {}) outside (0, {}] × (0, {}]",
                    p.x, p.s, domain.x, domain.t
                )));
            }
        }
        if let Some(&u) = sources.iter().find(|&&u| !inside(u, domain.x)) {
            return Err(Error::InvalidRealization(format!("source {u} outside (0, {}]", domain.x)));
        }
        if let Some(&s) = sinks.iter().find(|&&s| !inside(s, domain.t)) {
            return Err(Error::InvalidRealization(format!("sink {s} outside (0, {}]", domain.t)));
        }
        alpha_points.sort_by(|a, b| a.s.total_cmp(&b.s));
        sources.sort_by(f64::total_cmp);
        sinks.sort_by(f64::total_cmp);
        let r = Realization { domain, intensities, seed, stream_id, alpha_points, sources, sinks };
        if let Some(why) = r.general_position_violation() {
            return Err(Error::InvalidRealization(why));
        }
        Ok(r)
    }

    fn general_position_violation(&self) -> Option<String> {
        let mut xs: Vec<f64> = self.alpha_points.iter().map(|p| p.x).chain(self.sources.iter().copied()).collect();
        let mut ts: Vec<f64> = self.alpha_points.iter().map(|p| p.s).chain(self.sinks.iter().copied()).collect();
        xs.sort_by(f64::total_cmp);
        ts.sort_by(f64::total_cmp);
        if let Some(w) = xs.windows(2).find(|w| w[0] == w[1]) {
            return Some(format!("x-coordinate {} occurs twice", w[0]));
        }
        if let Some(w) = ts.windows(2).find(|w| w[0] == w[1]) {
            return Some(format!("time {} occurs twice", w[0]));
        }
        None
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn intensities(&self) -> Intensities {
        self.intensities
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// α-points sorted by time.
    pub fn alpha_points(&self) -> &[Point] {
        &self.alpha_points
    }

    pub fn sources(&self) -> &[f64] {
        &self.sources
    }

    pub fn sinks(&self) -> &[f64] {
        &self.sinks
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite Poisson mean");
    dist.sample(rng) as usize
}

/// Uniform on `(0, hi]`.
fn half_open(rng: &mut ChaCha8Rng, hi: f64) -> f64 {
    hi * (1.0 - rng.random::<f64>())
}

fn draw(namespace: &str, intensities: Intensities, domain: Domain, seed: u64, stream_id: u64) -> Result<Realization> {
    let intensities = Intensities::new(intensities.alpha, intensities.lambda)?;
    let domain = Domain::new(domain.x, domain.t)?;
    for attempt in 0u32.. {
        let mut rng = rng::stream(seed, stream_id, &format!("{namespace}alpha/{attempt}"));
        let n = poisson_count(&mut rng, intensities.alpha * domain.x * domain.t);
        let alpha = (0..n)
            .map(|_| {
                let x = half_open(&mut rng, domain.x);
                Point::new(x, half_open(&mut rng, domain.t))
            })
            .collect();

        let mut rng = rng::stream(seed, stream_id, &format!("{namespace}sources/{attempt}"));
        let n = poisson_count(&mut rng, intensities.source_rate() * domain.x);
        let sources = (0..n).map(|_| half_open(&mut rng, domain.x)).collect();

        let mut rng = rng::stream(seed, stream_id, &format!("{namespace}sinks/{attempt}"));
        let n = poisson_count(&mut rng, intensities.sink_rate() * domain.t);
        let sinks = (0..n).map(|_| half_open(&mut rng, domain.t)).collect();

        match Realization::new(domain, intensities, alpha, sources, sinks, seed, stream_id) {
            // Coordinate collisions have probability zero; redrawing leaves the law unchanged.
            Err(Error::InvalidRealization(_)) => continue,
            other => return other,
        }
    }
    unreachable!()
}

/// Draws the three independent Poisson processes for replication `stream_id`.
pub fn generate(intensities: Intensities, domain: Domain, seed: u64, stream_id: u64) -> Result<Realization> {
    draw("", intensities, domain, seed, stream_id)
}

/// Like [`generate`], but from a disjoint stream namespace, so the result is
/// independent of every realization produced by `generate` for any seed.
pub fn independent_aux(intensities: Intensities, domain: Domain, seed: u64, stream_id: u64) -> Result<Realization> {
    draw("aux/", intensities, domain, seed, stream_id)
}

/// Couples `base` to a process with source rate `lambda_prime ≥ base.lambda`:
/// an independent Poisson layer of rate `lambda_prime − lambda` is added to the
/// sources, and each sink is kept with probability `lambda / lambda_prime`.
/// α-points are shared.
pub fn thicken_thin(base: &Realization, lambda_prime: f64) -> Result<Realization> {
    let lambda = base.intensities.lambda;
    ensure(lambda_prime.is_finite() && lambda_prime >= lambda, || {
        format!("lambda' = {lambda_prime} must be at least the base lambda {lambda}")
    })?;
    let intensities = Intensities::new(base.intensities.alpha, lambda_prime)?;

    let mut rng = rng::stream(base.seed, base.stream_id, "thin");
    let keep = lambda / lambda_prime;
    let sinks: Vec<f64> = base.sinks.iter().copied().filter(|_| rng.random::<f64>() < keep).collect();

    for attempt in 0u32.. {
        let mut rng = rng::stream(base.seed, base.stream_id, &format!("thicken/{attempt}"));
        let n = poisson_count(&mut rng, (lambda_prime - lambda) * base.domain.x);
        let mut sources = base.sources.clone();
        sources.extend((0..n).map(|_| half_open(&mut rng, base.domain.x)));
        match Realization::new(
            base.domain,
            intensities,
            base.alpha_points.clone(),
            sources,
            sinks.clone(),
            base.seed,
            base.stream_id,
        ) {
            Err(Error::InvalidRealization(_)) => continue,
            other => return other,
        }
    }
    unreachable!()
}

/// Same α-points, no sources and no sinks.
pub fn strip_boundaries(r: &Realization) -> Realization {
    Realization { sources: Vec::new(), sinks: Vec::new(), ..r.clone() }
}
