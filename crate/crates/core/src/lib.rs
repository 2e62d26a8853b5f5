//! Simulation laboratory for Hammersley's interacting particle process with
//! Poisson sources and sinks.
//!
//! - [`realization`]: reproducible Poisson input data and its couplings.
//! - [`paths`]: longest weakly/strictly North-East paths and exit points.
//! - [`dynamics`]: the particle process as a discrete-event simulation,
//!   flux, crossings and second class particles.
//! - [`duality`]: point reflection of a realization (Burke duality).
//! - [`estimators`]: Monte Carlo checks of the variance identities, pathwise
//!   couplings and cube-root scaling.

pub mod duality;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod fixtures;
pub mod mc;
pub mod paths;
pub mod profile;
pub mod realization;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use realization::{Domain, Intensities, Point, Realization};
