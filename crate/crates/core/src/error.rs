use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("query ({x}, {t}) lies outside the box ({box_x}, {box_t})")]
    OutOfBox { x: f64, t: f64, box_x: f64, box_t: f64 },

    #[error("sink at time {time} found an empty configuration")]
    StarvedSink { time: f64 },

    #[error("trajectory covers [0, {covered}] but time {needed} was requested")]
    HorizonInsufficient { needed: f64, covered: f64 },

    #[error("brute force is capped at {cap} points, got {count}")]
    TooLarge { count: usize, cap: usize },

    #[error("realization violates an invariant: {0}")]
    InvalidRealization(String),

    #[error("empty sample")]
    EmptySample,

    #[error("starvation rate {rate:.4} exceeds 1%; enlarge the box")]
    StarvationRate { rate: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
