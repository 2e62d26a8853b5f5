//! Parallel replication harness.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Evaluates `statistic(seed, stream_id)` for `stream_id` in `0..reps` on a
/// pool of `threads` workers (`0` means one per core). The output is in stream
/// order, so it does not depend on the number of threads.
pub fn mc_run<T, F>(reps: usize, seed: u64, threads: usize, statistic: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    mc_run_from(0, reps, seed, threads, statistic)
}

/// Like [`mc_run`] over the streams `first..first + reps`.
pub fn mc_run_from<T, F>(first: u64, reps: usize, seed: u64, threads: usize, statistic: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    if reps == 0 {
        return Err(Error::InvalidParameter("at least one replication is required".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (first..first + reps as u64).into_par_iter().map(|id| statistic(seed, id)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::longest_weakly_ne;
    use crate::realization::{generate, Domain, Intensities};

    fn length(seed: u64, id: u64) -> u64 {
        let r = generate(Intensities::stationary(1.0).unwrap(), Domain::square(5.0).unwrap(), seed, id).unwrap();
        longest_weakly_ne(&r, 5.0, 5.0).unwrap().length
    }

    #[test]
    fn independent_of_thread_count() {
        let one = mc_run(64, 3, 1, length).unwrap();
        let eight = mc_run(64, 3, 8, length).unwrap();
        assert_eq!(one, eight);
    }

    #[test]
    fn single_replication() {
        assert_eq!(mc_run(1, 3, 2, |_, id| id).unwrap(), vec![0]);
        assert!(mc_run(0, 3, 2, |_, id| id).is_err());
    }

    #[test]
    fn constant_statistic() {
        let v = mc_run(10, 0, 4, |_, _| 2.5).unwrap();
        assert_eq!(v.iter().sum::<f64>() / 10.0, 2.5);
    }

    #[test]
    fn offset_streams() {
        assert_eq!(mc_run_from(5, 3, 0, 2, |_, id| id).unwrap(), vec![5, 6, 7]);
    }
}
