//! Condition-level parallelism with results merged in condition order.

use rayon::prelude::*;
use unmask_core::experiments::{run_condition, ConditionSpec, ResultRow};
use unmask_core::model::Variant;

use crate::error::{Error, Result};

/// Thread pool of `jobs` workers; zero picks one per core.
pub fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))
}

/// Runs every condition for every variant. Row order follows the condition
/// list whatever the number of workers, so output is independent of `jobs`.
pub fn run_parallel(conditions: &[ConditionSpec], variants: &[Variant], jobs: usize) -> Result<Vec<ResultRow>> {
    let per_condition: Vec<Vec<ResultRow>> = pool(jobs)?.install(|| {
        conditions
            .par_iter()
            .map(|c| run_condition(c, variants))
            .collect::<unmask_core::Result<_>>()
    })?;
    Ok(per_condition.into_iter().flatten().collect())
}

/// Maps `f` over `items` on the pool, keeping order.
pub fn map_parallel<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(&T) -> unmask_core::Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    Ok(pool(jobs)?.install(|| items.par_iter().map(f).collect::<unmask_core::Result<_>>())?)
}
