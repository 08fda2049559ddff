//! Reproducible experiment drivers.

mod blob;
mod montecarlo;
mod sweep;

pub use blob::{
    blob_evolve, blob_initialize, blob_moments, BlobCloud, BlobLayout, BlobMoments, BlobSample,
    MomentReport, Particle,
};
pub use montecarlo::{montecarlo_collisions, CollisionRequest, CollisionStats};
pub use sweep::{stability_sweep, sweep_row, Family, SweepRequest, SweepRow};

use crate::error::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SPHEREVORTEX_THREADS";

/// Worker pool sized by [`THREADS_ENV`], or by rayon's default when unset.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Error::invalid(
                THREADS_ENV,
                format!("expected a non-negative integer, got {v:?}"),
            )
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(THREADS_ENV, e.to_string()))
}
