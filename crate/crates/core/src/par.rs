//! Index-ordered map over independent jobs.
//!
//! `jobs == 1` (or building without the `parallel` feature) runs on the
//! calling thread. Any other value uses a rayon pool of that many threads,
//! `0` meaning rayon's default. Results always come back in index order.

/// Maps `f` over `0..n`.
pub fn map_indexed<T, F>(n: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if jobs != 1 && n > 1 {
            return parallel(n, jobs, f);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
fn parallel<T, F>(n: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(&f).collect();
    if jobs == 0 {
        return run();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

/// Whether this build can run jobs concurrently.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
