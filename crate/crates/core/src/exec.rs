//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature enabled, [`par_map`] fans work out over the
//! current rayon pool. Without it, or inside [`with_threads`]`(1, ..)`, the
//! same closures run on the calling thread. Output order always matches
//! input order, so results never depend on the thread count.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Whether [`par_map`] would currently dispatch to rayon.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(Cell::get)
}

/// Map `f` over `items`, in parallel when available. Order-preserving.
#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if is_parallel() {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Fallible variant of [`par_map`]; returns the first error in input order.
pub fn try_par_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    par_map(items, f).into_iter().collect()
}

/// Run `op` with `threads` workers.
///
/// `threads == 1` disables parallelism entirely (no pool is entered), which
/// is the mode used for CPU-time measurements. `threads == 0` keeps the
/// default global pool.
pub fn with_threads<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> R {
    if threads == 1 || !cfg!(feature = "parallel") {
        let prev = FORCE_SEQUENTIAL.with(|c| c.replace(true));
        let out = op();
        FORCE_SEQUENTIAL.with(|c| c.set(prev));
        return out;
    }
    #[cfg(feature = "parallel")]
    if threads > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => return pool.install(op),
            Err(_) => return op(),
        }
    }
    op()
}

/// Process CPU time in seconds (all threads).
pub fn cpu_time() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid out-pointer for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// CPU and wall-clock seconds spent in `op`.
pub fn measure<R>(op: impl FnOnce() -> R) -> (R, f64, f64) {
    let wall = std::time::Instant::now();
    let cpu = cpu_time();
    let out = op();
    let cpu = (cpu_time() - cpu).max(0.0);
    (out, cpu, wall.elapsed().as_secs_f64())
}
