//! Worker-thread configuration. Results never depend on the thread count:
//! every parallel map collects in index order and all reductions run
//! sequentially afterwards, so the cap is purely a resource knob.

/// Environment variable capping worker parallelism.
pub const THREADS_ENV: &str = "RKHS_SPARSE_THREADS";

/// Install a global thread pool honoring the env var. Safe to call more
/// than once; later calls are no-ops, as is an unset or unparsable value.
pub fn init_thread_pool_from_env() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(k) = v.trim().parse::<usize>() {
            if k >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
        }
    }
}
