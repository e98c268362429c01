//! Process-wide floating point operation counter.
//!
//! Every dense kernel in [`crate::linalg`] adds its nominal flop count here, so the
//! difference of two [`count`] readings measures the dense work done in between.
//! The counter is global: concurrent measurements in the same process interfere.

use std::sync::atomic::{AtomicU64, Ordering};

static FLOPS: AtomicU64 = AtomicU64::new(0);

#[inline]
pub(crate) fn add(n: u64) {
    FLOPS.fetch_add(n, Ordering::Relaxed);
}

/// Current value of the counter.
pub fn count() -> u64 {
    FLOPS.load(Ordering::Relaxed)
}

/// Runs `f` and returns its result with the number of flops it performed.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let start = count();
    let out = f();
    (out, count() - start)
}
