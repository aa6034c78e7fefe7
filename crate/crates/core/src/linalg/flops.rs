//! Thread-local multiply-accumulate counter.
//!
//! Kernels add their operation count once per call. [`measure`] scopes a
//! closure and returns how much arithmetic it performed on this thread.

use std::cell::Cell;

thread_local! {
    static COUNTER: Cell<u64> = const { Cell::new(0) };
}

#[inline]
pub(crate) fn add(n: usize) {
    COUNTER.with(|c| c.set(c.get().wrapping_add(n as u64)));
}

/// Current value of this thread's counter.
pub fn current() -> u64 {
    COUNTER.with(Cell::get)
}

/// Runs `f` and returns its result with the multiply-accumulates it issued.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, u64) {
    let start = current();
    let out = f();
    (out, current().wrapping_sub(start))
}
