//! Seqlock-style snapshot cell for the reflective-variable runtime.

use std::cell::UnsafeCell;
use std::sync::atomic::{AtomicU64, Ordering};

/// Lock-free single-writer/multi-reader snapshot holder.
///
/// The writer bumps the sequence to an odd value, stores the payload, then
/// publishes an even value; readers retry until they observe a stable even
/// sequence on both sides of the copy, so a read never returns a torn value
/// and never blocks the writer.
pub(crate) struct SnapshotCell<T: Copy> {
    seq: AtomicU64,
    data: UnsafeCell<T>,
}

unsafe impl<T: Copy + Send> Sync for SnapshotCell<T> {}
unsafe impl<T: Copy + Send> Send for SnapshotCell<T> {}

impl<T: Copy> SnapshotCell<T> {
    pub(crate) fn new(value: T) -> Self {
        Self {
            seq: AtomicU64::new(0),
            data: UnsafeCell::new(value),
        }
    }

    /// Callers must guarantee a single writer at a time; the registry
    /// serializes commits with a per-variable writer lock.
    pub(crate) fn write(&self, value: T) {
        self.seq.fetch_add(1, Ordering::Release);
        // SAFETY: the odd sequence keeps readers from using this window and
        // the caller guarantees writer exclusivity.
        unsafe {
            *self.data.get() = value;
        }
        self.seq.fetch_add(1, Ordering::Release);
    }

    pub(crate) fn read(&self) -> T {
        loop {
            let start = self.seq.load(Ordering::Acquire);
            if start & 1 != 0 {
                std::hint::spin_loop();
                continue;
            }
            // SAFETY: T is Copy; a torn copy is discarded by the retry loop.
            let value = unsafe { std::ptr::read_volatile(self.data.get()) };
            if self.seq.load(Ordering::Acquire) == start {
                return value;
            }
            std::hint::spin_loop();
        }
    }
}
