//! Clock injection.
//!
//! Every component that needs the current time takes an `Arc<dyn Clock>`, so
//! scenarios and replays run under a [`VirtualClock`] and are deterministic,
//! while the live monitor runs on a [`SystemClock`].

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

/// Monotonic time source, in seconds.
pub trait Clock: Send + Sync {
    fn now(&self) -> f64;
}

/// Wall-clock seconds since the clock was created.
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// Manually driven clock. `set` only moves forward; attempts to move it
/// backwards are ignored so that readers always observe monotonic time.
pub struct VirtualClock {
    bits: AtomicU64,
}

impl VirtualClock {
    pub fn new() -> Arc<Self> {
        Arc::new(Self {
            bits: AtomicU64::new(0f64.to_bits()),
        })
    }

    pub fn set(&self, t: f64) {
        // Non-negative f64 bit patterns order like the floats they encode.
        self.bits.fetch_max(t.to_bits(), Ordering::SeqCst);
    }

    pub fn advance(&self, dt: f64) {
        let now = f64::from_bits(self.bits.load(Ordering::SeqCst));
        self.set(now + dt);
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> f64 {
        f64::from_bits(self.bits.load(Ordering::SeqCst))
    }
}
