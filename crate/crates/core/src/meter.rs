//! Counters for decoded entries that are resident in memory.
//!
//! Each decoded string (or buffered triple) holds a [`MeterGuard`] while it
//! is alive; the meter keeps the current and the peak total.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

#[derive(Debug, Default)]
struct Counts {
    current: AtomicUsize,
    peak: AtomicUsize,
}

#[derive(Debug, Clone, Default)]
pub struct Meter(Arc<Counts>);

impl Meter {
    pub fn new() -> Meter {
        Meter::default()
    }

    pub fn current(&self) -> usize {
        self.0.current.load(Ordering::Relaxed)
    }

    pub fn peak(&self) -> usize {
        self.0.peak.load(Ordering::Relaxed)
    }

    fn add(&self, n: usize) {
        let now = self.0.current.fetch_add(n, Ordering::Relaxed) + n;
        self.0.peak.fetch_max(now, Ordering::Relaxed);
    }

    fn sub(&self, n: usize) {
        self.0.current.fetch_sub(n, Ordering::Relaxed);
    }
}

/// Accounts for `n` resident entries until dropped.
#[derive(Debug, Default)]
pub struct MeterGuard {
    meter: Option<Meter>,
    n: usize,
}

impl MeterGuard {
    pub fn new(meter: Option<&Meter>, n: usize) -> MeterGuard {
        if let Some(m) = meter {
            m.add(n);
        }
        MeterGuard { meter: meter.cloned(), n }
    }

    /// Changes the number of entries this guard accounts for.
    pub fn set(&mut self, n: usize) {
        if let Some(m) = &self.meter {
            if n > self.n {
                m.add(n - self.n);
            } else {
                m.sub(self.n - n);
            }
        }
        self.n = n;
    }
}

impl Clone for MeterGuard {
    fn clone(&self) -> Self {
        MeterGuard::new(self.meter.as_ref(), self.n)
    }
}

impl Drop for MeterGuard {
    fn drop(&mut self) {
        if let Some(m) = &self.meter {
            m.sub(self.n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracks_peak() {
        let m = Meter::new();
        let a = MeterGuard::new(Some(&m), 2);
        let mut b = a.clone();
        assert_eq!(m.current(), 4);
        b.set(10);
        assert_eq!(m.current(), 12);
        drop(a);
        b.set(1);
        assert_eq!(m.current(), 1);
        drop(b);
        assert_eq!(m.current(), 0);
        assert_eq!(m.peak(), 12);
        let _none = MeterGuard::new(None, 5);
    }
}
