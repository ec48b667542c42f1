//! Virtual time.
//!
//! The simulated services never read the wall clock. All timestamps come
//! from a [`VirtualClock`] advanced explicitly by the harness, which makes
//! rate-limit behavior, scan pacing, and analytics timestamps fully
//! deterministic and lets a "60 second" experiment finish in microseconds.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Sub};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// A point in simulated time, microseconds since the start of the run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VirtualInstant {
    micros: u64,
}

/// A span of simulated time.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VirtualDuration {
    micros: u64,
}

impl VirtualInstant {
    pub const ZERO: Self = Self { micros: 0 };

    pub fn from_micros(micros: u64) -> Self {
        Self { micros }
    }

    pub fn micros(self) -> u64 {
        self.micros
    }

    pub fn as_secs_f64(self) -> f64 {
        self.micros as f64 / 1e6
    }

    pub fn saturating_sub(self, earlier: Self) -> VirtualDuration {
        VirtualDuration {
            micros: self.micros.saturating_sub(earlier.micros),
        }
    }
}

impl VirtualDuration {
    pub const ZERO: Self = Self { micros: 0 };

    pub fn from_micros(micros: u64) -> Self {
        Self { micros }
    }

    pub fn from_secs(secs: u64) -> Self {
        Self {
            micros: secs * 1_000_000,
        }
    }

    /// Rounds to the nearest microsecond; negative inputs clamp to zero.
    pub fn from_secs_f64(secs: f64) -> Self {
        Self {
            micros: (secs.max(0.0) * 1e6).round() as u64,
        }
    }

    pub fn micros(self) -> u64 {
        self.micros
    }

    pub fn as_secs_f64(self) -> f64 {
        self.micros as f64 / 1e6
    }
}

impl Add<VirtualDuration> for VirtualInstant {
    type Output = VirtualInstant;
    fn add(self, rhs: VirtualDuration) -> VirtualInstant {
        VirtualInstant {
            micros: self.micros + rhs.micros,
        }
    }
}

impl AddAssign<VirtualDuration> for VirtualInstant {
    fn add_assign(&mut self, rhs: VirtualDuration) {
        self.micros += rhs.micros;
    }
}

impl Add for VirtualDuration {
    type Output = VirtualDuration;
    fn add(self, rhs: VirtualDuration) -> VirtualDuration {
        VirtualDuration {
            micros: self.micros + rhs.micros,
        }
    }
}

impl AddAssign for VirtualDuration {
    fn add_assign(&mut self, rhs: VirtualDuration) {
        self.micros += rhs.micros;
    }
}

impl Sub for VirtualInstant {
    type Output = VirtualDuration;
    fn sub(self, rhs: VirtualInstant) -> VirtualDuration {
        self.saturating_sub(rhs)
    }
}

/// Shared handle to simulated time. Cloning shares the underlying clock.
///
/// Only the single harness controller advances the clock; services and
/// scanner workers read it or pass explicit instants.
#[derive(Debug, Clone, Default)]
pub struct VirtualClock {
    micros: Arc<AtomicU64>,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(t: VirtualInstant) -> Self {
        let clock = Self::new();
        clock.advance_to(t);
        clock
    }

    pub fn now(&self) -> VirtualInstant {
        VirtualInstant::from_micros(self.micros.load(Ordering::Acquire))
    }

    pub fn advance(&self, d: VirtualDuration) {
        self.micros.fetch_add(d.micros(), Ordering::AcqRel);
    }

    /// Move forward to `t`; never goes backwards.
    pub fn advance_to(&self, t: VirtualInstant) {
        self.micros.fetch_max(t.micros(), Ordering::AcqRel);
    }
}
