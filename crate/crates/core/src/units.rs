//! Time and bandwidth units.
//!
//! Time is kept as integer picoseconds so that accumulation is exact and
//! independent of summation order. Bandwidths are `f64` bytes per second;
//! throughput prefixes are decimal (1 GB/s = 1e9 B/s), capacities binary.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};

pub const KIB: u64 = 1024;
pub const GB_PER_S: f64 = 1e9;
pub const MB_PER_S: f64 = 1e6;
pub const TB_PER_S: f64 = 1e12;

const PS_PER_NS: f64 = 1e3;
const PS_PER_S: f64 = 1e12;

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Time(u64);

impl Time {
    pub const ZERO: Time = Time(0);

    pub const fn from_ps(ps: u64) -> Self {
        Time(ps)
    }

    /// Rounds to the nearest picosecond; negative and NaN inputs clamp to zero.
    pub fn from_ns(ns: f64) -> Self {
        Self::from_ps_f64(ns * PS_PER_NS)
    }

    pub fn from_secs(s: f64) -> Self {
        Self::from_ps_f64(s * PS_PER_S)
    }

    fn from_ps_f64(ps: f64) -> Self {
        if ps.is_nan() || ps <= 0.0 {
            Time(0)
        } else if ps >= u64::MAX as f64 {
            Time(u64::MAX)
        } else {
            Time(ps.round() as u64)
        }
    }

    /// Time to move `bytes` at `rate` bytes per second.
    pub fn for_bytes(bytes: u64, rate: f64) -> Self {
        if bytes == 0 {
            return Time(0);
        }
        Self::from_ps_f64(bytes as f64 * PS_PER_S / rate)
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }

    pub fn as_ns(self) -> f64 {
        self.0 as f64 / PS_PER_NS
    }

    pub fn as_us(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / PS_PER_S
    }

    pub fn saturating_sub(self, other: Time) -> Time {
        Time(self.0.saturating_sub(other.0))
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0.saturating_add(rhs.0))
    }
}

impl AddAssign for Time {
    fn add_assign(&mut self, rhs: Time) {
        *self = *self + rhs;
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        self.saturating_sub(rhs)
    }
}

impl Mul<u64> for Time {
    type Output = Time;
    fn mul(self, rhs: u64) -> Time {
        Time(self.0.saturating_mul(rhs))
    }
}

impl Sum for Time {
    fn sum<I: Iterator<Item = Time>>(iter: I) -> Time {
        iter.fold(Time::ZERO, Add::add)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 >= 1_000_000 {
            write!(f, "{:.3} us", self.as_us())
        } else {
            write!(f, "{:.3} ns", self.as_ns())
        }
    }
}

/// Rational saturation curve `s / (s + s0)`: 0 at 0, strictly increasing, 1 in the limit.
pub fn saturation(bytes: f64, half_saturation: f64) -> f64 {
    if bytes <= 0.0 {
        0.0
    } else if half_saturation <= 0.0 || bytes.is_infinite() {
        1.0
    } else {
        bytes / (bytes + half_saturation)
    }
}
