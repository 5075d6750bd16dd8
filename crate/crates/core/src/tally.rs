//! Order-independent aggregation of per-prime records and the Wilson score
//! interval.

use crate::frobenius::FrobeniusRecord;
use crate::surfaces::ReductionStatus;

/// Two-sided 95% normal quantile.
pub const WILSON_Z95: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials`; `[0, 1]` when
/// there are no trials.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z * libm::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    let low = if successes == 0 { 0.0 } else { (centre - half).clamp(0.0, phat) };
    let high = if successes == trials { 1.0 } else { (centre + half).clamp(phat, 1.0) };
    (low, high)
}

/// `a2 / p` kept as an exact fraction so the minimum does not depend on
/// evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct A2OverP {
    pub a2: i64,
    pub p: u64,
}

impl A2OverP {
    pub fn value(self) -> f64 {
        self.a2 as f64 / self.p as f64
    }

    fn less_than(self, other: A2OverP) -> bool {
        let lhs = self.a2 as i128 * other.p as i128;
        let rhs = other.a2 as i128 * self.p as i128;
        lhs < rhs || (lhs == rhs && self.p < other.p)
    }
}

/// Counters over a set of primes. `add` and `merge` commute, so any
/// partition or ordering of the primes gives the same totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DensityCounters {
    pub good: u64,
    pub ordinary: u64,
    pub bad_disc: u64,
    pub bad_model: u64,
    pub excluded: u64,
    /// Good primes where the full `a2` was known.
    pub a2_known: u64,
    /// Good primes with `a2 < -2p`.
    pub a2_below_minus_2p: u64,
    /// Good primes where both the count and Cartier-Manin paths ran.
    pub manin_checked: u64,
    pub roots_checked: u64,
    pub min_a2_over_p: Option<A2OverP>,
}

impl DensityCounters {
    pub fn skipped(&self) -> u64 {
        self.bad_disc + self.bad_model + self.excluded
    }

    pub fn add(&mut self, rec: &FrobeniusRecord) {
        match rec.status {
            ReductionStatus::Good => {}
            ReductionStatus::BadDisc => {
                self.bad_disc += 1;
                return;
            }
            ReductionStatus::BadModel => {
                self.bad_model += 1;
                return;
            }
            ReductionStatus::Excluded => {
                self.excluded += 1;
                return;
            }
        }
        self.good += 1;
        if rec.ordinary == Some(true) {
            self.ordinary += 1;
        }
        if rec.roots_checked {
            self.roots_checked += 1;
        }
        if rec.hw_det.is_some() && rec.a2.is_some() {
            self.manin_checked += 1;
        }
        if let Some(a2) = rec.a2 {
            self.a2_known += 1;
            if (a2 as i128) < -2 * rec.p as i128 {
                self.a2_below_minus_2p += 1;
            }
            self.observe_min(Some(A2OverP { a2, p: rec.p }));
        }
    }

    fn observe_min(&mut self, candidate: Option<A2OverP>) {
        self.min_a2_over_p = match (self.min_a2_over_p, candidate) {
            (Some(a), Some(b)) => Some(if b.less_than(a) { b } else { a }),
            (a, b) => a.or(b),
        };
    }

    pub fn merge(mut self, other: DensityCounters) -> DensityCounters {
        self.good += other.good;
        self.ordinary += other.ordinary;
        self.bad_disc += other.bad_disc;
        self.bad_model += other.bad_model;
        self.excluded += other.excluded;
        self.a2_known += other.a2_known;
        self.a2_below_minus_2p += other.a2_below_minus_2p;
        self.manin_checked += other.manin_checked;
        self.roots_checked += other.roots_checked;
        self.observe_min(other.min_a2_over_p);
        self
    }

    pub fn wilson95(&self) -> (f64, f64) {
        wilson_interval(self.ordinary, self.good, WILSON_Z95)
    }
}
