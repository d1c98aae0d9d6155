//! Multiplicative interval coverings, the sets `{lambda : |lambda^N z - 1| < eps}`
//! and the measure-based nonexistence certificate for convergent `sum 1/k_n`.

mod gset;
mod nonexist;
mod plan;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gset::{empirical_coverage, g_set_interval, g_set_measure_bound, union_measure, Span};
pub use nonexist::{nonexistence_certificate, NonexistenceCertificate};
pub use plan::{
    build_covering, build_covering_over_terms, locate_block, verify_covering, CoveringGridReport,
    CoveringGridRow, CoveringPlan,
};

/// Closed interval `[lo, hi]` with `1 < lo < hi < inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && 1.0 < lo && lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}
