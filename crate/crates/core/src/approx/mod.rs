//! Finite-support vectors whose scaled-shift orbits approximate a target
//! uniformly over an interval of scalars, with grid-verified certificates.

mod common;
mod construct;
mod verify;

use serde::{Deserialize, Serialize};

use crate::covering::Interval;
use crate::error::{Error, Result};
use crate::shift::FiniteVector;

pub use common::{build_common_vector, CommonVectorResult, StageRecord};
pub use construct::{construct_block_vector, ApproxCertificate, ConstructionParams};
pub(crate) use verify::OrbitEvaluator;
pub use verify::{
    ln_distance_sqr, orbit_distance, verify_against, verify_certificate, AnalyticChecks,
    VerificationReport, VerificationRow,
};

/// Default number of grid points for certificate verification.
pub const DEFAULT_GRID: usize = 1000;

/// "For every `lambda` in `interval` some `v <= cutoff` has
/// `||(lambda B)^{k_v} x - target|| < accuracy`."
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonCondition {
    pub target: FiniteVector,
    pub interval: Interval,
    /// `1/s`.
    pub accuracy: f64,
    /// Largest admissible sequence index `m`; unbounded when absent.
    #[serde(default)]
    pub cutoff: Option<u64>,
}

impl EpsilonCondition {
    pub fn new(target: FiniteVector, interval: Interval, accuracy: f64) -> Result<Self> {
        let c = EpsilonCondition {
            target,
            interval,
            accuracy,
            cutoff: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_cutoff(mut self, cutoff: u64) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.target.is_zero() {
            return Err(Error::InvalidParameter("target must be nonzero".into()));
        }
        if !(self.accuracy > 0.0 && self.accuracy.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "accuracy must be positive, got {}",
                self.accuracy
            )));
        }
        if self.cutoff == Some(0) {
            return Err(Error::InvalidParameter("cutoff must be at least 1".into()));
        }
        Ok(())
    }

    /// Length `v0` of the target's support prefix.
    pub fn target_len(&self) -> u64 {
        self.target.support_max()
    }

    /// `max_j |q_j|`.
    pub fn target_max_abs(&self) -> f64 {
        self.target.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max)
    }
}
