use serde::{Deserialize, Serialize};

use super::verify::{verify_certificate, VerificationReport};
use super::EpsilonCondition;
use crate::covering::{build_covering_over_terms, CoveringPlan};
use crate::error::{Error, Result};
use crate::numeric::MIN_NORMAL_LN;
use crate::seq::{extract_gapped_subsequence, SequenceSpec};
use crate::shift::FiniteVector;

/// Everything needed to rebuild the vector from the condition, the center
/// and the sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub v0: u64,
    pub v1: u64,
    /// `max_j |q_j|`.
    pub m1: f64,
    /// `ln(2 s^2 M1^2 v0 / (1 - 1/a0)) / (2 ln a0)`.
    pub m2: f64,
    /// Required gap between consecutive subsequence terms, `max(M2, v0)`.
    pub gap_floor: f64,
    pub gap_residue: u64,
    pub gap_block_size: u64,
    /// `1/(sqrt(2 v0) s M1)` before clamping into `(0, 1)`.
    pub epsilon_1_raw: f64,
    /// Tolerance actually used by the covering.
    pub epsilon_1: f64,
    /// Lower bounds the first block position must exceed: support of the
    /// center, covering start condition, and center distance.
    pub start_thresholds: [f64; 3],
    /// 1-based position of the first block within the gapped subsequence.
    pub v2: u64,
    pub plan: CoveringPlan,
    /// `ln(v0 M1^2 a0^{-2 mu_first} / (1 - 1/a0))`.
    pub center_bound_ln: f64,
    /// `ln(v0 M1^2 / (1 - 1/a0) * a0^{-2(mu_{i+1} - mu_i)})` for each non-final block.
    pub block_tail_bounds_ln: Vec<f64>,
}

impl ConstructionParams {
    /// `i0`, the index of the last block.
    pub fn last_block(&self) -> usize {
        self.plan.last_block()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxCertificate {
    pub condition: EpsilonCondition,
    pub sequence: SequenceSpec,
    pub center: FiniteVector,
    pub center_radius: f64,
    pub vector: FiniteVector,
    /// Sequence index `m0`; the grid check minimizes over `v <= m0`.
    pub cutoff: u64,
    pub params: Option<ConstructionParams>,
    pub grid_report: VerificationReport,
}

/// Builds `x0` near `center` with `min_{v <= m0} ||(lambda B)^{k_v} x0 - y|| < 1/s`
/// for every `lambda` in the condition's interval.
///
/// `x0` copies the center, then places blocks `beta_{i+1} q_j` at positions
/// `mu_i + j` along a gapped subsequence `mu` of the sequence, with `beta`
/// from a multiplicative covering of the interval.
pub fn construct_block_vector(
    condition: &EpsilonCondition,
    center: &FiniteVector,
    center_radius: f64,
    seq: &SequenceSpec,
    grid_size: usize,
) -> Result<ApproxCertificate> {
    condition.validate()?;
    if !(center_radius > 0.0 && center_radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "center radius must be positive, got {center_radius}"
        )));
    }
    let a0 = condition.interval.lo();
    let b0 = condition.interval.hi();
    let ln_a0 = a0.ln();
    let ln_s = -condition.accuracy.ln();
    let v0 = condition.target_len();
    let v1 = center.support_max();
    let m1 = condition.target_max_abs();
    // ln(1 - 1/a0) without cancellation for a0 near 1
    let ln_one_minus_inv = (-(-ln_a0).exp_m1()).ln();
    let ln_v0_m1 = (v0 as f64).ln() + 2.0 * m1.ln() - ln_one_minus_inv;

    let m2 = (2f64.ln() + 2.0 * ln_s + ln_v0_m1) / (2.0 * ln_a0);
    let gap_floor = m2.max(v0 as f64);
    let gap = extract_gapped_subsequence(seq, gap_floor, seq.horizon())?;

    let epsilon_1_raw = condition.accuracy / ((2.0 * v0 as f64).sqrt() * m1);
    // A smaller tolerance only tightens the head estimate.
    let epsilon_1 = if epsilon_1_raw < 1.0 { epsilon_1_raw } else { 0.5 };

    let start_thresholds = [
        v1 as f64 + 1.0,
        epsilon_1.ln_1p() / (b0 / a0).ln(),
        (ln_v0_m1 - 2.0 * center_radius.ln()) / (2.0 * ln_a0),
    ];
    let v2 = gap
        .terms
        .iter()
        .position(|&mu| start_thresholds.iter().all(|&t| mu as f64 > t))
        .ok_or_else(|| {
            Error::InsufficientHorizon(format!(
                "no subsequence term up to the horizon exceeds {:?}",
                start_thresholds
            ))
        })?;
    let plan = build_covering_over_terms(
        condition.interval,
        epsilon_1,
        &gap.terms[v2..],
        &gap.indices[v2..],
    )?;
    let cutoff = *plan.indices.last().expect("plan has at least one block");
    if let Some(m) = condition.cutoff {
        if cutoff > m {
            return Err(Error::InsufficientHorizon(format!(
                "covering needs index {cutoff}, beyond the condition's cutoff {m}"
            )));
        }
    }

    let mut vector = center.clone();
    for (block, &mu) in plan.terms.iter().enumerate() {
        let beta = plan.multipliers[block];
        for (j, q) in condition.target.iter() {
            let ln_abs = beta.ln_abs + q.norm().ln();
            if ln_abs < MIN_NORMAL_LN {
                return Err(Error::Underflow { log_magnitude: ln_abs });
            }
            vector.set(mu + j, q * beta.ln_abs.exp());
        }
    }

    let center_bound_ln = ln_v0_m1 - 2.0 * plan.terms[0] as f64 * ln_a0;
    let block_tail_bounds_ln = plan
        .terms
        .windows(2)
        .map(|w| ln_v0_m1 - 2.0 * (w[1] - w[0]) as f64 * ln_a0)
        .collect();
    let params = ConstructionParams {
        v0,
        v1,
        m1,
        m2,
        gap_floor,
        gap_residue: gap.residue,
        gap_block_size: gap.block_size,
        epsilon_1_raw,
        epsilon_1,
        start_thresholds,
        v2: v2 as u64 + 1,
        plan,
        center_bound_ln,
        block_tail_bounds_ln,
    };

    let mut cert = ApproxCertificate {
        condition: condition.clone(),
        sequence: seq.clone(),
        center: center.clone(),
        center_radius,
        vector,
        cutoff,
        params: Some(params),
        grid_report: placeholder_report(),
    };
    let report = verify_certificate(&cert, grid_size)?;
    if report.max_error >= condition.accuracy {
        return Err(Error::ConstructionInvariantViolated {
            lambda: report.argmax_lambda,
            error: report.max_error,
            accuracy: condition.accuracy,
        });
    }
    if !report.pass {
        return Err(Error::InvariantViolated(format!(
            "constructed vector lies at distance {} from the center, radius {}",
            report.center_distance, center_radius
        )));
    }
    cert.grid_report = report;
    Ok(cert)
}

fn placeholder_report() -> VerificationReport {
    VerificationReport {
        grid_size: 0,
        cutoff: 0,
        max_error: f64::NAN,
        argmax_lambda: f64::NAN,
        margin: f64::NAN,
        center_distance: f64::NAN,
        center_distance_sqr_ln: f64::NAN,
        overflow_events: 0,
        pass: false,
        analytic: None,
        rows: Vec::new(),
    }
}
