use serde::{Deserialize, Serialize};

use super::construct::{construct_block_vector, ApproxCertificate};
use super::verify::{verify_against, VerificationReport};
use super::EpsilonCondition;
use crate::error::{Error, Result};
use crate::numeric::softplus;
use crate::seq::SequenceSpec;
use crate::shift::FiniteVector;

/// Relative safety factor applied to every margin guard, in log units.
const GUARD_SLACK_LN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    /// `ln` of the perturbation budget granted by earlier conditions
    /// (absent for the first stage).
    pub guard_ln: Option<f64>,
    /// Condition (0-based) that set the guard, if any.
    pub binding: Option<usize>,
    pub radius: f64,
    /// Margins `accuracy - max_error` of conditions `0..=stage` after this stage.
    pub margins: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonVectorResult {
    pub initial: FiniteVector,
    pub vector: FiniteVector,
    pub certificates: Vec<ApproxCertificate>,
    pub stages: Vec<StageRecord>,
    /// Every certificate re-checked against the final vector.
    pub final_reports: Vec<VerificationReport>,
}

impl CommonVectorResult {
    pub fn all_pass(&self) -> bool {
        self.final_reports.iter().all(|r| r.pass && r.margin > 0.0)
    }
}

/// Greedy finite-stage version of the residuality argument: each condition
/// is met by a block vector built around the current vector, inside a ball
/// small enough that no earlier condition can lose its margin.
///
/// A perturbation `d` moves every orbit point `(lambda B)^{k_v} x` by at most
/// `lambda^{k_v} ||d||`, so condition `u` tolerates
/// `(accuracy_u - error_u) / (1 + hi_u^{k_{m_u}})`. Its center ball must also
/// survive, which caps the perturbation by `radius_u - ||x - center_u||`.
pub fn build_common_vector(
    conditions: &[EpsilonCondition],
    seq: &SequenceSpec,
    initial: &FiniteVector,
    requested_radius: f64,
    grid_size: usize,
) -> Result<CommonVectorResult> {
    if !(requested_radius > 0.0 && requested_radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {requested_radius}"
        )));
    }
    let mut vector = initial.clone();
    let mut certificates: Vec<ApproxCertificate> = Vec::new();
    let mut reports: Vec<VerificationReport> = Vec::new();
    let mut stages = Vec::new();

    for (stage, condition) in conditions.iter().enumerate() {
        let mut guard_ln = f64::INFINITY;
        let mut binding = None;
        for (u, (cert, report)) in certificates.iter().zip(&reports).enumerate() {
            let amplification = cert.cutoff_term()? as f64 * cert.condition.interval.hi().ln();
            let error_room = report.margin.ln() - softplus(amplification);
            let center_room = center_room_ln(cert, report);
            let room = error_room.min(center_room) - GUARD_SLACK_LN;
            if room < guard_ln {
                guard_ln = room;
                binding = Some(u);
            }
        }
        let radius = requested_radius.min(guard_ln.exp());
        if !(radius >= f64::MIN_POSITIVE) {
            return Err(Error::StageInfeasible {
                stage,
                blocking: binding.unwrap_or(0),
            });
        }

        let cert = construct_block_vector(condition, &vector, radius, seq, grid_size)?;
        vector = cert.vector.clone();
        certificates.push(cert);

        reports = certificates
            .iter()
            .map(|c| recheck(c, &vector, grid_size))
            .collect::<Result<_>>()?;
        if let Some((u, r)) = reports.iter().enumerate().find(|(_, r)| !(r.pass && r.margin > 0.0)) {
            return Err(Error::InvariantViolated(format!(
                "condition {u} fails after stage {stage}: error {} (accuracy {}), center distance {}",
                r.max_error, conditions[u].accuracy, r.center_distance
            )));
        }
        stages.push(StageRecord {
            stage,
            guard_ln: binding.map(|_| guard_ln),
            binding,
            radius,
            margins: reports.iter().map(|r| r.margin).collect(),
        });
    }

    Ok(CommonVectorResult {
        initial: initial.clone(),
        vector,
        certificates,
        stages,
        final_reports: reports,
    })
}

/// `ln(radius - ||x - center||)`.
fn center_room_ln(cert: &ApproxCertificate, report: &VerificationReport) -> f64 {
    let r_ln = cert.center_radius.ln();
    let d_ln = 0.5 * report.center_distance_sqr_ln;
    // ln(r - d) = ln r + ln(1 - d/r)
    r_ln + (-(d_ln - r_ln).exp()).ln_1p()
}

fn recheck(cert: &ApproxCertificate, vector: &FiniteVector, grid_size: usize) -> Result<VerificationReport> {
    verify_against(
        vector,
        &cert.condition,
        &cert.sequence,
        cert.cutoff,
        &cert.center,
        cert.center_radius,
        grid_size,
    )
}

impl ApproxCertificate {
    /// `k_{m0}`.
    pub fn cutoff_term(&self) -> Result<u64> {
        self.sequence.materialize(self.cutoff)
    }
}
