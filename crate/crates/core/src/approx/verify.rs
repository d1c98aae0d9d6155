use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::construct::{ApproxCertificate, ConstructionParams};
use super::EpsilonCondition;
use crate::covering::locate_block;
use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, uniform_grid, CompensatedSum, OVERFLOW_LN};
use crate::seq::SequenceSpec;
use crate::shift::{log_power_error, FiniteVector};

/// Relative slack allowed when comparing a computed tail against its bound.
const TAIL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationRow {
    pub lambda: f64,
    /// Smallest index attaining the minimum; `None` if every index overflowed.
    pub best_v: Option<u64>,
    pub error: f64,
}

/// Per-block inequalities of the construction, evaluated numerically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticChecks {
    /// `ln(v0 M1^2 a0^{-2 mu_first} / (1 - 1/a0))`.
    pub center_bound_ln: f64,
    /// Center bound below `radius^2`, and the actual squared distance below it.
    pub center_bound_holds: bool,
    /// `ln(v0 M1^2 / (1 - 1/a0) * a0^{-2(mu_{i+1} - mu_i)})` per non-final block.
    pub block_tail_bounds_ln: Vec<f64>,
    /// Every block tail bound is below `1/(2 s^2)`.
    pub tail_bounds_below_half: bool,
    /// At every grid point the assigned block's head sum is below `1/(2 s^2)`.
    pub head_holds: bool,
    /// At every grid point the assigned block's tail is within its bound.
    pub tail_within_bound: bool,
    /// Max over grid points and entries of
    /// `| |lambda^mu x_{mu+j} - q_j| - |lambda^mu beta - 1| |q_j| |`.
    pub head_identity_max_dev: f64,
    pub head_identity_holds: bool,
    /// Max over grid points of the assigned block's orbit distance.
    pub assigned_max_error: f64,
    pub all_hold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub grid_size: usize,
    pub cutoff: u64,
    pub max_error: f64,
    pub argmax_lambda: f64,
    /// `accuracy - max_error`.
    pub margin: f64,
    pub center_distance: f64,
    /// `ln ||x - center||^2`; stays finite where `center_distance` underflows.
    #[serde(with = "crate::numeric::extended_f64")]
    pub center_distance_sqr_ln: f64,
    /// `(lambda, v)` pairs skipped because a magnitude left the f64 range.
    pub overflow_events: u64,
    pub pass: bool,
    pub analytic: Option<AnalyticChecks>,
    #[serde(skip)]
    pub rows: Vec<VerificationRow>,
}

/// Sorted view of a vector with log-domain suffix sums of `|x_i|^2`.
pub(crate) struct OrbitEvaluator {
    indices: Vec<u64>,
    values: Vec<Complex64>,
    ln_abs: Vec<f64>,
    /// `suffix_ln[t] = ln sum_{s >= t} |x_s|^2`.
    suffix_ln: Vec<f64>,
}

impl OrbitEvaluator {
    pub(crate) fn new(x: &FiniteVector) -> Self {
        let (indices, values): (Vec<u64>, Vec<Complex64>) = x.iter().unzip();
        let ln_abs: Vec<f64> = values.iter().map(|z| z.norm().ln()).collect();
        let mut suffix_ln = vec![f64::NEG_INFINITY; indices.len() + 1];
        for t in (0..indices.len()).rev() {
            suffix_ln[t] = log_add_exp(2.0 * ln_abs[t], suffix_ln[t + 1]);
        }
        OrbitEvaluator {
            indices,
            values,
            ln_abs,
            suffix_ln,
        }
    }

    pub(crate) fn support_max(&self) -> u64 {
        self.indices.last().copied().unwrap_or(0)
    }

    /// `ln sum_{i > p} |x_i|^2`.
    fn tail_ln(&self, p: u64) -> f64 {
        self.suffix_ln[self.indices.partition_point(|&i| i <= p)]
    }

    /// `||(lambda B)^k x - y||`, or `None` when a magnitude leaves the f64 range.
    pub(crate) fn distance(&self, ln_lambda: f64, k: u64, target: &[Complex64]) -> Option<f64> {
        let v0 = target.len() as u64;
        let shift_ln = k as f64 * ln_lambda;
        let mut head = CompensatedSum::new();
        let mut t = self.indices.partition_point(|&i| i <= k);
        for (j, q) in target.iter().enumerate() {
            let pos = k + j as u64 + 1;
            let w = if t < self.indices.len() && self.indices[t] == pos {
                let e = shift_ln + self.ln_abs[t];
                if e > OVERFLOW_LN / 2.0 {
                    return None;
                }
                let z = self.values[t];
                t += 1;
                (z / z.norm()) * e.exp()
            } else {
                Complex64::new(0.0, 0.0)
            };
            head.add((w - q).norm_sqr());
        }
        let tail_ln = self.tail_ln(k + v0);
        let tail = if tail_ln == f64::NEG_INFINITY {
            0.0
        } else {
            let e = 2.0 * shift_ln + tail_ln;
            if e > OVERFLOW_LN {
                return None;
            }
            e.exp()
        };
        Some((head.value() + tail).sqrt())
    }
}

fn dense_target(target: &FiniteVector) -> Vec<Complex64> {
    (1..=target.support_max()).map(|j| target.get(j)).collect()
}

/// `||(lambda B)^k x - y||` via the log-domain evaluator.
pub fn orbit_distance(x: &FiniteVector, lambda: f64, k: u64, y: &FiniteVector) -> Result<f64> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must exceed 1, got {lambda}")));
    }
    OrbitEvaluator::new(x)
        .distance(lambda.ln(), k, &dense_target(y))
        .ok_or(Error::Overflow {
            log_magnitude: f64::INFINITY,
            threshold: OVERFLOW_LN,
        })
}

/// `ln ||x - y||^2`, exact over the union of supports even when the squares
/// underflow.
pub fn ln_distance_sqr(x: &FiniteVector, y: &FiniteVector) -> f64 {
    x.sub(y)
        .iter()
        .fold(f64::NEG_INFINITY, |acc, (_, z)| log_add_exp(acc, 2.0 * z.norm().ln()))
}

/// Grid check of `condition` for an arbitrary vector: at each grid point the
/// minimum over `v <= cutoff` of the orbit distance, plus the distance to
/// `center`.
pub fn verify_against(
    vector: &FiniteVector,
    condition: &EpsilonCondition,
    seq: &SequenceSpec,
    cutoff: u64,
    center: &FiniteVector,
    center_radius: f64,
    grid_size: usize,
) -> Result<VerificationReport> {
    verify_inner(vector, condition, seq, cutoff, center, center_radius, grid_size, None)
}

/// Re-runs the grid check recorded in `cert`, and the analytic block
/// inequalities when construction parameters are present.
pub fn verify_certificate(cert: &ApproxCertificate, grid_size: usize) -> Result<VerificationReport> {
    verify_inner(
        &cert.vector,
        &cert.condition,
        &cert.sequence,
        cert.cutoff,
        &cert.center,
        cert.center_radius,
        grid_size,
        cert.params.as_ref(),
    )
}

struct PointResult {
    row: VerificationRow,
    overflows: u64,
    head_ok: bool,
    tail_ok: bool,
    identity_dev: f64,
    assigned: f64,
}

#[allow(clippy::too_many_arguments)]
fn verify_inner(
    vector: &FiniteVector,
    condition: &EpsilonCondition,
    seq: &SequenceSpec,
    cutoff: u64,
    center: &FiniteVector,
    center_radius: f64,
    grid_size: usize,
    params: Option<&ConstructionParams>,
) -> Result<VerificationReport> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter("grid size must be at least 2".into()));
    }
    condition.validate()?;
    let terms = seq.terms_up_to(cutoff)?;
    let eval = OrbitEvaluator::new(vector);
    let target = dense_target(&condition.target);
    let target_norm = condition.target.norm();
    let support_max = eval.support_max();
    // Indices whose shift clears the support all give `||y||`; only the first matters.
    let live = terms.partition_point(|&k| k < support_max);
    let grid = uniform_grid(condition.interval.lo(), condition.interval.hi(), grid_size);
    let half_bound = 0.5 * condition.accuracy * condition.accuracy;

    let points: Vec<PointResult> = grid
        .par_iter()
        .map(|&lambda| {
            let ln_lambda = lambda.ln();
            let mut best: Option<(u64, f64)> = None;
            let mut overflows = 0;
            for (t, &k) in terms[..live].iter().enumerate() {
                match eval.distance(ln_lambda, k, &target) {
                    Some(d) if best.is_none_or(|(_, b)| d < b) => best = Some((t as u64 + 1, d)),
                    Some(_) => {}
                    None => overflows += 1,
                }
            }
            if live < terms.len() && best.is_none_or(|(_, b)| target_norm < b) {
                best = Some((live as u64 + 1, target_norm));
            }
            let mut point = PointResult {
                row: VerificationRow {
                    lambda,
                    best_v: best.map(|b| b.0),
                    error: best.map_or(f64::INFINITY, |b| b.1),
                },
                overflows,
                head_ok: true,
                tail_ok: true,
                identity_dev: 0.0,
                assigned: 0.0,
            };
            if let Some(p) = params {
                block_checks(p, &eval, condition, lambda, half_bound, &mut point);
            }
            point
        })
        .collect();

    let mut max_error = f64::NEG_INFINITY;
    let mut argmax_lambda = f64::NAN;
    let mut overflow_events = 0;
    for p in &points {
        overflow_events += p.overflows;
        if p.row.error > max_error {
            max_error = p.row.error;
            argmax_lambda = p.row.lambda;
        }
    }
    let max_error = max_error.min(f64::MAX);

    let center_distance_sqr_ln = ln_distance_sqr(vector, center);
    let center_ok = center_distance_sqr_ln < 2.0 * center_radius.ln();
    let pass = max_error < condition.accuracy && center_ok;

    let analytic = params.map(|p| {
        let head_holds = points.iter().all(|q| q.head_ok);
        let tail_within_bound = points.iter().all(|q| q.tail_ok);
        let head_identity_max_dev = points.iter().map(|q| q.identity_dev).fold(0.0, f64::max);
        let assigned_max_error = points.iter().map(|q| q.assigned).fold(0.0, f64::max);
        let center_bound_holds = p.center_bound_ln < 2.0 * center_radius.ln()
            && center_distance_sqr_ln <= p.center_bound_ln + TAIL_SLACK;
        let tail_bounds_below_half = p.block_tail_bounds_ln.iter().all(|&b| b < half_bound.ln());
        let head_identity_holds = head_identity_max_dev <= 1e-10;
        AnalyticChecks {
            center_bound_ln: p.center_bound_ln,
            center_bound_holds,
            block_tail_bounds_ln: p.block_tail_bounds_ln.clone(),
            tail_bounds_below_half,
            head_holds,
            tail_within_bound,
            head_identity_max_dev,
            head_identity_holds,
            assigned_max_error,
            all_hold: center_bound_holds
                && tail_bounds_below_half
                && head_holds
                && tail_within_bound
                && head_identity_holds
                && assigned_max_error < condition.accuracy,
        }
    });

    Ok(VerificationReport {
        grid_size,
        cutoff,
        max_error,
        argmax_lambda,
        margin: condition.accuracy - max_error,
        center_distance: (0.5 * center_distance_sqr_ln).exp(),
        center_distance_sqr_ln,
        overflow_events,
        pass,
        analytic,
        rows: points.into_iter().map(|p| p.row).collect(),
    })
}

/// Head/tail split at the block assigned to `lambda` by the covering.
fn block_checks(
    p: &ConstructionParams,
    eval: &OrbitEvaluator,
    condition: &EpsilonCondition,
    lambda: f64,
    half_bound: f64,
    out: &mut PointResult,
) {
    let Ok(block) = locate_block(&p.plan, lambda) else {
        out.head_ok = false;
        out.tail_ok = false;
        return;
    };
    let mu = p.plan.terms[block];
    let beta = &p.plan.multipliers[block];
    let ln_lambda = lambda.ln();
    let v0 = p.v0;

    let factor = log_power_error(lambda, mu, beta).unwrap_or(f64::INFINITY);
    let mut head = CompensatedSum::new();
    for j in 1..=v0 {
        let q = condition.target.get(j);
        let x = eval_entry(eval, mu + j);
        let w = if x == Complex64::new(0.0, 0.0) {
            x
        } else {
            (x / x.norm()) * (mu as f64 * ln_lambda + x.norm().ln()).exp()
        };
        let direct = (w - q).norm();
        head.add(direct * direct);
        let formula = factor * q.norm();
        let dev = (direct - formula).abs();
        if dev > out.identity_dev || dev.is_nan() {
            out.identity_dev = if dev.is_nan() { f64::INFINITY } else { dev };
        }
    }
    let head = head.value();
    out.head_ok = head < half_bound;

    let tail_ln = 2.0 * mu as f64 * ln_lambda + eval.tail_ln(mu + v0);
    let bound_ln = p
        .block_tail_bounds_ln
        .get(block)
        .copied()
        .unwrap_or(f64::NEG_INFINITY);
    out.tail_ok = if bound_ln == f64::NEG_INFINITY {
        // Last block: nothing of this construction lies beyond it.
        tail_ln == f64::NEG_INFINITY || tail_ln < half_bound.ln()
    } else {
        tail_ln <= bound_ln + TAIL_SLACK
    };
    let tail = if tail_ln > OVERFLOW_LN { f64::INFINITY } else { tail_ln.exp() };
    out.assigned = (head + tail).sqrt();
}

fn eval_entry(eval: &OrbitEvaluator, index: u64) -> Complex64 {
    match eval.indices.binary_search(&index) {
        Ok(t) => eval.values[t],
        Err(_) => Complex64::new(0.0, 0.0),
    }
}
