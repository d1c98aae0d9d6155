use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Interval;
use crate::error::{Error, Result};
use crate::numeric::{uniform_grid, CompensatedSum};
use crate::seq::SequenceSpec;
use crate::shift::{log_power_error, LogScalar};

/// Breakpoints `a_0 < ... < a_{i0} <= hi` and multipliers
/// `beta_{i+1} = a_i^{-k_{n0+i}}` such that every `lambda` in block `i`
/// (i.e. `a_i <= lambda < a_{i+1}`, last block closed at `hi`) satisfies
/// `|lambda^{k_{n0+i}} beta_{i+1} - 1| < epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringPlan {
    pub interval: Interval,
    pub epsilon: f64,
    /// Label of the first term used (`n0`).
    pub start_index: u64,
    /// `i0 + 1`.
    pub block_count: usize,
    pub breakpoints: Vec<f64>,
    /// Exponent used by each block, `k_{n0+i}`.
    pub terms: Vec<u64>,
    /// Parent-sequence index of each block's exponent.
    pub indices: Vec<u64>,
    pub multipliers: Vec<LogScalar>,
}

impl CoveringPlan {
    pub fn last_block(&self) -> usize {
        self.block_count - 1
    }
}

/// Covering of `interval` along `k_{n0}, k_{n0+1}, ...` of `seq`.
pub fn build_covering(
    interval: Interval,
    epsilon: f64,
    seq: &SequenceSpec,
    start_index: u64,
) -> Result<CoveringPlan> {
    if start_index == 0 || start_index > seq.horizon() {
        return Err(Error::HorizonExceeded {
            index: start_index,
            horizon: seq.horizon(),
        });
    }
    let indices: Vec<u64> = (start_index..=seq.horizon()).collect();
    // Materialize lazily: coverings usually stop long before the horizon.
    build_covering_lazy(interval, epsilon, start_index, |i| {
        indices
            .get(i)
            .map(|&n| (n, seq.materialize(n).expect("index within horizon")))
    })
}

/// Covering along an explicit list of exponents; `indices[i]` labels `terms[i]`.
pub fn build_covering_over_terms(
    interval: Interval,
    epsilon: f64,
    terms: &[u64],
    indices: &[u64],
) -> Result<CoveringPlan> {
    if terms.len() != indices.len() {
        return Err(Error::InvalidParameter("terms and indices differ in length".into()));
    }
    let start = *indices
        .first()
        .ok_or_else(|| Error::InsufficientHorizon("no terms supplied".into()))?;
    build_covering_lazy(interval, epsilon, start, |i| {
        terms.get(i).map(|&k| (indices[i], k))
    })
}

fn build_covering_lazy(
    interval: Interval,
    epsilon: f64,
    start_index: u64,
    mut term_at: impl FnMut(usize) -> Option<(u64, u64)>,
) -> Result<CoveringPlan> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let ln_growth = epsilon.ln_1p();
    let ln_span = (interval.hi() / interval.lo()).ln();
    let (_, first) = term_at(0).ok_or_else(|| Error::InsufficientHorizon("no terms supplied".into()))?;
    let threshold = ln_growth / ln_span;
    if (first as f64) <= threshold {
        return Err(Error::InvalidStart {
            start_index,
            term: first,
            threshold,
        });
    }

    let lo = interval.lo();
    let mut breakpoints = Vec::new();
    let mut terms = Vec::new();
    let mut indices = Vec::new();
    let mut multipliers = Vec::new();
    let mut exponent_sum = CompensatedSum::new();
    let mut i = 0usize;
    loop {
        let (n, k) = term_at(i).ok_or_else(|| {
            Error::InsufficientHorizon(format!(
                "terms exhausted after {i} blocks; covered up to {}",
                breakpoints.last().copied().unwrap_or(lo)
            ))
        })?;
        let a_i = if i == 0 {
            lo
        } else {
            lo * (ln_growth * exponent_sum.value()).exp()
        };
        breakpoints.push(a_i);
        terms.push(k);
        indices.push(n);
        multipliers.push(LogScalar::from_ln(-(k as f64) * a_i.ln()));
        exponent_sum.add(1.0 / k as f64);
        if ln_growth * exponent_sum.value() > ln_span {
            break;
        }
        i += 1;
    }
    Ok(CoveringPlan {
        interval,
        epsilon,
        start_index,
        block_count: breakpoints.len(),
        breakpoints,
        terms,
        indices,
        multipliers,
    })
}

/// Largest `i` with `a_i <= lambda`; a breakpoint belongs to the block it starts.
pub fn locate_block(plan: &CoveringPlan, lambda: f64) -> Result<usize> {
    if !plan.interval.contains(lambda) {
        return Err(Error::OutsideInterval {
            lambda,
            lo: plan.interval.lo(),
            hi: plan.interval.hi(),
        });
    }
    Ok(plan.breakpoints.partition_point(|&a| a <= lambda) - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringGridRow {
    pub lambda: f64,
    pub block: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringGridReport {
    pub grid_size: usize,
    pub max_error: f64,
    pub argmax_lambda: f64,
    pub pass: bool,
    #[serde(skip)]
    pub rows: Vec<CoveringGridRow>,
}

/// Evaluates the assigned block's error on a uniform grid with both endpoints.
pub fn verify_covering(plan: &CoveringPlan, grid_size: usize) -> Result<CoveringGridReport> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter("grid size must be at least 2".into()));
    }
    let grid = uniform_grid(plan.interval.lo(), plan.interval.hi(), grid_size);
    let rows = grid
        .par_iter()
        .map(|&lambda| {
            let block = locate_block(plan, lambda)?;
            let error = log_power_error(lambda, plan.terms[block], &plan.multipliers[block])?;
            Ok(CoveringGridRow { lambda, block, error })
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut max_error, mut argmax_lambda) = (f64::NEG_INFINITY, f64::NAN);
    for r in &rows {
        if r.error > max_error {
            max_error = r.error;
            argmax_lambda = r.lambda;
        }
    }
    Ok(CoveringGridReport {
        grid_size,
        max_error,
        argmax_lambda,
        pass: max_error < plan.epsilon,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_plan() -> CoveringPlan {
        let seq = SequenceSpec::linear(1, 0, 100).unwrap();
        build_covering(Interval::new(2.0, 4.0).unwrap(), 0.5, &seq, 1).unwrap()
    }

    #[test]
    fn worked_example_breakpoints() {
        let plan = example_plan();
        assert_eq!(plan.block_count, 3);
        assert_eq!(plan.breakpoints[0], 2.0);
        assert!((plan.breakpoints[1] - 3.0).abs() < 1e-14);
        assert!((plan.breakpoints[2] - 2.0 * 1.5f64.powf(1.5)).abs() < 1e-14);
        assert_eq!(plan.terms, vec![1, 2, 3]);
        assert!((plan.multipliers[0].ln_abs - (-2.0f64.ln())).abs() < 1e-15);
        assert!((plan.multipliers[1].ln_abs - (-2.0 * 3.0f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn locate_block_ties_and_endpoints() {
        let plan = example_plan();
        assert_eq!(locate_block(&plan, 2.0).unwrap(), 0);
        assert_eq!(locate_block(&plan, 4.0).unwrap(), 2);
        assert_eq!(locate_block(&plan, plan.breakpoints[1]).unwrap(), 1);
        assert!(locate_block(&plan, 4.0001).is_err());
        assert!(locate_block(&plan, 1.9).is_err());
    }

    #[test]
    fn anchors_are_exact() {
        let plan = example_plan();
        for i in 0..plan.block_count {
            let e = log_power_error(plan.breakpoints[i], plan.terms[i], &plan.multipliers[i]).unwrap();
            assert_eq!(e, 0.0);
        }
    }

    #[test]
    fn invalid_start_and_epsilon() {
        let seq = SequenceSpec::linear(1, 0, 100).unwrap();
        let narrow = Interval::new(2.0, 2.01).unwrap();
        // ln(1.5)/ln(1.005) ~ 81.3
        assert!(matches!(
            build_covering(narrow, 0.5, &seq, 1),
            Err(Error::InvalidStart { .. })
        ));
        assert!(build_covering(narrow, 0.5, &seq, 82).is_ok());
        assert!(build_covering(Interval::new(2.0, 4.0).unwrap(), 1.5, &seq, 1).is_err());
    }

    #[test]
    fn geometric_cannot_bridge() {
        // sum 2^{-n} <= 1 so ln(1.5) * sum < ln 2
        let seq = SequenceSpec::geometric(2, 40).unwrap();
        assert!(matches!(
            build_covering(Interval::new(2.0, 4.0).unwrap(), 0.5, &seq, 1),
            Err(Error::InsufficientHorizon(_))
        ));
    }

    #[test]
    fn grid_report_endpoints() {
        let plan = example_plan();
        let r = verify_covering(&plan, 2).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].lambda, 2.0);
        assert_eq!(r.rows[1].lambda, 4.0);
        assert!(verify_covering(&plan, 1).is_err());
    }
}
