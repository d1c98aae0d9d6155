use serde::{Deserialize, Serialize};

use super::Interval;
use crate::error::{Error, Result};
use crate::numeric::{ln_ratio, CompensatedSum};
use crate::seq::{reciprocal_partial_sum, SequenceSpec, SeriesClass};

/// Evaluated inequality chain showing that the sets
/// `G_v = {lambda : |lambda^{k_v} x_{k_v+1} - 1| < eps_1}`, `v >= N0`, cannot
/// cover `[mu0, M0]` for any vector `x` when `sum 1/k_n < inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceCertificate {
    pub interval: Interval,
    pub sequence: SequenceSpec,
    /// `sum_{n <= horizon} 1/k_n`.
    pub sigma_horizon: f64,
    /// Closed-form bound on `sum_{n > horizon} 1/k_n`.
    pub sigma_tail_bound: f64,
    /// `sigma_horizon + sigma_tail_bound`, an upper bound on the full series.
    pub sigma_0: f64,
    pub delta_0: f64,
    pub epsilon_0: f64,
    pub epsilon_1: f64,
    pub n0: u64,
    /// `(1 + eps0)/(1 - eps0) < exp(delta0/M0)`.
    pub ratio_below_exp: bool,
    /// `((1 + eps1)/(1 - eps1))^{1/k_v} - 1 < delta0/(M0 k_v)` for every
    /// materialized `v >= N0`.
    pub per_term_bound_holds: bool,
    /// `M0 * sum_{v >= N0} (((1+eps1)/(1-eps1))^{1/k_v} - 1)`, horizon part
    /// plus tail bound.
    pub bound_sum: f64,
    /// `delta0 * sum_{v >= N0} 1/k_v` (upper bound).
    pub delta_sum: f64,
    /// `(M0 - mu0) - bound_sum`.
    pub slack: f64,
    pub valid: bool,
}

pub fn nonexistence_certificate(
    interval: Interval,
    seq: &SequenceSpec,
    epsilon_0: Option<f64>,
) -> Result<NonexistenceCertificate> {
    if seq.declared_class() != SeriesClass::Convergent {
        return Err(Error::NotApplicable(format!(
            "reciprocal series declared {:?}, need convergent",
            seq.declared_class()
        )));
    }
    let horizon = seq.horizon();
    let sigma_tail_bound = seq
        .tail_bound(horizon)
        .ok_or_else(|| Error::MissingTailBound(format!("{:?}", seq.kind())))?;
    let sigma_horizon = reciprocal_partial_sum(seq, horizon)?;
    let sigma_0 = sigma_horizon + sigma_tail_bound;

    let (mu0, m0) = (interval.lo(), interval.hi());
    let width = m0 - mu0;
    let delta_0 = width / (2.0 * sigma_0);
    let exp_limit = delta_0 / m0;

    let epsilon_0 = match epsilon_0 {
        Some(e) => {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::InvalidParameter(format!("epsilon_0 must lie in (0, 1), got {e}")));
            }
            e
        }
        None => largest_dyadic_epsilon(exp_limit),
    };
    let ln_ratio_0 = ln_ratio(epsilon_0);
    let ratio_below_exp = ln_ratio_0 < exp_limit;
    if !ratio_below_exp {
        return Err(Error::InvalidParameter(format!(
            "epsilon_0 = {epsilon_0} violates (1+e)/(1-e) < exp(delta_0/M_0)"
        )));
    }

    let n0 = smallest_n0(exp_limit, ln_ratio_0);
    let epsilon_1 = epsilon_0 / 2.0;
    let ln_ratio_1 = ln_ratio(epsilon_1);

    let mut bound = CompensatedSum::new();
    let mut recip = CompensatedSum::new();
    let mut per_term_bound_holds = true;
    let mut last_k = None;
    for v in n0..=horizon {
        let k = seq.materialize(v)? as f64;
        let term = (ln_ratio_1 / k).exp_m1();
        per_term_bound_holds &= term < delta_0 / (m0 * k);
        bound.add(term);
        recip.add(1.0 / k);
        last_k = Some(k);
    }
    // Tail: e^t - 1 <= t e^t with t = ln_ratio_1 / k_v <= ln_ratio_1 / k_horizon.
    let t_max = ln_ratio_1 / last_k.unwrap_or(1.0);
    bound.add(ln_ratio_1 * t_max.exp() * sigma_tail_bound);
    recip.add(sigma_tail_bound);

    let bound_sum = m0 * bound.value();
    let delta_sum = delta_0 * recip.value();
    let slack = width - bound_sum;
    Ok(NonexistenceCertificate {
        interval,
        sequence: seq.clone(),
        sigma_horizon,
        sigma_tail_bound,
        sigma_0,
        delta_0,
        epsilon_0,
        epsilon_1,
        n0,
        ratio_below_exp,
        per_term_bound_holds,
        bound_sum,
        delta_sum,
        slack,
        valid: slack > 0.0 && ratio_below_exp,
    })
}

/// Largest `2^{-t}` with `ln((1+e)/(1-e)) < limit`.
fn largest_dyadic_epsilon(limit: f64) -> f64 {
    let mut eps = 0.5;
    while ln_ratio(eps) >= limit {
        eps *= 0.5;
    }
    eps
}

/// Smallest `N >= 1` with `N ln(1 + c/N) > target`. The left side increases
/// with `N` towards `c`, so the first hit holds for all larger `N`.
fn smallest_n0(c: f64, target: f64) -> u64 {
    let f = |n: u64| (n as f64) * (c / n as f64).ln_1p() > target;
    let mut hi = 1u64;
    while !f(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2 + 1;
    if hi == 1 {
        return 1;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if f(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_certificate_values() {
        let seq = SequenceSpec::geometric(2, 40).unwrap();
        let cert = nonexistence_certificate(Interval::new(2.0, 3.0).unwrap(), &seq, None).unwrap();
        assert_eq!(cert.sigma_0, 1.0);
        assert_eq!(cert.delta_0, 0.5);
        // exp(1/6) = 1.1814; 17/15 = 1.1333 is the first dyadic ratio below it
        assert_eq!(cert.epsilon_0, 1.0 / 16.0);
        assert_eq!(cert.n0, 1);
        assert!(cert.valid && cert.slack > 0.0);
        assert!(cert.bound_sum < cert.delta_sum);
        assert!(cert.delta_sum < 1.0);
        assert!(cert.per_term_bound_holds);
    }

    #[test]
    fn divergent_not_applicable() {
        let seq = SequenceSpec::linear(1, 0, 40).unwrap();
        assert!(matches!(
            nonexistence_certificate(Interval::new(2.0, 3.0).unwrap(), &seq, None),
            Err(Error::NotApplicable(_))
        ));
        let ex = SequenceSpec::explicit(vec![1, 4, 9]).unwrap();
        assert!(matches!(
            nonexistence_certificate(Interval::new(2.0, 3.0).unwrap(), &ex, None),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn user_epsilon_checked() {
        let seq = SequenceSpec::geometric(2, 40).unwrap();
        let w = Interval::new(2.0, 3.0).unwrap();
        assert!(nonexistence_certificate(w, &seq, Some(0.5)).is_err());
        assert!(nonexistence_certificate(w, &seq, Some(0.01)).unwrap().valid);
    }

    #[test]
    fn n0_search() {
        assert_eq!(smallest_n0(1.0, 0.5), 1);
        // N ln(1 + 1/N) > 0.99 first holds at N = 50
        let n = smallest_n0(1.0, 0.99);
        assert!((n as f64) * (1.0 / n as f64).ln_1p() > 0.99);
        assert!(((n - 1) as f64) * (1.0 / (n - 1) as f64).ln_1p() <= 0.99);
    }
}
