use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Interval;
use crate::error::{Error, Result};
use crate::numeric::{ln_ratio, CompensatedSum};
use crate::seq::SequenceSpec;
use crate::shift::FiniteVector;

/// Open interval `(lo, hi)`, `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `{lambda in window : |lambda^N0 z0 - 1| < eps}`.
///
/// With `y = lambda^N0` the condition is `|z0|^2 y^2 - 2 Re(z0) y + (1 - eps^2) < 0`.
/// Roots are computed in the rescaled variable `u = |z0| y`, where the
/// trinomial reads `u^2 - 2 cos(arg z0) u + (1 - eps^2)`, and mapped back to
/// `lambda` through logarithms so huge `N0` and tiny `|z0|` stay finite.
pub fn g_set_interval(z0: Complex64, n0: u64, epsilon: f64, window: Interval) -> Option<Span> {
    if n0 == 0 || z0 == Complex64::new(0.0, 0.0) || !(epsilon > 0.0 && epsilon < 1.0) {
        return None;
    }
    let r = z0.norm();
    let cos = (z0.re / r).clamp(-1.0, 1.0);
    let c = 1.0 - epsilon * epsilon;
    let disc = cos * cos - c;
    if disc <= 0.0 || cos <= 0.0 {
        // no real roots, or both roots negative (sum 2cos <= 0, product c > 0)
        return None;
    }
    let u_hi = cos + disc.sqrt();
    let u_lo = c / u_hi;
    let ln_r = r.ln();
    let n = n0 as f64;
    let lam_lo = ((u_lo.ln() - ln_r) / n).exp();
    let lam_hi = ((u_hi.ln() - ln_r) / n).exp();
    let lo = lam_lo.max(window.lo());
    let hi = lam_hi.min(window.hi());
    (lo < hi).then_some(Span { lo, hi })
}

/// Upper bound `hi * (((1 + eps)/(1 - eps))^{1/N0} - 1)` on the measure of
/// any `g_set_interval(z0, N0, eps, window)`, uniform in `z0`.
pub fn g_set_measure_bound(n0: u64, epsilon: f64, window: Interval) -> f64 {
    window.hi() * (ln_ratio(epsilon) / n0 as f64).exp_m1()
}

/// Lebesgue measure of a finite union of intervals (sort and merge).
pub fn union_measure(spans: &[Span]) -> f64 {
    let mut sorted: Vec<Span> = spans.iter().copied().filter(|s| s.hi > s.lo).collect();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut total = CompensatedSum::new();
    let mut current: Option<Span> = None;
    for s in sorted {
        match current.as_mut() {
            Some(cur) if s.lo <= cur.hi => cur.hi = cur.hi.max(s.hi),
            _ => {
                if let Some(cur) = current.take() {
                    total.add(cur.length());
                }
                current = Some(s);
            }
        }
    }
    if let Some(cur) = current {
        total.add(cur.length());
    }
    total.value()
}

/// Measure of `union_{v in v_range} {lambda in interval : |lambda^{k_v} x_{k_v+1} - 1| < eps}`.
pub fn empirical_coverage(
    x: &FiniteVector,
    seq: &SequenceSpec,
    interval: Interval,
    epsilon: f64,
    v_range: std::ops::RangeInclusive<u64>,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let mut spans = Vec::new();
    for v in v_range {
        let k = seq.materialize(v)?;
        let z0 = x.get(k.saturating_add(1));
        if let Some(s) = g_set_interval(z0, k, epsilon, interval) {
            spans.push(s);
        }
    }
    Ok(union_measure(&spans))
}
