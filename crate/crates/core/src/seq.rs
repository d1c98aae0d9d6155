//! Exponent sequences `(k_n)`, their reciprocal sums, and residue-class
//! subsequences with guaranteed gaps.
//!
//! Every sequence carries an explicit horizon: the largest index that may be
//! materialized. Nothing here extends a sequence past its horizon.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Closed-form shapes of an exponent sequence, indexed from `n = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceKind {
    /// `k_n = c*n + d`
    Linear { c: u64, d: i64 },
    /// `k_n = n^p`
    Polynomial { p: u32 },
    /// `k_n = b^n`
    Geometric { b: u64 },
    /// `k_n = terms[n - 1]`
    Explicit { terms: Vec<u64> },
}

/// Convergence class of `sum 1/k_n`, as declared by the sequence kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesClass {
    Divergent,
    Convergent,
    Unknown,
}

/// A strictly increasing sequence of positive integers with a finite horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceSpecRepr", into = "SequenceSpecRepr")]
pub struct SequenceSpec {
    kind: SequenceKind,
    horizon: u64,
}

impl SequenceSpec {
    pub fn new(kind: SequenceKind, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidSequence("horizon must be positive".into()));
        }
        match &kind {
            SequenceKind::Linear { c, d } => {
                if *c == 0 {
                    return Err(Error::InvalidSequence("linear: c must be >= 1".into()));
                }
                if (*c as i128) + (*d as i128) < 1 {
                    return Err(Error::InvalidSequence("linear: k_1 = c + d must be >= 1".into()));
                }
            }
            SequenceKind::Polynomial { p } => {
                if *p == 0 {
                    return Err(Error::InvalidSequence("polynomial: p must be >= 1".into()));
                }
            }
            SequenceKind::Geometric { b } => {
                if *b < 2 {
                    return Err(Error::InvalidSequence("geometric: b must be >= 2".into()));
                }
            }
            SequenceKind::Explicit { terms } => {
                if (terms.len() as u64) < horizon {
                    return Err(Error::InvalidSequence(format!(
                        "explicit: {} terms but horizon {horizon}",
                        terms.len()
                    )));
                }
                if terms.first() == Some(&0) {
                    return Err(Error::InvalidSequence("explicit: terms must be positive".into()));
                }
                if terms.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidSequence(
                        "explicit: terms must be strictly increasing".into(),
                    ));
                }
            }
        }
        let spec = SequenceSpec { kind, horizon };
        // every closed form is increasing, so checking the last term covers overflow
        if spec.term_unchecked(horizon).is_none() {
            return Err(Error::InvalidSequence(format!(
                "k_{horizon} does not fit in 64 bits"
            )));
        }
        Ok(spec)
    }

    pub fn linear(c: u64, d: i64, horizon: u64) -> Result<Self> {
        Self::new(SequenceKind::Linear { c, d }, horizon)
    }

    pub fn polynomial(p: u32, horizon: u64) -> Result<Self> {
        Self::new(SequenceKind::Polynomial { p }, horizon)
    }

    pub fn geometric(b: u64, horizon: u64) -> Result<Self> {
        Self::new(SequenceKind::Geometric { b }, horizon)
    }

    /// Uses every supplied term; the horizon is the list length.
    pub fn explicit(terms: Vec<u64>) -> Result<Self> {
        let horizon = terms.len() as u64;
        Self::new(SequenceKind::Explicit { terms }, horizon)
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Same sequence with a different horizon, re-validated.
    pub fn with_horizon(&self, horizon: u64) -> Result<Self> {
        Self::new(self.kind.clone(), horizon)
    }

    fn term_unchecked(&self, n: u64) -> Option<u64> {
        match &self.kind {
            SequenceKind::Linear { c, d } => {
                let v = (*c as i128) * (n as i128) + (*d as i128);
                u64::try_from(v).ok()
            }
            SequenceKind::Polynomial { p } => n.checked_pow(*p),
            SequenceKind::Geometric { b } => u32::try_from(n).ok().and_then(|e| b.checked_pow(e)),
            SequenceKind::Explicit { terms } => terms.get((n - 1) as usize).copied(),
        }
    }

    /// `k_n` for `1 <= n <= horizon`.
    pub fn materialize(&self, n: u64) -> Result<u64> {
        if n == 0 || n > self.horizon {
            return Err(Error::HorizonExceeded {
                index: n,
                horizon: self.horizon,
            });
        }
        Ok(self
            .term_unchecked(n)
            .expect("validated at construction"))
    }

    /// `k_1, ..., k_n`.
    pub fn terms_up_to(&self, n: u64) -> Result<Vec<u64>> {
        if n > self.horizon {
            return Err(Error::HorizonExceeded {
                index: n,
                horizon: self.horizon,
            });
        }
        Ok((1..=n).map(|i| self.term_unchecked(i).unwrap()).collect())
    }

    /// Smallest index `n <= horizon` with `k_n > bound`.
    pub fn first_index_exceeding(&self, bound: f64) -> Option<u64> {
        // binary search: k_n is strictly increasing
        let (mut lo, mut hi) = (1u64, self.horizon);
        if (self.term_unchecked(hi)? as f64) <= bound {
            return None;
        }
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if (self.term_unchecked(mid).unwrap() as f64) > bound {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }

    pub fn declared_class(&self) -> SeriesClass {
        match &self.kind {
            SequenceKind::Linear { .. } => SeriesClass::Divergent,
            SequenceKind::Polynomial { p: 1 } => SeriesClass::Divergent,
            SequenceKind::Polynomial { .. } | SequenceKind::Geometric { .. } => {
                SeriesClass::Convergent
            }
            SequenceKind::Explicit { .. } => SeriesClass::Unknown,
        }
    }

    /// Upper bound on `sum_{v > n} 1/k_v` when the kind admits a closed form.
    ///
    /// Geometric: `b^{-n} / (b - 1)` (exact). Polynomial `p >= 2`:
    /// `n^{1-p} / (p - 1)` from the integral comparison.
    pub fn tail_bound(&self, n: u64) -> Option<f64> {
        match &self.kind {
            SequenceKind::Geometric { b } => {
                let b = *b as f64;
                let power = match i32::try_from(n) {
                    Ok(n) => b.powi(-n),
                    Err(_) => 0.0,
                };
                Some(power / (b - 1.0))
            }
            SequenceKind::Polynomial { p } if *p >= 2 => {
                if n == 0 {
                    // sum_{v >= 1} v^{-p} <= 1 + 1/(p-1)
                    return Some(1.0 + 1.0 / (*p as f64 - 1.0));
                }
                let p = *p as f64;
                Some((n as f64).powf(1.0 - p) / (p - 1.0))
            }
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SequenceSpecRepr {
    kind: String,
    #[serde(default)]
    params: Value,
    horizon: u64,
}

impl TryFrom<SequenceSpecRepr> for SequenceSpec {
    type Error = Error;

    fn try_from(r: SequenceSpecRepr) -> Result<Self> {
        let p = &r.params;
        let get_u64 = |key: &str| -> Result<u64> {
            p.get(key)
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::InvalidSequence(format!("{}: missing integer param '{key}'", r.kind)))
        };
        let kind = match r.kind.as_str() {
            "linear" => {
                let c = get_u64("c")?;
                let d = match p.get("d") {
                    None => 0,
                    Some(v) => v
                        .as_i64()
                        .ok_or_else(|| Error::InvalidSequence("linear: 'd' must be an integer".into()))?,
                };
                SequenceKind::Linear { c, d }
            }
            "polynomial" => {
                let v = get_u64("p")?;
                let p = u32::try_from(v)
                    .map_err(|_| Error::InvalidSequence("polynomial: p too large".into()))?;
                SequenceKind::Polynomial { p }
            }
            "geometric" => SequenceKind::Geometric { b: get_u64("b")? },
            "explicit" => {
                let terms = p
                    .get("terms")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::InvalidSequence("explicit: missing 'terms' array".into()))?
                    .iter()
                    .map(|t| {
                        t.as_u64()
                            .ok_or_else(|| Error::InvalidSequence("explicit: terms must be integers".into()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                SequenceKind::Explicit { terms }
            }
            other => return Err(Error::InvalidSequence(format!("unknown kind '{other}'"))),
        };
        SequenceSpec::new(kind, r.horizon)
    }
}

impl From<SequenceSpec> for SequenceSpecRepr {
    fn from(s: SequenceSpec) -> Self {
        let (kind, params) = match s.kind {
            SequenceKind::Linear { c, d } => ("linear", json!({ "c": c, "d": d })),
            SequenceKind::Polynomial { p } => ("polynomial", json!({ "p": p })),
            SequenceKind::Geometric { b } => ("geometric", json!({ "b": b })),
            SequenceKind::Explicit { terms } => ("explicit", json!({ "terms": terms })),
        };
        SequenceSpecRepr {
            kind: kind.to_string(),
            params,
            horizon: s.horizon,
        }
    }
}

/// `sum_{j=1..n} 1/k_j`, compensated summation.
pub fn reciprocal_partial_sum(spec: &SequenceSpec, n: u64) -> Result<f64> {
    if n > spec.horizon() {
        return Err(Error::HorizonExceeded {
            index: n,
            horizon: spec.horizon(),
        });
    }
    let acc: CompensatedSum = (1..=n)
        .map(|i| 1.0 / spec.term_unchecked(i).unwrap() as f64)
        .collect();
    Ok(acc.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocalSumReport {
    /// `(n, sum_{j<=n} 1/k_j)` at the requested checkpoints.
    pub partial_sums: Vec<(u64, f64)>,
    pub declared_class: SeriesClass,
}

/// Partial sums at each checkpoint (in increasing order, all `<= horizon`).
/// The class comes from the sequence kind unless the caller overrides it.
pub fn reciprocal_sum_report(
    spec: &SequenceSpec,
    checkpoints: &[u64],
    declared: Option<SeriesClass>,
) -> Result<ReciprocalSumReport> {
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("checkpoints must be increasing".into()));
    }
    if let Some(&last) = checkpoints.last() {
        if last > spec.horizon() {
            return Err(Error::HorizonExceeded {
                index: last,
                horizon: spec.horizon(),
            });
        }
    }
    let mut acc = CompensatedSum::new();
    let mut n = 0u64;
    let mut partial_sums = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        while n < cp {
            n += 1;
            acc.add(1.0 / spec.term_unchecked(n).unwrap() as f64);
        }
        partial_sums.push((cp, acc.value()));
    }
    Ok(ReciprocalSumReport {
        partial_sums,
        declared_class: declared.unwrap_or_else(|| spec.declared_class()),
    })
}

/// The residue class `{k_{rho*N0 + j} : rho >= 1}` of a parent sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSubsequence {
    pub parent: SequenceSpec,
    pub residue: u64,
    pub block_size: u64,
    /// Selected parent indices `rho*N0 + j`, increasing.
    pub indices: Vec<u64>,
    /// The corresponding terms `mu_rho`.
    pub terms: Vec<u64>,
    /// Every consecutive gap is strictly larger than this.
    pub gap_floor: f64,
}

impl GapSubsequence {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_gap(&self) -> Option<u64> {
        self.terms.windows(2).map(|w| w[1] - w[0]).min()
    }
}

/// Split indices `N0..=horizon` into the `N0 = floor(M) + 1` residue classes
/// mod `N0` and keep the class with the largest reciprocal partial sum
/// (smallest residue on ties). Since `k_{v2} - k_{v1} >= v2 - v1`, the kept
/// terms differ by at least `N0 > M`.
pub fn extract_gapped_subsequence(
    spec: &SequenceSpec,
    gap_floor: f64,
    horizon: u64,
) -> Result<GapSubsequence> {
    if !(gap_floor.is_finite() && gap_floor >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gap floor must be finite and non-negative, got {gap_floor}"
        )));
    }
    if horizon > spec.horizon() {
        return Err(Error::HorizonExceeded {
            index: horizon,
            horizon: spec.horizon(),
        });
    }
    let block_size = gap_floor.floor() as u64 + 1;
    if horizon < block_size.saturating_mul(2) {
        return Err(Error::InsufficientHorizon(format!(
            "horizon {horizon} cannot hold two terms of a residue class mod {block_size}"
        )));
    }

    let mut best: Option<(u64, f64)> = None;
    for j in 0..block_size {
        let sum: CompensatedSum = (1..)
            .map(|rho| rho * block_size + j)
            .take_while(|&idx| idx <= horizon)
            .map(|idx| 1.0 / spec.term_unchecked(idx).unwrap() as f64)
            .collect();
        let sum = sum.value();
        if best.is_none_or(|(_, s)| sum > s) {
            best = Some((j, sum));
        }
    }
    let (residue, _) = best.expect("block_size >= 1");
    let indices: Vec<u64> = (1..)
        .map(|rho| rho * block_size + residue)
        .take_while(|&idx| idx <= horizon)
        .collect();
    let terms = indices
        .iter()
        .map(|&i| spec.term_unchecked(i).unwrap())
        .collect();
    Ok(GapSubsequence {
        parent: spec.clone(),
        residue,
        block_size,
        indices,
        terms,
        gap_floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn materialize_examples() {
        assert_eq!(SequenceSpec::linear(1, 0, 10).unwrap().materialize(5).unwrap(), 5);
        assert_eq!(SequenceSpec::geometric(2, 10).unwrap().materialize(4).unwrap(), 16);
        assert_eq!(SequenceSpec::polynomial(2, 10).unwrap().materialize(7).unwrap(), 49);
    }

    #[test]
    fn materialize_beyond_horizon() {
        let s = SequenceSpec::linear(1, 0, 10).unwrap();
        assert!(matches!(s.materialize(11), Err(Error::HorizonExceeded { .. })));
        assert!(matches!(s.materialize(0), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn rejects_bad_sequences() {
        assert!(SequenceSpec::linear(0, 1, 5).is_err());
        assert!(SequenceSpec::linear(1, -1, 5).is_err());
        assert!(SequenceSpec::geometric(1, 5).is_err());
        assert!(SequenceSpec::geometric(2, 64).is_err());
        assert!(SequenceSpec::geometric(2, 63).is_ok());
        assert!(SequenceSpec::explicit(vec![1, 3, 3]).is_err());
        assert!(SequenceSpec::explicit(vec![0, 3]).is_err());
        assert!(SequenceSpec::new(SequenceKind::Explicit { terms: vec![1, 2] }, 3).is_err());
        assert!(SequenceSpec::linear(1, 0, 0).is_err());
    }

    #[test]
    fn harmonic_partial_sum() {
        let s = SequenceSpec::linear(1, 0, 100).unwrap();
        let v = reciprocal_partial_sum(&s, 4).unwrap();
        assert!((v - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn geometric_sum_below_one() {
        let s = SequenceSpec::geometric(2, 60).unwrap();
        let v = reciprocal_partial_sum(&s, 60).unwrap();
        assert!(v <= 1.0 && v > 1.0 - 1e-15);
    }

    #[test]
    fn declared_classes() {
        assert_eq!(SequenceSpec::linear(3, 1, 5).unwrap().declared_class(), SeriesClass::Divergent);
        assert_eq!(SequenceSpec::polynomial(1, 5).unwrap().declared_class(), SeriesClass::Divergent);
        assert_eq!(SequenceSpec::polynomial(2, 5).unwrap().declared_class(), SeriesClass::Convergent);
        assert_eq!(SequenceSpec::geometric(3, 5).unwrap().declared_class(), SeriesClass::Convergent);
        assert_eq!(SequenceSpec::explicit(vec![1, 2]).unwrap().declared_class(), SeriesClass::Unknown);
    }

    #[test]
    fn report_override_and_monotone() {
        let s = SequenceSpec::explicit(vec![1, 2, 4, 8]).unwrap();
        let r = reciprocal_sum_report(&s, &[1, 2, 4], Some(SeriesClass::Convergent)).unwrap();
        assert_eq!(r.declared_class, SeriesClass::Convergent);
        assert_eq!(r.partial_sums, vec![(1, 1.0), (2, 1.5), (4, 1.875)]);
        assert!(reciprocal_sum_report(&s, &[2, 1], None).is_err());
    }

    #[test]
    fn tail_bounds() {
        let g = SequenceSpec::geometric(2, 10).unwrap();
        assert_eq!(g.tail_bound(3), Some(0.125));
        let p = SequenceSpec::polynomial(2, 10).unwrap();
        assert_eq!(p.tail_bound(4), Some(0.25));
        assert_eq!(SequenceSpec::linear(1, 0, 10).unwrap().tail_bound(4), None);
    }

    #[test]
    fn gapped_explicit_keeps_everything() {
        let s = SequenceSpec::explicit(vec![1, 2, 3]).unwrap();
        let g = extract_gapped_subsequence(&s, 0.5, 3).unwrap();
        assert_eq!(g.block_size, 1);
        assert_eq!(g.terms, vec![1, 2, 3]);
    }

    #[test]
    fn gapped_insufficient_horizon() {
        let s = SequenceSpec::linear(1, 0, 7).unwrap();
        assert!(matches!(
            extract_gapped_subsequence(&s, 3.0, 7),
            Err(Error::InsufficientHorizon(_))
        ));
        let s = SequenceSpec::linear(1, 0, 8).unwrap();
        assert!(extract_gapped_subsequence(&s, 3.0, 8).is_ok());
    }

    #[test]
    fn json_shape() {
        let s = SequenceSpec::linear(2, 1, 9).unwrap();
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v, json!({"kind": "linear", "params": {"c": 2, "d": 1}, "horizon": 9}));
        let back: SequenceSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<SequenceSpec>(r#"{"kind":"linear","params":{"c":1}}"#).is_err());
        assert!(serde_json::from_str::<SequenceSpec>(r#"{"kind":"cubic","params":{},"horizon":3}"#).is_err());
    }

    #[test]
    fn first_index_exceeding_bound() {
        let s = SequenceSpec::linear(1, 0, 100).unwrap();
        assert_eq!(s.first_index_exceeding(2.5), Some(3));
        assert_eq!(s.first_index_exceeding(0.1), Some(1));
        assert_eq!(s.first_index_exceeding(100.0), None);
    }
}
