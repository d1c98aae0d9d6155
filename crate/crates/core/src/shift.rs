//! Finite-support vectors in `l^2`, powers of the backward shift, and a
//! log-domain scalar for products like `lambda^k * beta`.
//!
//! Indices are 1-based throughout: entry `1` is the first coordinate.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{CompensatedSum, OVERFLOW_LN};

/// Finitely supported complex sequence. Zero entries are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FiniteVector {
    entries: BTreeMap<u64, Complex64>,
}

impl FiniteVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Standard basis vector `e_i`.
    pub fn basis(i: u64) -> Self {
        let mut v = Self::zero();
        v.set(i, Complex64::new(1.0, 0.0));
        v
    }

    /// Builds a vector from `(index, value)` pairs; later duplicates overwrite.
    ///
    /// Panics on index 0.
    pub fn from_entries<I: IntoIterator<Item = (u64, Complex64)>>(it: I) -> Self {
        let mut v = Self::zero();
        for (i, z) in it {
            v.set(i, z);
        }
        v
    }

    /// Dense constructor: `values[0]` goes to index 1.
    pub fn from_dense(values: &[Complex64]) -> Self {
        Self::from_entries(values.iter().enumerate().map(|(i, &z)| (i as u64 + 1, z)))
    }

    pub fn set(&mut self, index: u64, value: Complex64) {
        assert!(index >= 1, "FiniteVector indices are 1-based");
        if value == Complex64::new(0.0, 0.0) {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
    }

    pub fn get(&self, index: u64) -> Complex64 {
        self.entries.get(&index).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Largest stored index, 0 for the zero vector.
    pub fn support_max(&self) -> u64 {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }

    pub fn support_min(&self) -> Option<u64> {
        self.entries.keys().next().copied()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (u64, Complex64)> + '_ {
        self.entries.iter().map(|(&i, &z)| (i, z))
    }

    /// Entries with index in `range`.
    pub fn range(
        &self,
        range: impl std::ops::RangeBounds<u64>,
    ) -> impl DoubleEndedIterator<Item = (u64, Complex64)> + '_ {
        self.entries.range(range).map(|(&i, &z)| (i, z))
    }

    pub fn norm_sqr(&self) -> f64 {
        let s: CompensatedSum = self.entries.values().map(|z| z.norm_sqr()).collect();
        s.value()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn add(&self, other: &FiniteVector) -> FiniteVector {
        let mut out = self.clone();
        for (i, z) in other.iter() {
            out.set(i, out.get(i) + z);
        }
        out
    }

    pub fn sub(&self, other: &FiniteVector) -> FiniteVector {
        let mut out = self.clone();
        for (i, z) in other.iter() {
            out.set(i, out.get(i) - z);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> FiniteVector {
        FiniteVector::from_entries(self.iter().map(|(i, z)| (i, z * c)))
    }
}

impl Serialize for FiniteVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.entries.len()))?;
        for (&i, z) in &self.entries {
            seq.serialize_element(&(i, z.re, z.im))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for FiniteVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct TriplesVisitor;

        impl<'de> Visitor<'de> for TriplesVisitor {
            type Value = FiniteVector;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of [index, re, im] triples")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<FiniteVector, A::Error> {
                let mut v = FiniteVector::zero();
                while let Some((i, re, im)) = seq.next_element::<(u64, f64, f64)>()? {
                    if i == 0 {
                        return Err(de::Error::custom("vector indices start at 1"));
                    }
                    if !(re.is_finite() && im.is_finite()) {
                        return Err(de::Error::custom("vector entries must be finite"));
                    }
                    if v.entries.contains_key(&i) {
                        return Err(de::Error::custom(format!("duplicate index {i}")));
                    }
                    v.set(i, Complex64::new(re, im));
                }
                Ok(v)
            }
        }

        deserializer.deserialize_seq(TriplesVisitor)
    }
}

/// `phase * exp(ln_abs)`. A zero phase encodes the value zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScalar {
    pub phase: Complex64,
    pub ln_abs: f64,
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar {
        phase: Complex64::new(0.0, 0.0),
        ln_abs: 0.0,
    };

    /// Positive real `exp(ln_abs)`.
    pub fn from_ln(ln_abs: f64) -> Self {
        LogScalar {
            phase: Complex64::new(1.0, 0.0),
            ln_abs,
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z == Complex64::new(0.0, 0.0) {
            return Self::ZERO;
        }
        let r = z.norm();
        LogScalar {
            phase: z / r,
            ln_abs: r.ln(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.phase == Complex64::new(0.0, 0.0)
    }

    pub fn is_positive_real(&self) -> bool {
        self.phase == Complex64::new(1.0, 0.0)
    }

    pub fn mul(&self, other: &LogScalar) -> LogScalar {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        LogScalar {
            phase: self.phase * other.phase,
            ln_abs: self.ln_abs + other.ln_abs,
        }
    }

    /// The represented value; errors instead of returning infinity.
    /// Values below the f64 range flush to zero.
    pub fn to_complex(&self) -> Result<Complex64> {
        if self.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if self.ln_abs > OVERFLOW_LN {
            return Err(Error::Overflow {
                log_magnitude: self.ln_abs,
                threshold: OVERFLOW_LN,
            });
        }
        Ok(self.phase * self.ln_abs.exp())
    }
}

/// `B^k x`: drops the first `k` coordinates.
pub fn backward_shift_power(x: &FiniteVector, k: u64) -> FiniteVector {
    FiniteVector::from_entries(x.range(k.saturating_add(1)..).map(|(i, z)| (i - k, z)))
}

/// `(lambda B)^k x = lambda^k B^k x`, scaling each surviving entry in the log
/// domain.
pub fn scaled_shift_orbit_point(x: &FiniteVector, lambda: f64, k: u64) -> Result<FiniteVector> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must exceed 1, got {lambda}")));
    }
    let shift_ln = k as f64 * lambda.ln();
    let mut out = FiniteVector::zero();
    for (i, z) in x.range(k.saturating_add(1)..) {
        let r = z.norm();
        let ln_mag = shift_ln + r.ln();
        if ln_mag > OVERFLOW_LN {
            return Err(Error::Overflow {
                log_magnitude: ln_mag,
                threshold: OVERFLOW_LN,
            });
        }
        out.set(i - k, (z / r) * ln_mag.exp());
    }
    Ok(out)
}

/// `||x - y||_2` over the union of supports.
pub fn l2_distance(x: &FiniteVector, y: &FiniteVector) -> f64 {
    let mut acc = CompensatedSum::new();
    for (i, z) in x.iter() {
        acc.add((z - y.get(i)).norm_sqr());
    }
    for (i, z) in y.iter() {
        if x.get(i) == Complex64::new(0.0, 0.0) {
            acc.add(z.norm_sqr());
        }
    }
    acc.value().sqrt()
}

/// `|lambda^k * beta - 1|` evaluated as `|expm1(k ln lambda + ln beta)|`.
pub fn log_power_error(lambda: f64, k: u64, beta: &LogScalar) -> Result<f64> {
    if !beta.is_positive_real() {
        return Err(Error::InvalidParameter("beta must be a positive real".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let exponent = k as f64 * lambda.ln() + beta.ln_abs;
    if exponent > OVERFLOW_LN {
        return Err(Error::Overflow {
            log_magnitude: exponent,
            threshold: OVERFLOW_LN,
        });
    }
    Ok(exponent.exp_m1().abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shift_annihilates_e1() {
        assert!(backward_shift_power(&FiniteVector::basis(1), 1).is_zero());
    }

    #[test]
    fn shift_moves_index() {
        let x = FiniteVector::from_entries([(3, c(2.0, 1.0))]);
        let y = backward_shift_power(&x, 2);
        assert_eq!(y, FiniteVector::from_entries([(1, c(2.0, 1.0))]));
    }

    #[test]
    fn shift_translates_support() {
        let x = FiniteVector::from_entries((5..=9).map(|i| (i, c(i as f64, -1.0))));
        let y = backward_shift_power(&x, 3);
        let idx: Vec<u64> = y.iter().map(|(i, _)| i).collect();
        assert_eq!(idx, vec![2, 3, 4, 5, 6]);
        assert_eq!(y.get(2), c(5.0, -1.0));
        assert_eq!(backward_shift_power(&x, 0), x);
    }

    #[test]
    fn orbit_point_examples() {
        let y = scaled_shift_orbit_point(&FiniteVector::basis(2), 2.0, 1).unwrap();
        assert_eq!(y, FiniteVector::from_entries([(1, c(2.0, 0.0))]));
        assert!(scaled_shift_orbit_point(&FiniteVector::basis(1), 3.7, 4).unwrap().is_zero());
    }

    #[test]
    fn orbit_point_cancels_in_log_domain() {
        let lambda: f64 = 1.7;
        let k = 37;
        let x = FiniteVector::from_entries([(k + 1, c(lambda.powi(-(k as i32)), 0.0))]);
        let y = scaled_shift_orbit_point(&x, lambda, k).unwrap();
        assert!((y.get(1) - c(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn orbit_point_overflow() {
        let x = FiniteVector::from_entries([(2000, c(1.0, 0.0))]);
        assert!(matches!(
            scaled_shift_orbit_point(&x, 2.0, 1500),
            Err(Error::Overflow { .. })
        ));
        assert!(scaled_shift_orbit_point(&x, 1.0, 3).is_err());
    }

    #[test]
    fn distance_examples() {
        let e1 = FiniteVector::basis(1);
        assert_eq!(l2_distance(&e1, &e1), 0.0);
        assert_eq!(l2_distance(&e1, &FiniteVector::zero()), 1.0);
        let v = FiniteVector::from_entries([(1, c(3.0, 4.0))]);
        assert_eq!(l2_distance(&v, &FiniteVector::zero()), 5.0);
        assert_eq!(l2_distance(&FiniteVector::zero(), &v), 5.0);
    }

    #[test]
    fn log_power_error_examples() {
        let a: f64 = 1.93;
        let k = 120;
        let beta = LogScalar::from_ln(-(k as f64) * a.ln());
        assert_eq!(log_power_error(a, k, &beta).unwrap(), 0.0);
        assert_eq!(log_power_error(2.0, 1, &LogScalar::from_ln(0.5f64.ln())).unwrap(), 0.0);
        let e = log_power_error(2.9, 1, &LogScalar::from_ln(0.5f64.ln())).unwrap();
        assert!((e - 0.45).abs() < 1e-15);
        assert!(log_power_error(2.0, 2000, &LogScalar::from_ln(0.0)).is_err());
        assert!(log_power_error(2.0, 1, &LogScalar::from_complex(c(-0.5, 0.0))).is_err());
    }

    #[test]
    fn log_scalar_round_trip() {
        for z in [c(3.0, -4.0), c(1e-300, 0.0), c(-2.5e200, 1e199)] {
            let back = LogScalar::from_complex(z).to_complex().unwrap();
            assert!((back - z).norm() <= 1e-12 * z.norm());
        }
        assert!(LogScalar::from_ln(701.0).to_complex().is_err());
        assert_eq!(LogScalar::ZERO.to_complex().unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn zero_entries_not_stored() {
        let mut v = FiniteVector::basis(4);
        v.set(4, c(0.0, 0.0));
        assert!(v.is_zero());
        let w = FiniteVector::basis(2).sub(&FiniteVector::basis(2));
        assert_eq!(w.nnz(), 0);
    }

    #[test]
    fn json_triples() {
        let v = FiniteVector::from_entries([(7, c(0.5, -1.0)), (2, c(1.0, 0.0))]);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[[2,1.0,0.0],[7,0.5,-1.0]]");
        assert_eq!(serde_json::from_str::<FiniteVector>(&s).unwrap(), v);
        assert!(serde_json::from_str::<FiniteVector>("[[0,1.0,0.0]]").is_err());
        assert!(serde_json::from_str::<FiniteVector>("[[1,1.0,0.0],[1,2.0,0.0]]").is_err());
    }
}
