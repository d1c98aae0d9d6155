//! Small floating-point helpers shared by the other modules.

/// Log-magnitudes above this are reported as overflow instead of producing
/// infinities. Sits below `ln(f64::MAX) ~ 709.78`.
pub const OVERFLOW_LN: f64 = 700.0;

/// `ln(f64::MIN_POSITIVE)`: anything smaller is subnormal or zero.
pub const MIN_NORMAL_LN: f64 = -708.396_418_532_264_1;

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `ln(e^a + e^b)` without overflow. `NEG_INFINITY` is the identity.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 + e^z)`.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `ln((1 + eps) / (1 - eps))` evaluated without cancellation.
pub fn ln_ratio(eps: f64) -> f64 {
    eps.ln_1p() - (-eps).ln_1p()
}

/// Uniform grid of `n >= 2` points over `[lo, hi]` with both endpoints exact.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let step = (hi - lo) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|t| lo + step * t as f64).collect();
    grid[n - 1] = hi;
    grid
}

/// Serde codec for floats that may be infinite or NaN: finite values stay
/// numbers, the rest become the strings `"inf"`, `"-inf"` and `"nan"`.
pub mod extended_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let xs = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000));
        let s: CompensatedSum = xs.collect();
        assert!((s.value() - (1.0 + 1e-12)).abs() < 1e-18);
    }

    #[test]
    fn log_add_exp_matches_direct() {
        let v = log_add_exp(2.0f64.ln(), 3.0f64.ln());
        assert!((v - 5.0f64.ln()).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
        // far outside the exp range
        let big = log_add_exp(-2000.0, -2000.0);
        assert!((big - (-2000.0 + 2.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn softplus_limits() {
        assert!((softplus(0.0) - 2.0f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
    }

    #[test]
    fn grid_endpoints() {
        let g = uniform_grid(1.1, 3.7, 7);
        assert_eq!(g[0], 1.1);
        assert_eq!(g[6], 3.7);
    }

    #[test]
    fn extended_f64_round_trip() {
        #[derive(serde::Serialize, serde::Deserialize)]
        struct W(#[serde(with = "extended_f64")] f64);
        for x in [0.1, -3.5e-200, f64::INFINITY, f64::NEG_INFINITY] {
            let text = serde_json::to_string(&W(x)).unwrap();
            let back: W = serde_json::from_str(&text).unwrap();
            assert_eq!(back.0.to_bits(), x.to_bits());
        }
        let nan: W = serde_json::from_str(&serde_json::to_string(&W(f64::NAN)).unwrap()).unwrap();
        assert!(nan.0.is_nan());
        assert!(serde_json::from_str::<W>("\"big\"").is_err());
    }
}
