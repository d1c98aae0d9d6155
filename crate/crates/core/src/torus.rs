//! Equidistribution of `k_n theta mod 1`: star discrepancy, density of the
//! phases `e^{2 pi i k_n theta}` on the circle, and the joint
//! orbit-and-phase density check.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approx::OrbitEvaluator;
use crate::covering::Interval;
use crate::error::{Error, Result};
use crate::seq::SequenceSpec;
use crate::shift::FiniteVector;

/// Largest double below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub theta: f64,
    pub count: u64,
    pub star_discrepancy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_points: Option<Vec<f64>>,
}

/// `frac(k * theta)` computed exactly from the binary expansion of
/// `theta mod 1`, then rounded once.
pub fn frac_mul(k: u64, theta: f64) -> f64 {
    let t = theta.rem_euclid(1.0);
    if t == 0.0 || !t.is_finite() {
        return 0.0;
    }
    let bits = t.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac_bits = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if raw_exp == 0 {
        (frac_bits, -1074)
    } else {
        (frac_bits | (1u64 << 52), raw_exp - 1075)
    };
    // t = mantissa * 2^exp with exp < 0
    let product = k as u128 * mantissa as u128;
    let shift = -exp;
    let kept = if shift < 128 {
        product & ((1u128 << shift) - 1)
    } else {
        product
    };
    let f = kept as f64 * 2f64.powi(exp);
    f.min(BELOW_ONE)
}

/// Points `frac(k_n theta)`, `n = 1..=count`.
pub fn fractional_parts(seq: &SequenceSpec, theta: f64, count: u64) -> Result<Vec<f64>> {
    Ok(seq
        .terms_up_to(count)?
        .into_iter()
        .map(|k| frac_mul(k, theta))
        .collect())
}

/// `D*_N = max_i max(i/N - u_(i), u_(i) - (i-1)/N)` over the sorted sample.
pub fn star_discrepancy_of(points: &[f64]) -> f64 {
    let mut u = points.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| {
            let i = i as f64;
            ((i + 1.0) / n - x).max(x - i / n)
        })
        .fold(0.0, f64::max)
}

pub fn star_discrepancy(
    seq: &SequenceSpec,
    theta: f64,
    count: u64,
    keep_points: bool,
) -> Result<DiscrepancyReport> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let points = fractional_parts(seq, theta, count)?;
    Ok(DiscrepancyReport {
        theta,
        count,
        star_discrepancy: star_discrepancy_of(&points),
        sample_points: keep_points.then_some(points),
    })
}

/// `(N, D*_N)` at each checkpoint.
pub fn discrepancy_curve(seq: &SequenceSpec, theta: f64, checkpoints: &[u64]) -> Result<Vec<(u64, f64)>> {
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    let points = fractional_parts(seq, theta, last)?;
    checkpoints
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::InvalidParameter("checkpoint must be at least 1".into()));
            }
            Ok((n, star_discrepancy_of(&points[..n as usize])))
        })
        .collect()
}

fn phase(f: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * f)
}

fn check_unit(targets: &[Complex64]) -> Result<()> {
    match targets.iter().find(|t| (t.norm() - 1.0).abs() > 1e-12) {
        Some(t) => Err(Error::InvalidParameter(format!("phase target {t} is not on the unit circle"))),
        None => Ok(()),
    }
}

/// `m` equally spaced points `e^{2 pi i l / m}`.
pub fn equally_spaced_phases(m: usize) -> Vec<Complex64> {
    (0..m).map(|l| phase(l as f64 / m as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleDensityReport {
    pub theta: f64,
    pub count: u64,
    pub tolerance: f64,
    /// Smallest `n` with `|e^{2 pi i k_n theta} - t_l| < tol`, per target.
    pub witnesses: Vec<Option<u64>>,
    pub pass: bool,
}

pub fn circle_density_check(
    seq: &SequenceSpec,
    theta: f64,
    count: u64,
    phase_targets: &[Complex64],
    tolerance: f64,
) -> Result<CircleDensityReport> {
    check_unit(phase_targets)?;
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tolerance}")));
    }
    let phases: Vec<Complex64> = fractional_parts(seq, theta, count)?.into_iter().map(phase).collect();
    let witnesses: Vec<Option<u64>> = phase_targets
        .iter()
        .map(|t| {
            phases
                .iter()
                .position(|p| (p - t).norm() < tolerance)
                .map(|i| i as u64 + 1)
        })
        .collect();
    Ok(CircleDensityReport {
        theta,
        count,
        tolerance,
        pass: witnesses.iter().all(Option::is_some),
        witnesses,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointPair {
    pub vector_id: usize,
    pub phase_id: usize,
    pub witness: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDensityReport {
    pub r: f64,
    pub theta: f64,
    pub s: u64,
    pub count: u64,
    /// `|{n <= N : ||(rB)^{k_n} x - x_j|| < 1/s}|` per vector target.
    pub orbit_hits: Vec<u64>,
    pub pairs: Vec<JointPair>,
    pub overflow_events: u64,
    pub pass: bool,
}

/// For each vector target `x_j`, collects `{n <= N : ||(rB)^{k_n} x - x_j|| < 1/s}`
/// and searches it for `n` with `|e^{2 pi i k_n theta} - t_l| < 1/s`.
#[allow(clippy::too_many_arguments)]
pub fn joint_density_check(
    x: &FiniteVector,
    seq: &SequenceSpec,
    r: f64,
    theta: f64,
    vector_targets: &[FiniteVector],
    phase_targets: &[Complex64],
    s: u64,
    count: u64,
) -> Result<JointDensityReport> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("r must exceed 1, got {r}")));
    }
    if s == 0 {
        return Err(Error::InvalidParameter("s must be at least 1".into()));
    }
    check_unit(phase_targets)?;
    let tol = 1.0 / s as f64;
    let terms = seq.terms_up_to(count)?;
    let phases: Vec<Complex64> = terms.iter().map(|&k| phase(frac_mul(k, theta))).collect();
    let eval = OrbitEvaluator::new(x);
    let ln_r = r.ln();
    let live = terms.partition_point(|&k| k < eval.support_max());

    let mut pairs = Vec::new();
    let mut orbit_hits = Vec::new();
    let mut overflow_events = 0;
    for (j, target) in vector_targets.iter().enumerate() {
        let dense: Vec<Complex64> = (1..=target.support_max()).map(|i| target.get(i)).collect();
        let mut hits = Vec::new();
        for (t, &k) in terms[..live].iter().enumerate() {
            match eval.distance(ln_r, k, &dense) {
                Some(d) if d < tol => hits.push(t),
                Some(_) => {}
                None => overflow_events += 1,
            }
        }
        if target.norm() < tol {
            hits.extend(live..terms.len());
        }
        orbit_hits.push(hits.len() as u64);
        for (l, t) in phase_targets.iter().enumerate() {
            let witness = hits
                .iter()
                .find(|&&h| (phases[h] - t).norm() < tol)
                .map(|&h| h as u64 + 1);
            pairs.push(JointPair {
                vector_id: j,
                phase_id: l,
                witness,
            });
        }
    }
    Ok(JointDensityReport {
        r,
        theta,
        s,
        count,
        orbit_hits,
        pass: pairs.iter().all(|p| p.witness.is_some()),
        pairs,
        overflow_events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionEstimate {
    pub samples: u64,
    pub hits: u64,
    pub fraction: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub std_error: f64,
}

/// Monte-Carlo fraction of `(r, theta)`, uniform on the product window,
/// satisfying `predicate`.
pub fn section_measure_estimate<R: Rng + ?Sized>(
    r_window: Interval,
    theta_window: (f64, f64),
    mut predicate: impl FnMut(f64, f64) -> bool,
    samples: u64,
    rng: &mut R,
) -> Result<SectionEstimate> {
    if samples < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 samples, got {samples}")));
    }
    let (t_lo, t_hi) = theta_window;
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(Error::InvalidParameter(format!("invalid theta window ({t_lo}, {t_hi})")));
    }
    let mut hits = 0;
    for _ in 0..samples {
        let r = rng.gen_range(r_window.lo()..r_window.hi());
        let theta = rng.gen_range(t_lo..t_hi);
        if predicate(r, theta) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(SectionEstimate {
        samples,
        hits,
        fraction: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_mul_exact_cases() {
        assert_eq!(frac_mul(3, 0.5), 0.5);
        assert_eq!(frac_mul(4, 0.25), 0.0);
        assert_eq!(frac_mul(5, 1.75), 0.75);
        assert_eq!(frac_mul(1, -0.25), 0.75);
        assert_eq!(frac_mul(u64::MAX, 0.5), 0.5);
        assert_eq!(frac_mul(7, 0.0), 0.0);
    }

    #[test]
    fn discrepancy_examples() {
        let lin = SequenceSpec::linear(1, 0, 100).unwrap();
        assert_eq!(star_discrepancy(&lin, 0.0, 17, false).unwrap().star_discrepancy, 1.0);
        assert_eq!(star_discrepancy(&lin, 0.5, 2, false).unwrap().star_discrepancy, 0.5);
        let r = star_discrepancy(&lin, 0.3, 10, true).unwrap();
        assert_eq!(r.sample_points.unwrap().len(), 10);
    }

    #[test]
    fn circle_examples() {
        let lin = SequenceSpec::linear(1, 0, 50).unwrap();
        let r = circle_density_check(&lin, 0.0, 50, &[Complex64::new(1.0, 0.0)], 1e-9).unwrap();
        assert_eq!(r.witnesses, vec![Some(1)]);
        let r = circle_density_check(&lin, 0.0, 50, &[Complex64::new(-1.0, 0.0)], 0.1).unwrap();
        assert_eq!(r.witnesses, vec![None]);
        assert!(!r.pass);
        assert!(circle_density_check(&lin, 0.0, 5, &[Complex64::new(0.5, 0.0)], 0.1).is_err());
    }

    #[test]
    fn joint_engineered_fixture() {
        // (2B)^1 x = e_1 exactly
        let lin = SequenceSpec::linear(1, 0, 10).unwrap();
        let x = FiniteVector::basis(2).scale(Complex64::new(0.5, 0.0));
        let phases = equally_spaced_phases(4);
        let r = joint_density_check(&x, &lin, 2.0, 0.1, &[FiniteVector::basis(1)], &phases, 1, 10).unwrap();
        // s = 1: phase tolerance 1 is met by the first orbit index only for nearby phases
        assert_eq!(r.orbit_hits, vec![1]);
        assert_eq!(r.pairs[0].witness, Some(1));

        let empty = joint_density_check(&x, &lin, 2.0, 0.1, &[FiniteVector::basis(3)], &phases, 5, 10).unwrap();
        assert_eq!(empty.orbit_hits, vec![0]);
        assert!(empty.pairs.iter().all(|p| p.witness.is_none()));
    }

    #[test]
    fn section_trivial_predicates() {
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let w = Interval::new(1.5, 2.5).unwrap();
        let all = section_measure_estimate(w, (0.0, 1.0), |_, _| true, 500, &mut rng).unwrap();
        assert_eq!(all.fraction, 1.0);
        assert_eq!(all.std_error, 0.0);
        let rational = |_: f64, t: f64| (1..=10).any(|q| ((t * q as f64).round() - t * q as f64) == 0.0);
        let none = section_measure_estimate(w, (0.0, 1.0), rational, 500, &mut rng).unwrap();
        assert_eq!(none.fraction, 0.0);
        assert!(section_measure_estimate(w, (0.0, 1.0), |_, _| true, 99, &mut rng).is_err());
    }
}
