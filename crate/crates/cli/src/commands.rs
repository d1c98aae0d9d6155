use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use shiftcover_core::approx::{
    build_common_vector, construct_block_vector, verify_against, verify_certificate,
    ApproxCertificate, CommonVectorResult, EpsilonCondition,
};
use shiftcover_core::covering::{
    build_covering, empirical_coverage, nonexistence_certificate, verify_covering,
    CoveringGridReport, CoveringPlan, Interval, NonexistenceCertificate,
};
use shiftcover_core::numeric::MIN_NORMAL_LN;
use shiftcover_core::seq::SequenceSpec;
use shiftcover_core::shift::FiniteVector;
use shiftcover_core::torus::{
    circle_density_check, discrepancy_curve, equally_spaced_phases, joint_density_check,
    star_discrepancy, CircleDensityReport, DiscrepancyReport, JointDensityReport,
};

use crate::output::{artifact_json, csv, fmt_f64, write_file, SCHEMA};
use crate::{CliError, CliResult, Cli, Command, SeqArgs, Outcome, EXIT_PASS, EXIT_VERIFICATION};

fn read_arg(raw: &str) -> CliResult<String> {
    match raw.strip_prefix('@') {
        Some(path) => Ok(fs::read_to_string(path)?),
        None => Ok(raw.to_string()),
    }
}

fn parse_json<T: DeserializeOwned>(raw: &str) -> CliResult<T> {
    Ok(serde_json::from_str(&read_arg(raw)?)?)
}

pub fn parse_interval(raw: &str) -> CliResult<Interval> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    let [lo, hi] = parts[..] else {
        return Err(CliError::Usage(format!("interval must be lo,hi, got {raw:?}")));
    };
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("not a number: {s:?}")))
    };
    Ok(Interval::new(num(lo)?, num(hi)?)?)
}

/// `"0.1"` or `"1/10"`.
pub fn parse_accuracy(raw: &str) -> CliResult<f64> {
    let bad = || CliError::Usage(format!("accuracy must be a positive number or 1/s, got {raw:?}"));
    let value = match raw.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            n / d
        }
        None => raw.trim().parse().map_err(|_| bad())?,
    };
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

#[derive(Serialize)]
struct Versions {
    shiftcover: &'static str,
    shiftcover_core: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    args: &'a [String],
    seed: Option<u64>,
    versions: Versions,
    created_unix: u64,
}

fn manifest(command: &str, args: &[String], seed: Option<u64>) -> CliResult<Vec<u8>> {
    let created_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(artifact_json(
        "manifest",
        &Manifest {
            command,
            args,
            seed,
            versions: Versions {
                shiftcover: env!("CARGO_PKG_VERSION"),
                shiftcover_core: shiftcover_core::VERSION,
            },
            created_unix,
        },
    )?)
}

fn finish(
    out: Option<&Path>,
    exit_code: i32,
    artifacts: Vec<(String, Vec<u8>)>,
) -> CliResult<Outcome> {
    if let Some(dir) = out {
        for (name, bytes) in &artifacts {
            write_file(dir, name, bytes)?;
        }
    }
    Ok(Outcome {
        exit_code,
        artifacts,
    })
}

fn status(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_VERIFICATION
    }
}

fn require_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::Usage(format!("--seed is required for {what}")))
}

pub fn run(cli: Cli, raw: &[String]) -> CliResult<Outcome> {
    match cli.command {
        Command::Cover {
            common,
            interval,
            epsilon,
            start,
            grid,
        } => cover(&common, &interval, epsilon, start, grid, raw),
        Command::Construct {
            common,
            interval,
            accuracy,
            target,
            center,
            radius,
            grid,
        } => construct(&common, &interval, &accuracy, &target, center.as_deref(), radius, grid, raw),
        Command::Common {
            common,
            conditions,
            initial,
            radius,
            grid,
        } => common_cmd(&common, &conditions, initial.as_deref(), radius, grid, raw),
        Command::Nonexist {
            common,
            interval,
            epsilon,
            vectors,
            seed,
        } => nonexist(&common, &interval, epsilon, vectors, seed, raw),
        Command::Weyl {
            common,
            theta,
            random_theta,
            count,
            phases,
            tol,
            seed,
        } => weyl(&common, theta, random_theta, count, phases, tol, seed, raw),
        Command::Joint {
            common,
            vector,
            from_common,
            targets,
            r,
            theta,
            phases,
            s,
            count,
        } => joint(
            &common,
            vector.as_deref(),
            from_common.as_deref(),
            targets.as_deref(),
            r,
            theta,
            phases,
            s,
            count,
            raw,
        ),
        Command::Verify { artifact } => verify(&artifact),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CoverArtifact {
    pub sequence: SequenceSpec,
    pub plan: CoveringPlan,
    pub report: CoveringGridReport,
    pub pass: bool,
}

fn cover(common: &SeqArgs, interval: &str, epsilon: f64, start: u64, grid: usize, raw: &[String]) -> CliResult<Outcome> {
    let seq: SequenceSpec = parse_json(&common.seq)?;
    let interval = parse_interval(interval)?;
    let plan = build_covering(interval, epsilon, &seq, start)?;
    let report = verify_covering(&plan, grid)?;
    let rows = report.rows.iter().map(|r| {
        vec![fmt_f64(r.lambda), r.block.to_string(), fmt_f64(r.error)]
    });
    let grid_csv = csv(&["lambda", "block", "error"], rows);
    let pass = report.pass;
    let body = CoverArtifact {
        sequence: seq,
        plan,
        report,
        pass,
    };
    finish(
        common.out.as_deref(),
        status(pass),
        vec![
            ("plan.json".into(), artifact_json("covering_plan", &body)?),
            ("grid.csv".into(), grid_csv),
            ("manifest.json".into(), manifest("cover", raw, None)?),
        ],
    )
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConstructArtifact {
    pub certificate: ApproxCertificate,
    pub pass: bool,
}

#[allow(clippy::too_many_arguments)]
fn construct(
    common: &SeqArgs,
    interval: &str,
    accuracy: &str,
    target: &str,
    center: Option<&str>,
    radius: f64,
    grid: usize,
    raw: &[String],
) -> CliResult<Outcome> {
    let seq: SequenceSpec = parse_json(&common.seq)?;
    let condition = EpsilonCondition::new(parse_json(target)?, parse_interval(interval)?, parse_accuracy(accuracy)?)?;
    let center: FiniteVector = match center {
        Some(c) => parse_json(c)?,
        None => FiniteVector::zero(),
    };
    let certificate = construct_block_vector(&condition, &center, radius, &seq, grid)?;
    let rows = certificate.grid_report.rows.iter().map(|r| {
        vec![
            fmt_f64(r.lambda),
            r.best_v.map_or(String::new(), |v| v.to_string()),
            fmt_f64(r.error),
        ]
    });
    let grid_csv = csv(&["lambda", "best_v", "error"], rows);
    let pass = certificate.grid_report.pass;
    let body = ConstructArtifact { certificate, pass };
    finish(
        common.out.as_deref(),
        status(pass),
        vec![
            ("certificate.json".into(), artifact_json("approx_certificate", &body)?),
            ("grid.csv".into(), grid_csv),
            ("manifest.json".into(), manifest("construct", raw, None)?),
        ],
    )
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CommonArtifact {
    pub sequence: SequenceSpec,
    pub radius: f64,
    pub grid: usize,
    pub result: CommonVectorResult,
    pub pass: bool,
}

fn common_cmd(
    common: &SeqArgs,
    conditions: &str,
    initial: Option<&str>,
    radius: f64,
    grid: usize,
    raw: &[String],
) -> CliResult<Outcome> {
    let seq: SequenceSpec = parse_json(&common.seq)?;
    let conditions: Vec<EpsilonCondition> = parse_json(conditions)?;
    for c in &conditions {
        c.validate()?;
    }
    let initial: FiniteVector = match initial {
        Some(v) => parse_json(v)?,
        None => FiniteVector::zero(),
    };
    let result = build_common_vector(&conditions, &seq, &initial, radius, grid)?;
    let pass = result.all_pass();
    let body = CommonArtifact {
        sequence: seq,
        radius,
        grid,
        result,
        pass,
    };
    finish(
        common.out.as_deref(),
        status(pass),
        vec![
            ("common.json".into(), artifact_json("common_vector", &body)?),
            ("manifest.json".into(), manifest("common", raw, None)?),
        ],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCheck {
    pub vector_id: usize,
    pub nonzero_entries: usize,
    pub measure: f64,
    pub within_bound: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NonexistArtifact {
    pub certificate: NonexistenceCertificate,
    pub epsilon_override: Option<f64>,
    pub seed: Option<u64>,
    pub coverage: Vec<CoverageCheck>,
    pub pass: bool,
}

/// Random vector with `x_{k_v + 1} = lambda_v^{-k_v} e^{i phi_v}` for
/// `lambda_v` uniform in the interval, so each set `G_v` is nonempty.
/// Entries below the normal f64 range are left at zero.
pub fn random_coverage_vector<R: Rng>(
    seq: &SequenceSpec,
    interval: Interval,
    from: u64,
    rng: &mut R,
) -> CliResult<FiniteVector> {
    let mut x = FiniteVector::zero();
    for v in from..=seq.horizon() {
        let k = seq.materialize(v)?;
        let lambda = rng.gen_range(interval.lo()..=interval.hi());
        let phi = rng.gen_range(-0.05..0.05);
        let ln_abs = -(k as f64) * f64::ln(lambda);
        if ln_abs > MIN_NORMAL_LN {
            x.set(k + 1, Complex64::from_polar(ln_abs.exp(), phi));
        }
    }
    Ok(x)
}

pub fn nonexist_body(
    seq: SequenceSpec,
    interval: Interval,
    epsilon: Option<f64>,
    vectors: usize,
    seed: Option<u64>,
) -> CliResult<NonexistArtifact> {
    let certificate = nonexistence_certificate(interval, &seq, epsilon)?;
    let mut coverage = Vec::new();
    if vectors > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(require_seed(seed, "--vectors")?);
        for vector_id in 0..vectors {
            let x = random_coverage_vector(&seq, interval, certificate.n0, &mut rng)?;
            let measure = empirical_coverage(&x, &seq, interval, certificate.epsilon_1, certificate.n0..=seq.horizon())?;
            coverage.push(CoverageCheck {
                vector_id,
                nonzero_entries: x.nnz(),
                measure,
                within_bound: measure <= certificate.bound_sum + 1e-9 && measure < interval.width(),
            });
        }
    }
    let pass = certificate.valid && coverage.iter().all(|c| c.within_bound);
    Ok(NonexistArtifact {
        certificate,
        epsilon_override: epsilon,
        seed,
        coverage,
        pass,
    })
}

fn nonexist(
    common: &SeqArgs,
    interval: &str,
    epsilon: Option<f64>,
    vectors: usize,
    seed: Option<u64>,
    raw: &[String],
) -> CliResult<Outcome> {
    let seq: SequenceSpec = parse_json(&common.seq)?;
    let body = nonexist_body(seq, parse_interval(interval)?, epsilon, vectors, seed)?;
    finish(
        common.out.as_deref(),
        status(body.pass),
        vec![
            ("certificate.json".into(), artifact_json("nonexistence", &body)?),
            ("manifest.json".into(), manifest("nonexist", raw, seed)?),
        ],
    )
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WeylArtifact {
    pub sequence: SequenceSpec,
    pub seed: Option<u64>,
    pub discrepancy: DiscrepancyReport,
    pub curve: Vec<(u64, f64)>,
    pub circle: CircleDensityReport,
}

fn checkpoints(count: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(10u64), |n| n.checked_mul(10))
        .take_while(|&n| n < count)
        .collect();
    out.push(count);
    out
}

pub fn weyl_body(seq: SequenceSpec, theta: f64, count: u64, phases: usize, tol: f64, seed: Option<u64>) -> CliResult<WeylArtifact> {
    let discrepancy = star_discrepancy(&seq, theta, count, false)?;
    let curve = discrepancy_curve(&seq, theta, &checkpoints(count))?;
    let circle = circle_density_check(&seq, theta, count, &equally_spaced_phases(phases), tol)?;
    Ok(WeylArtifact {
        sequence: seq,
        seed,
        discrepancy,
        curve,
        circle,
    })
}

#[allow(clippy::too_many_arguments)]
fn weyl(
    common: &SeqArgs,
    theta: Option<f64>,
    random_theta: bool,
    count: u64,
    phases: usize,
    tol: f64,
    seed: Option<u64>,
    raw: &[String],
) -> CliResult<Outcome> {
    let seq: SequenceSpec = parse_json(&common.seq)?;
    let theta = match (theta, random_theta) {
        (Some(t), false) => t,
        (None, true) => ChaCha8Rng::seed_from_u64(require_seed(seed, "--random-theta")?).gen::<f64>(),
        _ => return Err(CliError::Usage("give exactly one of --theta or --random-theta".into())),
    };
    let body = weyl_body(seq, theta, count, phases, tol, seed)?;
    let curve_csv = csv(
        &["n", "star_discrepancy"],
        body.curve.iter().map(|(n, d)| vec![n.to_string(), fmt_f64(*d)]),
    );
    finish(
        common.out.as_deref(),
        EXIT_PASS,
        vec![
            ("weyl.json".into(), artifact_json("weyl", &body)?),
            ("discrepancy.csv".into(), curve_csv),
            ("manifest.json".into(), manifest("weyl", raw, seed)?),
        ],
    )
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JointArtifact {
    pub sequence: SequenceSpec,
    pub vector: FiniteVector,
    pub vector_targets: Vec<FiniteVector>,
    pub phases: usize,
    pub report: JointDensityReport,
    pub pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn joint_body(
    seq: SequenceSpec,
    vector: FiniteVector,
    vector_targets: Vec<FiniteVector>,
    r: f64,
    theta: f64,
    phases: usize,
    s: u64,
    count: u64,
) -> CliResult<JointArtifact> {
    let report = joint_density_check(&vector, &seq, r, theta, &vector_targets, &equally_spaced_phases(phases), s, count)?;
    let pass = report.pass;
    Ok(JointArtifact {
        sequence: seq,
        vector,
        vector_targets,
        phases,
        report,
        pass,
    })
}

#[allow(clippy::too_many_arguments)]
fn joint(
    common: &SeqArgs,
    vector: Option<&str>,
    from_common: Option<&Path>,
    targets: Option<&str>,
    r: f64,
    theta: f64,
    phases: usize,
    s: u64,
    count: Option<u64>,
    raw: &[String],
) -> CliResult<Outcome> {
    let seq: SequenceSpec = parse_json(&common.seq)?;
    let source: Option<CommonArtifact> = match from_common {
        Some(p) => Some(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => None,
    };
    let vector = match (vector, &source) {
        (Some(v), _) => parse_json(v)?,
        (None, Some(a)) => a.result.vector.clone(),
        (None, None) => return Err(CliError::Usage("need --vector or --from-common".into())),
    };
    let vector_targets: Vec<FiniteVector> = match (targets, &source) {
        (Some(t), _) => parse_json(t)?,
        (None, Some(a)) => a.result.certificates.iter().map(|c| c.condition.target.clone()).collect(),
        (None, None) => return Err(CliError::Usage("need --targets".into())),
    };
    let count = count.unwrap_or(seq.horizon());
    let body = joint_body(seq, vector, vector_targets, r, theta, phases, s, count)?;
    finish(
        common.out.as_deref(),
        status(body.pass),
        vec![
            ("joint.json".into(), artifact_json("joint", &body)?),
            ("manifest.json".into(), manifest("joint", raw, None)?),
        ],
    )
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub artifact: PathBuf,
    pub artifact_kind: String,
    pub recorded_pass: bool,
    pub recomputed_pass: bool,
    pub consistent: bool,
}

fn body_of<T: DeserializeOwned>(value: serde_json::Value) -> CliResult<T> {
    Ok(serde_json::from_value(value)?)
}

/// Recomputes `(recorded, recomputed)` pass status of an artifact.
pub fn recheck_artifact(value: serde_json::Value) -> CliResult<(String, bool, bool)> {
    if value.get("schema").and_then(|s| s.as_str()) != Some(SCHEMA) {
        return Err(CliError::Usage(format!("artifact schema is not {SCHEMA}")));
    }
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| CliError::Usage("artifact has no kind".into()))?
        .to_string();
    let (recorded, recomputed) = match kind.as_str() {
        "covering_plan" => {
            let a: CoverArtifact = body_of(value)?;
            let rebuilt = build_covering(a.plan.interval, a.plan.epsilon, &a.sequence, a.plan.start_index)?;
            let report = verify_covering(&a.plan, a.report.grid_size)?;
            (a.pass, report.pass && rebuilt == a.plan)
        }
        "approx_certificate" => {
            let a: ConstructArtifact = body_of(value)?;
            let mut report = verify_certificate(&a.certificate, a.certificate.grid_report.grid_size)?;
            report.rows.clear();
            (a.pass, report.pass && report == a.certificate.grid_report)
        }
        "common_vector" => {
            let a: CommonArtifact = body_of(value)?;
            let mut ok = true;
            for c in &a.result.certificates {
                let r = verify_against(&a.result.vector, &c.condition, &c.sequence, c.cutoff, &c.center, c.center_radius, a.grid)?;
                ok &= r.pass && r.margin > 0.0;
            }
            (a.pass, ok)
        }
        "nonexistence" => {
            let a: NonexistArtifact = body_of(value)?;
            let again = nonexist_body(
                a.certificate.sequence.clone(),
                a.certificate.interval,
                a.epsilon_override,
                a.coverage.len(),
                a.seed,
            )?;
            (a.pass, again.pass && again.coverage == a.coverage && again.certificate == a.certificate)
        }
        "weyl" => {
            let a: WeylArtifact = body_of(value)?;
            let c = &a.circle;
            let again = weyl_body(a.sequence.clone(), a.discrepancy.theta, a.discrepancy.count, c.witnesses.len(), c.tolerance, a.seed)?;
            let same = again.discrepancy == a.discrepancy && again.circle == a.circle && again.curve == a.curve;
            (true, same)
        }
        "joint" => {
            let a: JointArtifact = body_of(value)?;
            let rep = &a.report;
            let again = joint_body(a.sequence.clone(), a.vector.clone(), a.vector_targets.clone(), rep.r, rep.theta, a.phases, rep.s, rep.count)?;
            (a.pass, again.pass && again.report == a.report)
        }
        other => return Err(CliError::Usage(format!("unknown artifact kind {other:?}"))),
    };
    Ok((kind, recorded, recomputed))
}

fn verify(path: &Path) -> CliResult<Outcome> {
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let (artifact_kind, recorded_pass, recomputed_pass) = recheck_artifact(value)?;
    let consistent = recorded_pass == recomputed_pass;
    let report = VerifyReport {
        artifact: path.to_path_buf(),
        artifact_kind,
        recorded_pass,
        recomputed_pass,
        consistent,
    };
    Ok(Outcome {
        exit_code: status(consistent && recomputed_pass),
        artifacts: vec![("verify.json".into(), artifact_json("verify", &report)?)],
    })
}
