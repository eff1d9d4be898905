//! Running the checks a scenario asks for.

use std::time::Instant;

use matsumoto::curvature::{
    default_direction_count, quadraticity_check, reversibility_check, sphere_samples,
    weakly_einstein_fit, CurvatureKind, CurvatureProbe, DetectorReport, WeaklyEinsteinFit,
};
use matsumoto::expansion::verify::{
    verify_conditional_identity, verify_expansion_at, ExpansionKind, Status,
};
use matsumoto::expansion::{
    conformal_defect, BundleOptions, Certificate, Evidence, Hypothesis, IdentityKind,
    InvariantBundle, OddBReading,
};
use matsumoto::riemannian::MetricSpec;
use matsumoto::spray::{spray, PhiFamily};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::generate::sample_points;
use crate::report::{CheckRecord, Outcome, Report};
use crate::scenario::{CheckName, Kind, PointConfig, ScenarioConfig, ScenarioError, Tolerances};

/// Everything a check needs, shared by all jobs of one scenario.
pub struct Context {
    pub spec: MetricSpec,
    pub family: PhiFamily,
    pub tolerances: Tolerances,
    pub pair: (usize, usize),
    pub reading: OddBReading,
    pub conformal_construction: bool,
    pub direction_seed: u64,
}

impl Context {
    pub fn from_config(
        config: &ScenarioConfig,
        tol: Option<f64>,
    ) -> Result<Context, ScenarioError> {
        let mut tolerances = config.tolerances;
        if let Some(t) = tol {
            tolerances.expansion = t;
            tolerances.identity = t;
        }
        Ok(Context {
            spec: config.metric_spec()?,
            family: config.family()?,
            tolerances,
            pair: config.pair,
            reading: config.odd_b,
            conformal_construction: config.conformal_construction,
            direction_seed: config.direction_seed,
        })
    }

    fn probe(&self, x: &[f64]) -> matsumoto::Result<CurvatureProbe> {
        CurvatureProbe::new(&self.spec, &self.family, x)
    }

    fn samples(&self, probe: &CurvatureProbe) -> Vec<Vec<f64>> {
        sphere_samples(
            probe.geometry(),
            default_direction_count(probe.dim()),
            self.direction_seed,
        )
    }
}

/// Explicit points followed by sampled ones.
pub fn resolve_points(config: &ScenarioConfig) -> Result<Vec<PointConfig>, ScenarioError> {
    let mut points = config.points.clone();
    if let Some(s) = &config.sampling {
        points.extend(sample_points(&config.metric_spec()?, &config.family()?, s)?);
    }
    Ok(points)
}

fn sup(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

fn relative(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den.max(f64::MIN_POSITIVE)
    }
}

fn curvature_kind(k: Kind) -> CurvatureKind {
    match k {
        Kind::Riemann => CurvatureKind::Riemann,
        Kind::Ricci => CurvatureKind::Ricci,
    }
}

fn expansion_kind(k: Kind) -> ExpansionKind {
    match k {
        Kind::Riemann => ExpansionKind::RiemannA4,
        Kind::Ricci => ExpansionKind::RicciA8,
    }
}

pub fn outcome_of(status: Status) -> Outcome {
    match status {
        Status::Pass => Outcome::Pass,
        Status::Suspect => Outcome::Suspect,
        Status::Fail => Outcome::Fail,
    }
}

fn detector_record(
    mut rec: CheckRecord,
    report: DetectorReport,
    expected: Option<bool>,
) -> CheckRecord {
    rec.residual = Some(report.residual);
    rec.tolerance = Some(report.threshold);
    rec.samples = Some(report.samples);
    rec.outcome = match expected {
        None => Outcome::Info,
        Some(_) if report.marginal => {
            rec.message = Some("residual within a factor 10 of the threshold".into());
            Outcome::Skipped
        }
        Some(e) if e == report.verdict => Outcome::Pass,
        Some(e) => {
            rec.message = Some(format!(
                "expected verdict {e}, detector says {}",
                report.verdict
            ));
            Outcome::Fail
        }
    };
    rec.detail = json!({ "detector": report });
    rec
}

fn curvature_record(
    ctx: &Context,
    mut rec: CheckRecord,
    x: &[f64],
    y: &[f64],
) -> matsumoto::Result<CheckRecord> {
    let probe = ctx.probe(x)?;
    let c = probe.at(y)?;
    let yv = DVector::from_column_slice(y);
    let annihilation = relative((&c.r * &yv).amax(), sup(&c.r) * yv.amax());
    let mut homogeneity: f64 = 0.0;
    for lambda in [0.5, 2.0] {
        let scaled: Vec<f64> = y.iter().map(|v| v * lambda).collect();
        let cl = probe.at(&scaled)?;
        let expected = &c.r * (lambda * lambda);
        homogeneity = homogeneity.max(relative(sup(&(&cl.r - &expected)), sup(&expected)));
    }
    let residual = annihilation.max(homogeneity);
    rec.residual = Some(residual);
    rec.tolerance = Some(ctx.tolerances.invariant);
    rec.outcome = if residual <= ctx.tolerances.invariant {
        Outcome::Pass
    } else {
        Outcome::Fail
    };
    let rows: Vec<Vec<f64>> = (0..c.r.nrows())
        .map(|i| c.r.row(i).iter().copied().collect())
        .collect();
    rec.detail = json!({
        "r": rows,
        "ric": c.ric,
        "alpha": c.alpha(),
        "beta": c.beta(),
        "annihilation": annihilation,
        "homogeneity": homogeneity,
    });
    Ok(rec)
}

fn einstein_fit(ctx: &Context, probe: &CurvatureProbe) -> matsumoto::Result<WeaklyEinsteinFit> {
    weakly_einstein_fit(probe, &ctx.samples(probe))
}

/// Certificates for every hypothesis the identity may use.
fn certificates(
    ctx: &Context,
    kind: IdentityKind,
    probe: &CurvatureProbe,
) -> matsumoto::Result<(Vec<Certificate>, Option<WeaklyEinsteinFit>)> {
    let samples = ctx.samples(probe);
    let tol = ctx.tolerances.detector;
    let mut out = Vec::new();
    let mut fit = None;
    let mut wanted: Vec<Hypothesis> = kind.requirements().into_iter().flatten().collect();
    wanted.dedup();
    for h in wanted {
        let evidence = match h {
            Hypothesis::RiemannReversible => Evidence::Detector(reversibility_check(
                probe,
                &samples,
                CurvatureKind::Riemann,
                tol,
            )?),
            Hypothesis::RicciReversible => Evidence::Detector(reversibility_check(
                probe,
                &samples,
                CurvatureKind::Ricci,
                tol,
            )?),
            Hypothesis::RiemannQuadratic => Evidence::Detector(quadraticity_check(
                probe,
                &samples,
                CurvatureKind::Riemann,
                tol,
            )?),
            Hypothesis::Conformal => Evidence::Residual {
                value: conformal_defect(probe.geometry()),
                tol: ctx.tolerances.conformal,
            },
            Hypothesis::WeaklyEinstein => {
                let f = einstein_fit(ctx, probe)?;
                let e = Evidence::Residual {
                    value: f.residual,
                    tol: ctx.tolerances.einstein,
                };
                fit = Some(f);
                e
            }
        };
        out.push(Certificate {
            hypothesis: h,
            evidence,
        });
    }
    Ok((out, fit))
}

fn identity_record(
    ctx: &Context,
    mut rec: CheckRecord,
    kind: IdentityKind,
    x: &[f64],
    y: &[f64],
) -> matsumoto::Result<CheckRecord> {
    let probe = ctx.probe(x)?;
    let (certs, fit) = certificates(ctx, kind, &probe)?;
    let einstein_ok = certs
        .iter()
        .any(|c| c.hypothesis == Hypothesis::WeaklyEinstein && c.holds());
    let options = BundleOptions {
        conformal: ctx.conformal_construction,
        einstein: if einstein_ok { fit } else { None },
    };
    let bundle =
        InvariantBundle::from_probe(&probe, y, ctx.pair, &options)?.with_odd_b(ctx.reading);
    let report = verify_conditional_identity(kind, &bundle, &certs, ctx.tolerances.identity)?;
    rec.residual = Some(report.residual);
    rec.tolerance = Some(report.tol);
    rec.outcome = outcome_of(report.status);
    rec.detail = serde_json::to_value(&report).expect("identity report serializes");
    Ok(rec)
}

fn expansion_record(
    ctx: &Context,
    mut rec: CheckRecord,
    kind: Kind,
    x: &[f64],
    y: &[f64],
) -> matsumoto::Result<CheckRecord> {
    let probe = ctx.probe(x)?;
    let kind = expansion_kind(kind);
    let tol = ctx.tolerances.expansion;
    let report = verify_expansion_at(kind, &probe, y, ctx.pair, ctx.reading, tol)?;
    let other = match ctx.reading {
        OddBReading::Halved => OddBReading::Verbatim,
        OddBReading::Verbatim => OddBReading::Halved,
    };
    let alternative = verify_expansion_at(kind, &probe, y, ctx.pair, other, tol)?;
    rec.residual = Some(report.residual);
    rec.tolerance = Some(tol);
    rec.outcome = outcome_of(report.status);
    let mut detail = serde_json::to_value(&report).expect("expansion report serializes");
    detail["other_reading"] = json!({
        "reading": other,
        "residual": alternative.residual,
        "status": alternative.status,
    });
    rec.detail = detail;
    Ok(rec)
}

/// Evaluate one check at one point. Errors become `error` records.
pub fn evaluate(
    ctx: &Context,
    check: CheckName,
    point: &PointConfig,
    expected: Option<bool>,
    inputs: &Value,
) -> CheckRecord {
    let rec = CheckRecord::new(check.to_string(), inputs);
    try_evaluate(ctx, check, point, expected, rec.clone()).unwrap_or_else(|e| rec.error(e))
}

/// [`evaluate`] with the error left to the caller.
pub fn try_evaluate(
    ctx: &Context,
    check: CheckName,
    point: &PointConfig,
    expected: Option<bool>,
    rec: CheckRecord,
) -> matsumoto::Result<CheckRecord> {
    let (x, y) = (&point.x[..], &point.y[..]);
    match check {
        CheckName::Spray => {
            let mut rec = rec.clone();
            let s = spray(&ctx.spec, &ctx.family, x, y)?;
            rec.detail = serde_json::to_value(&s).expect("spray serializes");
            Ok(rec)
        }
        CheckName::Curvature => curvature_record(ctx, rec.clone(), x, y),
        CheckName::Reversibility(k) => {
            let probe = ctx.probe(x)?;
            let r = reversibility_check(
                &probe,
                &ctx.samples(&probe),
                curvature_kind(k),
                ctx.tolerances.detector,
            )?;
            Ok(detector_record(rec.clone(), r, expected))
        }
        CheckName::Quadraticity(k) => {
            let probe = ctx.probe(x)?;
            let r = quadraticity_check(
                &probe,
                &ctx.samples(&probe),
                curvature_kind(k),
                ctx.tolerances.detector,
            )?;
            Ok(detector_record(rec.clone(), r, expected))
        }
        CheckName::WeaklyEinstein => {
            let mut rec = rec.clone();
            let fit = einstein_fit(ctx, &ctx.probe(x)?)?;
            rec.residual = Some(fit.residual);
            rec.tolerance = Some(ctx.tolerances.einstein);
            rec.samples = Some(fit.samples);
            let certified = fit.residual < ctx.tolerances.einstein;
            rec.detail = json!({ "fit": fit, "certified": certified });
            Ok(rec)
        }
        CheckName::Expansion(k) => expansion_record(ctx, rec.clone(), k, x, y),
        CheckName::Identity(kind) => identity_record(ctx, rec.clone(), kind, x, y),
    }
}

/// The inputs that determine one record; hashed into its digest.
pub fn record_inputs(
    config: &ScenarioConfig,
    ctx: &Context,
    check: CheckName,
    point: &PointConfig,
) -> Value {
    json!({
        "check": check.to_string(),
        "metric": config.metric,
        "one_form": config.one_form,
        "phi": config.phi,
        "x": point.x,
        "y": point.y,
        "tolerances": ctx.tolerances,
        "pair": ctx.pair,
        "odd_b": ctx.reading,
        "direction_seed": ctx.direction_seed,
    })
}

/// Build a thread pool; `0` means rayon's default.
pub fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Run every requested check at every point. Records come back in
/// `(point, check)` order whatever the schedule.
pub fn run_scenario(
    config: &ScenarioConfig,
    tol: Option<f64>,
    threads: usize,
) -> Result<Report, ScenarioError> {
    let start = Instant::now();
    let ctx = Context::from_config(config, tol)?;
    let points = resolve_points(config)?;
    let mut jobs = Vec::new();
    for check in &config.checks {
        if check.per_point() {
            for k in 0..points.len() {
                jobs.push((*check, k));
            }
        } else {
            // detectors and fits depend on the base point only
            let mut seen: Vec<&[f64]> = Vec::new();
            for (k, p) in points.iter().enumerate() {
                if !seen.contains(&&p.x[..]) {
                    seen.push(&p.x);
                    jobs.push((*check, k));
                }
            }
        }
    }
    jobs.sort_by_key(|(c, k)| (*k, *c));
    let pool = pool(threads);
    let records: Vec<(CheckRecord, f64)> = pool.install(|| {
        jobs.par_iter()
            .map(|(check, k)| {
                let t = Instant::now();
                let point = &points[*k];
                let inputs = record_inputs(config, &ctx, *check, point);
                let mut rec = evaluate(
                    &ctx,
                    *check,
                    point,
                    config.expect.get(check).copied(),
                    &inputs,
                );
                rec.point = Some(*k);
                (rec, t.elapsed().as_secs_f64() * 1e3)
            })
            .collect()
    });
    let mut echo = serde_json::to_value(config).expect("scenario serializes");
    echo["resolved_points"] = serde_json::to_value(&points).expect("points serialize");
    if let Some(t) = tol {
        echo["tol_override"] = json!(t);
    }
    Ok(Report::new(
        "run",
        echo,
        records,
        pool.current_num_threads(),
        start.elapsed().as_secs_f64() * 1e3,
    ))
}
