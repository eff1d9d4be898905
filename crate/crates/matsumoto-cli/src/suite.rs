//! Multi-instance suites: table verification and the reversibility theorems.

use std::time::Instant;

use matsumoto::curvature::{
    quadraticity_check, reversibility_check, weakly_einstein_fit, CurvatureKind, CurvatureProbe,
};
use matsumoto::expansion::{IdentityKind, OddBReading, Table};
use rayon::prelude::*;
use serde_json::json;

use crate::checks::{pool, record_inputs, try_evaluate, Context};
use crate::generate::{generate_instance, InstanceClass};
use crate::report::{CheckRecord, Outcome, Report};
use crate::scenario::{
    CheckName, Kind, MetricConfig, OneFormConfig, PhiConfig, PointConfig, ScenarioConfig,
    ScenarioError, Tolerances, SCHEMA,
};

/// Dimension used for a seed: cycles through 2, 3, 4.
pub fn dim_for_seed(seed: u64) -> usize {
    2 + (seed % 3) as usize
}

/// The check that exercises a table, by table tag or `closed` for the closed form.
pub fn table_check(tag: &str) -> Option<CheckName> {
    if tag == "closed" {
        return Some(CheckName::Identity(IdentityKind::A16Rquad));
    }
    Some(match Table::from_tag(tag)? {
        Table::T => CheckName::Expansion(Kind::Riemann),
        Table::D => CheckName::Expansion(Kind::Ricci),
        Table::DPrime => CheckName::Identity(IdentityKind::A1Reversible),
        Table::DDoublePrime => CheckName::Identity(IdentityKind::A2Conformal),
        Table::TPrime => CheckName::Identity(IdentityKind::A5Rrev),
        Table::A => CheckName::Identity(IdentityKind::S3WeaklyEinstein),
        Table::APrime => CheckName::Identity(IdentityKind::S5WeaklyEinsteinConformal),
    })
}

/// Every accepted `--table` value.
pub fn table_tags() -> Vec<&'static str> {
    Table::ALL
        .iter()
        .map(|t| t.tag())
        .chain(["closed"])
        .collect()
}

fn instances(seeds: u64, classes: &[InstanceClass]) -> Result<Vec<ScenarioConfig>, ScenarioError> {
    let mut out = Vec::new();
    for seed in 1..=seeds {
        for class in classes {
            out.push(generate_instance(seed, dim_for_seed(seed), *class)?);
        }
    }
    Ok(out)
}

pub struct AppendixOptions {
    pub tables: Vec<String>,
    pub seeds: u64,
    pub classes: Vec<InstanceClass>,
    pub reading: OddBReading,
    pub tol: Option<f64>,
    pub threads: usize,
}

/// Check the named tables on `seeds × classes` generated instances, at every
/// generated point. Conditional sums whose hypotheses fail are `skipped`.
pub fn verify_appendix(opts: &AppendixOptions) -> Result<Report, ScenarioError> {
    let start = Instant::now();
    let mut checks = Vec::new();
    for tag in &opts.tables {
        checks.push(table_check(tag).ok_or_else(|| ScenarioError::Field {
            path: "--table".into(),
            message: format!(
                "unknown table `{tag}`; expected one of {}",
                table_tags().join(", ")
            ),
        })?);
    }
    let mut jobs = Vec::new();
    for mut inst in instances(opts.seeds, &opts.classes)? {
        inst.odd_b = opts.reading;
        let ctx = Context::from_config(&inst, opts.tol)?;
        for check in &checks {
            for k in 0..inst.points.len() {
                jobs.push((inst.clone(), *check, k, ctx.tolerances));
            }
        }
    }
    let pool = pool(opts.threads);
    let records: Vec<(CheckRecord, f64)> = pool.install(|| {
        jobs.par_iter()
            .map(|(inst, check, k, _)| {
                let t = Instant::now();
                let ctx = Context::from_config(inst, opts.tol).expect("validated above");
                let point = &inst.points[*k];
                let inputs = record_inputs(inst, &ctx, *check, point);
                let base = CheckRecord::new(check.to_string(), &inputs);
                let mut rec = match try_evaluate(&ctx, *check, point, None, base.clone()) {
                    Ok(r) => r,
                    Err(matsumoto::Error::HypothesisNotCertified(m)) => {
                        let mut r = base;
                        r.outcome = Outcome::Skipped;
                        r.message = Some(m);
                        r
                    }
                    Err(e) => base.error(e),
                };
                rec.instance = Some(inst.name.clone());
                rec.point = Some(*k);
                (rec, t.elapsed().as_secs_f64() * 1e3)
            })
            .collect()
    });
    let input = json!({
        "tables": opts.tables,
        "seeds": opts.seeds,
        "classes": opts.classes,
        "odd_b": opts.reading,
        "tol": opts.tol,
    });
    Ok(Report::new(
        "verify_appendix",
        input,
        records,
        pool.current_num_threads(),
        start.elapsed().as_secs_f64() * 1e3,
    ))
}

/// The round 2-sphere with `β = 0`: weakly Einstein with `σ = 1`.
pub fn sphere_instance() -> ScenarioConfig {
    ScenarioConfig {
        schema: SCHEMA.into(),
        name: "sphere-beta0".into(),
        dim: 2,
        metric: MetricConfig::StereographicSphere { radius: 1.0 },
        one_form: OneFormConfig::Zero,
        phi: PhiConfig::Matsumoto,
        points: vec![PointConfig {
            x: vec![0.3, -0.2],
            y: vec![0.4, 1.0],
        }],
        sampling: None,
        checks: vec![CheckName::WeaklyEinstein],
        tolerances: Tolerances::default(),
        pair: (0, 1),
        odd_b: OddBReading::Halved,
        conformal_construction: true,
        direction_seed: 0,
        expect: Default::default(),
    }
}

fn theorem_records(inst: &ScenarioConfig, detector_tol: f64) -> Vec<CheckRecord> {
    let ctx = Context::from_config(inst, None).expect("generated scenarios are valid");
    let x = &inst.points[0].x;
    let inputs = json!({
        "instance": inst.name,
        "metric": inst.metric,
        "one_form": inst.one_form,
        "x": x,
        "detector_tol": detector_tol,
        "direction_seed": inst.direction_seed,
    });
    let names = [
        "theorem_ricci_iff",
        "theorem_riemann_iff",
        "theorem_weakly_einstein",
    ];
    let fresh = |name: &str| {
        let mut r = CheckRecord::new(name, &inputs);
        r.instance = Some(inst.name.clone());
        r
    };
    let probe = match CurvatureProbe::new(&ctx.spec, &ctx.family, x) {
        Ok(p) => p,
        Err(e) => return names.iter().map(|n| fresh(n).error(&e)).collect(),
    };
    let samples = matsumoto::curvature::sphere_samples(
        probe.geometry(),
        matsumoto::curvature::default_direction_count(probe.dim()),
        inst.direction_seed,
    );
    let mut out = Vec::new();
    let mut ricci_reversible = None;
    for (name, kind) in [
        ("theorem_ricci_iff", CurvatureKind::Ricci),
        ("theorem_riemann_iff", CurvatureKind::Riemann),
    ] {
        let mut rec = fresh(name);
        let pair = reversibility_check(&probe, &samples, kind, detector_tol).and_then(|rev| {
            Ok((
                rev,
                quadraticity_check(&probe, &samples, kind, detector_tol)?,
            ))
        });
        match pair {
            Ok((rev, quad)) => {
                if kind == CurvatureKind::Ricci {
                    ricci_reversible = Some(rev.clone());
                }
                rec.residual = Some(rev.residual.max(quad.residual));
                rec.tolerance = Some(detector_tol);
                rec.samples = Some(rev.samples);
                rec.outcome = if rev.marginal || quad.marginal {
                    rec.message = Some("marginal detector residual".into());
                    Outcome::Skipped
                } else if rev.verdict == quad.verdict {
                    Outcome::Pass
                } else {
                    rec.message = Some(format!(
                        "reversible: {}, quadratic: {}",
                        rev.verdict, quad.verdict
                    ));
                    Outcome::Fail
                };
                rec.detail = json!({ "reversibility": rev, "quadraticity": quad });
            }
            Err(e) => rec = rec.error(e),
        }
        out.push(rec);
    }
    let mut rec = fresh("theorem_weakly_einstein");
    match (weakly_einstein_fit(&probe, &samples), ricci_reversible) {
        (Ok(fit), Some(rev)) => {
            rec.residual = Some(fit.residual);
            rec.tolerance = Some(ctx.tolerances.einstein);
            rec.samples = Some(fit.samples);
            rec.outcome = if fit.residual >= ctx.tolerances.einstein {
                rec.message = Some("not weakly Einstein".into());
                Outcome::Skipped
            } else if rev.verdict {
                Outcome::Pass
            } else {
                rec.message = Some("weakly Einstein but not Ricci-reversible".into());
                Outcome::Fail
            };
            rec.detail = json!({ "fit": fit, "ricci_reversibility": rev });
        }
        (Err(e), _) => rec = rec.error(e),
        (Ok(_), None) => rec = rec.error("Ricci detector failed"),
    }
    out.push(rec);
    out
}

/// Detector agreement on `seeds × classes` instances plus the round sphere.
pub fn theorem_suite(
    seeds: u64,
    detector_tol: Option<f64>,
    threads: usize,
) -> Result<Report, ScenarioError> {
    let start = Instant::now();
    let tol = detector_tol.unwrap_or(matsumoto::curvature::DETECTOR_THRESHOLD);
    let mut all = instances(seeds, &InstanceClass::ALL)?;
    all.push(sphere_instance());
    let pool = pool(threads);
    let records: Vec<(CheckRecord, f64)> = pool.install(|| {
        all.par_iter()
            .map(|inst| {
                let t = Instant::now();
                let recs = theorem_records(inst, tol);
                let ms = t.elapsed().as_secs_f64() * 1e3 / recs.len() as f64;
                recs.into_iter().map(|r| (r, ms)).collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    let input = json!({ "seeds": seeds, "detector_tol": tol, "classes": InstanceClass::ALL });
    Ok(Report::new(
        "theorem_suite",
        input,
        records,
        pool.current_num_threads(),
        start.elapsed().as_secs_f64() * 1e3,
    ))
}
