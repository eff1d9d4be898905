//! Seeded instances in three classes: constant, conformal and generic one-forms.

use std::collections::BTreeMap;
use std::fmt;

use matsumoto::curvature::CurvatureProbe;
use matsumoto::riemannian::{LocalGeometry, MetricSpec};
use matsumoto::spray::PhiFamily;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scenario::{
    CheckName, Kind, MetricConfig, OneFormConfig, PhiConfig, PointConfig, SamplingConfig,
    ScenarioConfig, ScenarioError, Tolerances, SCHEMA,
};

/// Points written into a generated scenario.
pub const GENERATED_POINTS: usize = 3;

/// Rejection sampling gives up after this many draws per point.
const MAX_DRAWS: usize = 10_000;

/// Smallest `|β/α|` accepted, so the closed-form check stays defined.
const MIN_SLOPE: f64 = 1e-3;

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum InstanceClass {
    /// Euclidean metric, constant one-form with `|b|² < 0.04`
    Parallel,
    /// Euclidean metric, `b_i = c x_i + A_ij x_j`
    Conformal,
    /// perturbed metric, quadratic polynomial one-form
    Generic,
}

impl InstanceClass {
    pub const ALL: [InstanceClass; 3] = [
        InstanceClass::Parallel,
        InstanceClass::Conformal,
        InstanceClass::Generic,
    ];

    fn stream(self) -> u64 {
        match self {
            InstanceClass::Parallel => 1,
            InstanceClass::Conformal => 2,
            InstanceClass::Generic => 3,
        }
    }
}

impl fmt::Display for InstanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceClass::Parallel => "parallel",
            InstanceClass::Conformal => "conformal",
            InstanceClass::Generic => "generic",
        })
    }
}

/// Four decimals keep generated files readable and exactly reproducible.
fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    round4(rng.random_range(lo..hi))
}

fn coefficient_term(c: f64, monomial: &str) -> Option<String> {
    if c == 0.0 {
        return None;
    }
    let c = if c < 0.0 {
        format!("({c})")
    } else {
        format!("{c}")
    };
    Some(if monomial.is_empty() {
        c
    } else {
        format!("{c}*{monomial}")
    })
}

fn polynomial(constant: f64, terms: &[(f64, String)]) -> String {
    let parts: Vec<String> = std::iter::once(coefficient_term(constant, ""))
        .chain(terms.iter().map(|(c, m)| coefficient_term(*c, m)))
        .flatten()
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

fn var(k: usize) -> String {
    format!("x{}", k + 1)
}

fn parallel_form(rng: &mut ChaCha8Rng, n: usize) -> OneFormConfig {
    loop {
        let v: Vec<f64> = (0..n).map(|_| uniform(rng, -0.2, 0.2)).collect();
        let norm2: f64 = v.iter().map(|c| c * c).sum();
        if norm2 < 0.04 && norm2 > 1e-4 {
            return OneFormConfig::Parallel { vector: v };
        }
    }
}

fn conformal_form(rng: &mut ChaCha8Rng, n: usize) -> OneFormConfig {
    let c = uniform(rng, 0.05, 0.2);
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = uniform(rng, -0.2, 0.2);
            a[i][j] = v;
            a[j][i] = -v;
        }
    }
    OneFormConfig::Conformal {
        c,
        antisym: a,
        offset: None,
    }
}

fn generic_metric(rng: &mut ChaCha8Rng, n: usize) -> MetricConfig {
    let mut a = vec![vec![String::new(); n]; n];
    for i in 0..n {
        for j in i..n {
            let terms: Vec<(f64, String)> = (0..n)
                .map(|k| (uniform(rng, -0.05, 0.05), var(k)))
                .collect();
            let entry = polynomial(if i == j { 1.0 } else { 0.0 }, &terms);
            a[i][j] = entry.clone();
            a[j][i] = entry;
        }
    }
    MetricConfig::Custom { a }
}

fn generic_form(rng: &mut ChaCha8Rng, n: usize) -> OneFormConfig {
    let b = (0..n)
        .map(|_| {
            let constant = uniform(rng, -0.15, 0.15);
            let mut terms: Vec<(f64, String)> =
                (0..n).map(|k| (uniform(rng, -0.2, 0.2), var(k))).collect();
            for k in 0..n {
                for l in k..n {
                    terms.push((uniform(rng, -0.1, 0.1), format!("{}*{}", var(k), var(l))));
                }
            }
            polynomial(constant, &terms)
        })
        .collect();
    OneFormConfig::Custom { b }
}

/// Whether `(x, y)` is a usable evaluation point: `|β/α|` within bounds at
/// both `±y`, `b²` small enough that every direction stays regular, and the
/// curvature evaluable at both `±y`.
fn admissible(spec: &MetricSpec, family: &PhiFamily, x: &[f64], y: &[f64], max_slope: f64) -> bool {
    let Ok(g) = LocalGeometry::at(spec, x) else {
        return false;
    };
    let yv = DVector::from_column_slice(y);
    let alpha = g.alpha(&yv);
    let slope = g.b.dot(&yv) / alpha;
    if !(slope.abs() < max_slope && slope.abs() > MIN_SLOPE && g.b_norm2() < 0.2) {
        return false;
    }
    let Ok(probe) = CurvatureProbe::new(spec, family, x) else {
        return false;
    };
    let minus: Vec<f64> = y.iter().map(|v| -v).collect();
    probe.at(y).is_ok() && probe.at(&minus).is_ok()
}

/// `y` rescaled to `α`-length one (to 4 decimals), so residual floors of 1
/// are relative to a unit-size direction.
fn unit_direction(spec: &MetricSpec, x: &[f64], y: Vec<f64>) -> Option<Vec<f64>> {
    let g = LocalGeometry::at(spec, x).ok()?;
    let alpha = g.alpha(&DVector::from_column_slice(&y));
    if !(alpha > 0.05) {
        return None;
    }
    Some(y.iter().map(|v| round4(v / alpha)).collect())
}

/// Draw points by rejection; deterministic in the sampling seed.
pub fn sample_points(
    spec: &MetricSpec,
    family: &PhiFamily,
    sampling: &SamplingConfig,
) -> Result<Vec<PointConfig>, ScenarioError> {
    let n = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut out = Vec::with_capacity(sampling.count);
    for _ in 0..sampling.count {
        let mut found = None;
        for _ in 0..MAX_DRAWS {
            let x: Vec<f64> = (0..n)
                .map(|_| uniform(&mut rng, -sampling.half_width, sampling.half_width))
                .collect();
            let y: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
            let Some(y) = unit_direction(spec, &x, y) else {
                continue;
            };
            if admissible(spec, family, &x, &y, sampling.max_slope) {
                found = Some(PointConfig { x, y });
                break;
            }
        }
        out.push(found.ok_or_else(|| ScenarioError::Field {
            path: "sampling".into(),
            message: format!("no admissible point after {MAX_DRAWS} draws"),
        })?);
    }
    Ok(out)
}

fn checks_for(class: InstanceClass) -> Vec<CheckName> {
    let mut checks = vec![
        CheckName::Spray,
        CheckName::Curvature,
        CheckName::Reversibility(Kind::Riemann),
        CheckName::Reversibility(Kind::Ricci),
        CheckName::Quadraticity(Kind::Riemann),
        CheckName::Quadraticity(Kind::Ricci),
        CheckName::WeaklyEinstein,
        CheckName::Expansion(Kind::Riemann),
        CheckName::Expansion(Kind::Ricci),
    ];
    if class == InstanceClass::Parallel {
        // flat with a constant form: reversible, conformal with c = 0, Ricci-flat
        checks.extend(matsumoto::expansion::IdentityKind::ALL.map(CheckName::Identity));
    }
    checks
}

/// A deterministic scenario for `(seed, dim, class)`; `dim` must be 2, 3 or 4.
pub fn generate_instance(
    seed: u64,
    dim: usize,
    class: InstanceClass,
) -> Result<ScenarioConfig, ScenarioError> {
    if !(2..=4).contains(&dim) {
        return Err(ScenarioError::Field {
            path: "dim".into(),
            message: format!("generated instances have dimension 2, 3 or 4, not {dim}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(class.stream() * 8 + dim as u64);
    let (metric, one_form) = match class {
        InstanceClass::Parallel => (MetricConfig::Euclidean, parallel_form(&mut rng, dim)),
        InstanceClass::Conformal => (MetricConfig::Euclidean, conformal_form(&mut rng, dim)),
        InstanceClass::Generic => {
            let metric = generic_metric(&mut rng, dim);
            (metric, generic_form(&mut rng, dim))
        }
    };
    let mut expect = BTreeMap::new();
    if class == InstanceClass::Parallel {
        for k in [Kind::Riemann, Kind::Ricci] {
            expect.insert(CheckName::Reversibility(k), true);
            expect.insert(CheckName::Quadraticity(k), true);
        }
    }
    let mut config = ScenarioConfig {
        schema: SCHEMA.into(),
        name: format!("{class}-d{dim}-s{seed}"),
        dim,
        metric,
        one_form,
        phi: PhiConfig::Matsumoto,
        points: Vec::new(),
        sampling: None,
        checks: checks_for(class),
        tolerances: Tolerances::default(),
        pair: (0, 1),
        odd_b: matsumoto::expansion::OddBReading::Halved,
        conformal_construction: class != InstanceClass::Generic,
        direction_seed: seed,
        expect,
    };
    let sampling = SamplingConfig {
        count: GENERATED_POINTS,
        seed: rng.random(),
        half_width: 0.5,
        max_slope: 0.3,
    };
    config.points = sample_points(&config.metric_spec()?, &config.family()?, &sampling)?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_have_unit_length() {
        for class in InstanceClass::ALL {
            let c = generate_instance(3, 3, class).unwrap();
            let spec = c.metric_spec().unwrap();
            for p in &c.points {
                let g = LocalGeometry::at(&spec, &p.x).unwrap();
                let alpha = g.alpha(&DVector::from_column_slice(&p.y));
                assert!((alpha - 1.0).abs() < 1e-3, "{class:?}: {alpha}");
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        for class in InstanceClass::ALL {
            let a = generate_instance(1, 2, class).unwrap();
            let b = generate_instance(1, 2, class).unwrap();
            assert_eq!(a.to_json(), b.to_json());
            assert_ne!(
                a.to_json(),
                generate_instance(2, 2, class).unwrap().to_json()
            );
        }
    }

    #[test]
    fn conformal_matrix_is_antisymmetric() {
        let s = generate_instance(2, 3, InstanceClass::Conformal).unwrap();
        let OneFormConfig::Conformal { c, antisym, .. } = &s.one_form else {
            panic!("conformal class must give a conformal form");
        };
        assert!((0.05..0.2).contains(c));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(antisym[i][j], -antisym[j][i]);
            }
        }
        assert!(antisym[0][1] != 0.0 || antisym[0][2] != 0.0 || antisym[1][2] != 0.0);
    }

    #[test]
    fn generated_points_are_regular() {
        for seed in 0..5 {
            for class in InstanceClass::ALL {
                let s = generate_instance(seed, 2 + (seed as usize) % 3, class).unwrap();
                let spec = s.metric_spec().unwrap();
                for p in &s.points {
                    let g = LocalGeometry::at(&spec, &p.x).unwrap();
                    let y = DVector::from_column_slice(&p.y);
                    let slope = g.b.dot(&y) / g.alpha(&y);
                    assert!(slope.abs() < 0.3, "{} {slope}", s.name);
                }
                s.validate().unwrap();
            }
        }
    }

    #[test]
    fn parallel_form_is_small() {
        for seed in 0..10 {
            let s = generate_instance(seed, 4, InstanceClass::Parallel).unwrap();
            let OneFormConfig::Parallel { vector } = &s.one_form else {
                panic!("parallel class must give a constant form");
            };
            assert!(vector.iter().map(|v| v * v).sum::<f64>() < 0.04);
        }
    }

    #[test]
    fn other_dimensions_are_rejected() {
        assert!(generate_instance(0, 5, InstanceClass::Generic).is_err());
        assert!(generate_instance(0, 1, InstanceClass::Generic).is_err());
    }
}
