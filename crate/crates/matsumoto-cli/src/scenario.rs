//! Scenario files: what to evaluate and which checks to run.
//!
//! A scenario is a JSON object with `"schema": "v1"`. Unknown fields are
//! rejected so that a typo never silently falls back to a default.

use std::fmt;
use std::path::Path;

use matsumoto::expansion::{IdentityKind, OddBReading};
use matsumoto::riemannian::MetricSpec;
use matsumoto::spray::PhiFamily;
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "v1";

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
}

impl ScenarioError {
    fn field(path: impl Into<String>, message: impl fmt::Display) -> ScenarioError {
        ScenarioError::Field {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricConfig {
    Euclidean,
    StereographicSphere {
        radius: f64,
    },
    /// `a[i][j]` expressions in `x1..xn`
    Custom {
        a: Vec<Vec<String>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OneFormConfig {
    Zero,
    /// constant components; parallel when the metric is constant
    Parallel {
        vector: Vec<f64>,
    },
    /// `b_i = offset_i + c x_i + Σ_j A_ij x_j` with `A` antisymmetric
    Conformal {
        c: f64,
        antisym: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<Vec<f64>>,
    },
    Custom {
        b: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiConfig {
    Matsumoto,
    Randers,
    Kropina,
    /// expression in the single variable `s`
    Custom {
        expr: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Random points: `x` uniform in `[-box, box]^n`, `y` Gaussian, kept when
/// `|β/α| < max_slope` at both `y` and `−y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub count: usize,
    pub seed: u64,
    #[serde(rename = "box")]
    pub half_width: f64,
    #[serde(default = "default_max_slope")]
    pub max_slope: f64,
}

fn default_max_slope() -> f64 {
    0.3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// reversibility and quadraticity detectors
    pub detector: f64,
    /// cleared-denominator expansions
    pub expansion: f64,
    /// conditional sums
    pub identity: f64,
    /// a weakly Einstein fit below this residual certifies the hypothesis
    pub einstein: f64,
    /// `r_ij − c a_ij` below this certifies a conformal one-form
    pub conformal: f64,
    /// curvature invariants: flag annihilation and homogeneity
    pub invariant: f64,
}

impl Default for Tolerances {
    fn default() -> Tolerances {
        Tolerances {
            detector: matsumoto::curvature::DETECTOR_THRESHOLD,
            expansion: matsumoto::expansion::verify::EXPANSION_TOL,
            identity: matsumoto::expansion::verify::IDENTITY_TOL,
            einstein: 1e-8,
            conformal: 1e-10,
            invariant: 1e-8,
        }
    }
}

/// The checks a scenario may request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckName {
    Spray,
    Curvature,
    Reversibility(Kind),
    Quadraticity(Kind),
    WeaklyEinstein,
    Expansion(Kind),
    Identity(IdentityKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Riemann,
    Ricci,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Riemann => "riemann",
            Kind::Ricci => "ricci",
        }
    }
}

impl CheckName {
    pub fn all() -> Vec<CheckName> {
        let mut out = vec![CheckName::Spray, CheckName::Curvature];
        for k in [Kind::Riemann, Kind::Ricci] {
            out.push(CheckName::Reversibility(k));
            out.push(CheckName::Quadraticity(k));
        }
        out.push(CheckName::WeaklyEinstein);
        out.push(CheckName::Expansion(Kind::Riemann));
        out.push(CheckName::Expansion(Kind::Ricci));
        out.extend(IdentityKind::ALL.map(CheckName::Identity));
        out
    }

    pub fn parse(name: &str) -> Option<CheckName> {
        CheckName::all().into_iter().find(|c| c.to_string() == name)
    }

    /// Checks evaluated once per point rather than once per base point.
    pub fn per_point(self) -> bool {
        matches!(
            self,
            CheckName::Spray
                | CheckName::Curvature
                | CheckName::Expansion(_)
                | CheckName::Identity(_)
        )
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckName::Spray => f.write_str("spray"),
            CheckName::Curvature => f.write_str("curvature"),
            CheckName::Reversibility(k) => write!(f, "reversibility_{}", k.name()),
            CheckName::Quadraticity(k) => write!(f, "quadraticity_{}", k.name()),
            CheckName::WeaklyEinstein => f.write_str("weakly_einstein"),
            CheckName::Expansion(Kind::Riemann) => f.write_str("expansion_riemann_a4"),
            CheckName::Expansion(Kind::Ricci) => f.write_str("expansion_ricci_a8"),
            CheckName::Identity(k) => write!(f, "identity_{}", k.name()),
        }
    }
}

impl Serialize for CheckName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CheckName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<CheckName, D::Error> {
        let name = String::deserialize(d)?;
        CheckName::parse(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown check name `{name}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: String,
    #[serde(default)]
    pub name: String,
    pub dim: usize,
    pub metric: MetricConfig,
    pub one_form: OneFormConfig,
    pub phi: PhiConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingConfig>,
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// component `(i, j)` read by the Riemann expansion and the closed form
    #[serde(default = "default_pair")]
    pub pair: (usize, usize),
    /// reading of odd powers of `b` in the tables
    #[serde(default = "default_reading")]
    pub odd_b: OddBReading,
    /// the one-form was built to be conformal
    #[serde(default)]
    pub conformal_construction: bool,
    /// seed for detector sample directions
    #[serde(default)]
    pub direction_seed: u64,
    /// expected detector verdicts, keyed by check name
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub expect: std::collections::BTreeMap<CheckName, bool>,
}

fn default_pair() -> (usize, usize) {
    (0, 1)
}

fn default_reading() -> OddBReading {
    OddBReading::Halved
}

fn join_term(coefficient: f64, var: Option<usize>) -> String {
    let c = if coefficient < 0.0 {
        format!("({coefficient})")
    } else {
        format!("{coefficient}")
    };
    match var {
        Some(k) => format!("{c}*x{}", k + 1),
        None => c,
    }
}

impl ScenarioConfig {
    /// One-form components as expressions.
    pub fn one_form_sources(&self) -> Vec<String> {
        let n = self.dim;
        match &self.one_form {
            OneFormConfig::Zero => vec!["0".into(); n],
            OneFormConfig::Parallel { vector } => {
                vector.iter().map(|v| join_term(*v, None)).collect()
            }
            OneFormConfig::Conformal { c, antisym, offset } => (0..n)
                .map(|i| {
                    let mut parts = Vec::new();
                    if let Some(o) = offset {
                        parts.push(join_term(o[i], None));
                    }
                    parts.push(join_term(*c, Some(i)));
                    for (j, a) in antisym[i].iter().enumerate() {
                        if *a != 0.0 {
                            parts.push(join_term(*a, Some(j)));
                        }
                    }
                    parts.join(" + ")
                })
                .collect(),
            OneFormConfig::Custom { b } => b.clone(),
        }
    }

    pub fn metric_spec(&self) -> Result<MetricSpec, ScenarioError> {
        let b = self.one_form_sources();
        let spec = match &self.metric {
            MetricConfig::Euclidean => MetricSpec::euclidean(&b),
            MetricConfig::StereographicSphere { radius } => {
                MetricSpec::stereographic_sphere(*radius, &b)
            }
            MetricConfig::Custom { a } => MetricSpec::new(a, &b),
        };
        spec.map_err(|e| ScenarioError::field(self.spec_field(&e), e))
    }

    fn spec_field(&self, e: &matsumoto::Error) -> &'static str {
        match e {
            matsumoto::Error::AsymmetricMetric { .. } => "metric.a",
            _ => match (&self.metric, &self.one_form) {
                (MetricConfig::Custom { .. }, _) => "metric",
                _ => "one_form",
            },
        }
    }

    pub fn family(&self) -> Result<PhiFamily, ScenarioError> {
        Ok(match &self.phi {
            PhiConfig::Matsumoto => PhiFamily::Matsumoto,
            PhiConfig::Randers => PhiFamily::Randers,
            PhiConfig::Kropina => PhiFamily::Kropina,
            PhiConfig::Custom { expr } => {
                PhiFamily::custom(expr).map_err(|e| ScenarioError::field("phi.expr", e))?
            }
        })
    }

    /// Checks beyond serde: shapes, ranges and parseable expressions.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema != SCHEMA {
            return Err(ScenarioError::field(
                "schema",
                format!("expected \"{SCHEMA}\", found \"{}\"", self.schema),
            ));
        }
        let n = self.dim;
        if n == 0 {
            return Err(ScenarioError::field("dim", "must be positive"));
        }
        match &self.metric {
            MetricConfig::StereographicSphere { radius } if !(*radius > 0.0) => {
                return Err(ScenarioError::field("metric.radius", "must be positive"));
            }
            MetricConfig::Custom { a } => {
                if a.len() != n || a.iter().any(|row| row.len() != n) {
                    return Err(ScenarioError::field("metric.a", format!("must be {n}×{n}")));
                }
                for i in 0..n {
                    for j in 0..i {
                        if a[i][j].trim() != a[j][i].trim() {
                            return Err(ScenarioError::field(
                                format!("metric.a[{i}][{j}]"),
                                format!("differs from a[{j}][{i}]; the metric must be symmetric"),
                            ));
                        }
                    }
                }
            }
            _ => {}
        }
        let len_check = |path: &str, len: usize| {
            if len != n {
                Err(ScenarioError::field(
                    path,
                    format!("expected {n} entries, found {len}"),
                ))
            } else {
                Ok(())
            }
        };
        match &self.one_form {
            OneFormConfig::Parallel { vector } => len_check("one_form.vector", vector.len())?,
            OneFormConfig::Conformal {
                antisym, offset, ..
            } => {
                len_check("one_form.antisym", antisym.len())?;
                for (i, row) in antisym.iter().enumerate() {
                    len_check(&format!("one_form.antisym[{i}]"), row.len())?;
                }
                for i in 0..n {
                    for j in 0..n {
                        if antisym[i][j] != -antisym[j][i] {
                            return Err(ScenarioError::field(
                                format!("one_form.antisym[{i}][{j}]"),
                                "matrix must be antisymmetric",
                            ));
                        }
                    }
                }
                if let Some(o) = offset {
                    len_check("one_form.offset", o.len())?;
                }
            }
            OneFormConfig::Custom { b } => len_check("one_form.b", b.len())?,
            OneFormConfig::Zero => {}
        }
        self.metric_spec()?;
        self.family()?;
        if self.points.is_empty() && self.sampling.is_none() {
            return Err(ScenarioError::field(
                "points",
                "give explicit points or a sampling section",
            ));
        }
        for (k, p) in self.points.iter().enumerate() {
            len_check(&format!("points[{k}].x"), p.x.len())?;
            len_check(&format!("points[{k}].y"), p.y.len())?;
            if p.y.iter().all(|v| *v == 0.0) {
                return Err(ScenarioError::field(
                    format!("points[{k}].y"),
                    "direction must be nonzero",
                ));
            }
        }
        if let Some(s) = &self.sampling {
            if s.count == 0 {
                return Err(ScenarioError::field("sampling.count", "must be positive"));
            }
            if !(s.half_width > 0.0) {
                return Err(ScenarioError::field("sampling.box", "must be positive"));
            }
        }
        if self.checks.is_empty() {
            return Err(ScenarioError::field(
                "checks",
                "at least one check is required",
            ));
        }
        if self.pair.0 >= n || self.pair.1 >= n {
            return Err(ScenarioError::field(
                "pair",
                format!("indices must be below {n}"),
            ));
        }
        for (name, value) in [
            ("detector", self.tolerances.detector),
            ("expansion", self.tolerances.expansion),
            ("identity", self.tolerances.identity),
            ("einstein", self.tolerances.einstein),
            ("conformal", self.tolerances.conformal),
            ("invariant", self.tolerances.invariant),
        ] {
            if !(value > 0.0) {
                return Err(ScenarioError::field(
                    format!("tolerances.{name}"),
                    "must be positive",
                ));
            }
        }
        for name in self.expect.keys() {
            if !matches!(
                name,
                CheckName::Reversibility(_) | CheckName::Quadraticity(_)
            ) {
                return Err(ScenarioError::field(
                    format!("expect.{name}"),
                    "only detector verdicts can be expected",
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<ScenarioConfig, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ScenarioError::field(
                if path == "." {
                    "(root)".to_string()
                } else {
                    path
                },
                e.inner(),
            )
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes") + "\n"
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_json(&text)
}
