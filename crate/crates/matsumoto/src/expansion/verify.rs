//! Numeric checks of the expansion identities against the curvature pipeline.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::bundle::{BundleOptions, InvariantBundle, OddBReading};
use super::quad::parity_split;
use super::slots::Slot;
use super::tables::{eval_terms, term_tables, CoefficientValue, Table, Term, TermTables};
use crate::curvature::{CurvatureProbe, DetectorReport};
use crate::error::{Error, Result};
use crate::riemannian::MetricSpec;
use crate::spray::{PhiFamily, REGULARITY_MARGIN};

/// Default relative tolerance for the full expansions.
pub const EXPANSION_TOL: f64 = 1e-6;

/// Default relative tolerance for the conditional sums, measured against the
/// sum of absolute term values.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// residual below tolerance
    Pass,
    /// the gap disappears once suspect terms are dropped
    Suspect,
    Fail,
}

impl Status {
    fn judge(residual: f64, residual_without_suspect: f64, tol: f64) -> Status {
        if residual < tol {
            Status::Pass
        } else if residual_without_suspect < tol {
            Status::Suspect
        } else {
            Status::Fail
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Suspect => "suspect",
            Status::Fail => "fail",
        })
    }
}

/// One coefficient's share of a sum `Σ c_k α^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub k: usize,
    pub value: f64,
    pub suspect_value: f64,
    /// `c_k α^k / scale`
    pub contribution: f64,
    /// suspect part of `c_k α^k / scale`
    pub suspect_contribution: f64,
    pub terms: usize,
    pub suspect_terms: usize,
    pub degree_mismatches: usize,
}

impl CoefficientReport {
    fn new(k: usize, c: &CoefficientValue, alpha: f64, scale: f64) -> CoefficientReport {
        let w = alpha.powi(k as i32) / scale;
        CoefficientReport {
            k,
            value: c.value,
            suspect_value: c.suspect_value,
            contribution: c.value * w,
            suspect_contribution: c.suspect_value * w,
            terms: c.terms,
            suspect_terms: c.suspect_terms,
            degree_mismatches: c.degree_mismatches,
        }
    }
}

/// A single printed term set against the gap of a failed check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermShare {
    pub k: usize,
    pub coefficient: f64,
    pub monomial: String,
    pub suspect: bool,
    /// the term's weighted value over the scale
    pub share: f64,
    /// gap left if the term were dropped, over the scale
    pub remaining: f64,
}

/// How many candidate terms a failed check lists.
pub const CANDIDATE_TERMS: usize = 3;

/// Terms that, dropped alone, leave the smallest gap; `weight(k)` maps a term
/// value to its share of the checked quantity.
fn closest_terms<'a>(
    gap: f64,
    scale: f64,
    bundle: &InvariantBundle,
    groups: impl Iterator<Item = (usize, &'a [Term])>,
    weight: impl Fn(usize) -> f64,
) -> Vec<TermShare> {
    let mut all: Vec<TermShare> = groups
        .flat_map(|(k, terms)| terms.iter().map(move |t| (k, t)))
        .filter_map(|(k, t)| {
            let v = t.eval(bundle) * weight(k);
            (v != 0.0).then(|| TermShare {
                k,
                coefficient: t.coefficient,
                monomial: t.monomial(),
                suspect: t.suspect.any(),
                share: v / scale,
                remaining: (gap - v).abs() / scale,
            })
        })
        .collect();
    // stable sort keeps file order among ties
    all.sort_by(|a, b| a.remaining.total_cmp(&b.remaining));
    all.truncate(CANDIDATE_TERMS);
    all
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionKind {
    /// `R^i_j` against the `t` table
    RiemannA4,
    /// `Ric` against the `d` table
    RicciA8,
}

impl ExpansionKind {
    pub fn table(self) -> Table {
        match self {
            ExpansionKind::RiemannA4 => Table::T,
            ExpansionKind::RicciA8 => Table::D,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExpansionKind::RiemannA4 => "riemann_a4",
            ExpansionKind::RicciA8 => "ricci_a8",
        }
    }

    /// `4α^p (α − 3β + 2b²α)⁴ (α − 2β)³` with `p = 4` or `2`.
    pub fn denominator(self, alpha: f64, beta: f64, b2: f64) -> f64 {
        let p = match self {
            ExpansionKind::RiemannA4 => 4,
            ExpansionKind::RicciA8 => 2,
        };
        4.0 * alpha.powi(p)
            * (alpha - 3.0 * beta + 2.0 * b2 * alpha).powi(4)
            * (alpha - 2.0 * beta).powi(3)
    }
}

/// Mismatch split by parity of the power of `α`, relative to the report scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityMismatch {
    pub even: f64,
    pub odd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub kind: ExpansionKind,
    pub pair: (usize, usize),
    pub reading: OddBReading,
    pub alpha: f64,
    pub beta: f64,
    pub b2: f64,
    pub denominator: f64,
    /// `D · X` from the pipeline
    pub lhs: f64,
    /// `Σ c_k α^k` from the table
    pub rhs: f64,
    pub scale: f64,
    pub residual: f64,
    pub residual_without_suspect: f64,
    /// `None` when `−y` leaves the domain
    pub parity: Option<ParityMismatch>,
    pub coefficients: Vec<CoefficientReport>,
    /// filled when the check does not pass
    pub candidates: Vec<TermShare>,
    pub tol: f64,
    pub status: Status,
}

fn require_matsumoto(probe: &CurvatureProbe) -> Result<()> {
    match probe.family() {
        Some(PhiFamily::Matsumoto) => Ok(()),
        Some(other) => Err(Error::UnsupportedFamily(other.name().to_string())),
        None => Err(Error::UnsupportedFamily("riemannian".into())),
    }
}

struct Side {
    bundle: InvariantBundle,
    lhs: f64,
    coeffs: Vec<(usize, CoefficientValue)>,
    alpha: f64,
    beta: f64,
    b2: f64,
    denominator: f64,
}

fn expansion_side(
    kind: ExpansionKind,
    probe: &CurvatureProbe,
    y: &[f64],
    pair: (usize, usize),
    reading: OddBReading,
) -> Result<Side> {
    let bundle =
        InvariantBundle::from_probe(probe, y, pair, &BundleOptions::default())?.with_odd_b(reading);
    let (alpha, beta, b2) = (bundle.alpha, bundle.beta(), bundle.b2());
    let m1 = (alpha - 3.0 * beta + 2.0 * b2 * alpha) / alpha;
    if m1.abs() < REGULARITY_MARGIN {
        return Err(Error::Margin {
            which: "α − 3β + 2b²α",
            value: m1,
        });
    }
    let m2 = (alpha - 2.0 * beta) / alpha;
    if m2.abs() < REGULARITY_MARGIN {
        return Err(Error::Margin {
            which: "α − 2β",
            value: m2,
        });
    }
    let denominator = kind.denominator(alpha, beta, b2);
    let x = match kind {
        ExpansionKind::RiemannA4 => bundle.get(Slot::Rij),
        ExpansionKind::RicciA8 => bundle.get(Slot::Ric),
    };
    let table = kind.table();
    let tables = term_tables();
    let coeffs = table
        .indices()
        .map(|k| Ok((k, eval_terms(tables.terms(table, k)?, &bundle))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Side {
        lhs: denominator * x,
        bundle,
        coeffs,
        alpha,
        beta,
        b2,
        denominator,
    })
}

fn power_sum(
    coeffs: &[(usize, CoefficientValue)],
    alpha: f64,
    pick: impl Fn(&CoefficientValue) -> f64,
) -> f64 {
    coeffs
        .iter()
        .map(|(k, c)| pick(c) * alpha.powi(*k as i32))
        .sum()
}

/// Check `D · X = Σ_k c_k α^k` at `(x, y)` for the probe's point.
pub fn verify_expansion_at(
    kind: ExpansionKind,
    probe: &CurvatureProbe,
    y: &[f64],
    pair: (usize, usize),
    reading: OddBReading,
    tol: f64,
) -> Result<ExpansionReport> {
    require_matsumoto(probe)?;
    let side = expansion_side(kind, probe, y, pair, reading)?;
    let alpha = side.alpha;
    let rhs = power_sum(&side.coeffs, alpha, |c| c.value);
    let suspect = power_sum(&side.coeffs, alpha, |c| c.suspect_value);
    let scale = 1f64.max(side.lhs.abs()).max(rhs.abs());
    let residual = (side.lhs - rhs).abs() / scale;
    let residual_without_suspect = (side.lhs - (rhs - suspect)).abs() / scale;

    // c_k has y-degree N − k with N odd, so the even-k part flips sign under y → −y
    let neg_y: Vec<f64> = y.iter().map(|v| -v).collect();
    let parity = expansion_side(kind, probe, &neg_y, pair, reading)
        .ok()
        .map(|neg| {
            let dense: Vec<f64> = {
                let mut d = vec![0.0; 14];
                for (k, c) in &side.coeffs {
                    d[*k] = c.value;
                }
                d
            };
            let split = parity_split(&dense, alpha * alpha);
            let even_lhs = (side.lhs - neg.lhs) / 2.0;
            let odd_lhs = (side.lhs + neg.lhs) / 2.0;
            ParityMismatch {
                even: (even_lhs - split.u).abs() / scale,
                odd: (odd_lhs - split.v * alpha).abs() / scale,
            }
        });

    let status = Status::judge(residual, residual_without_suspect, tol);
    let candidates = if status == Status::Pass {
        Vec::new()
    } else {
        let table = kind.table();
        let tables = term_tables();
        closest_terms(
            rhs - side.lhs,
            scale,
            &side.bundle,
            side.coeffs
                .iter()
                .filter_map(|(k, _)| tables.terms(table, *k).ok().map(|t| (*k, t))),
            |k| alpha.powi(k as i32),
        )
    };

    Ok(ExpansionReport {
        kind,
        pair,
        reading,
        alpha,
        beta: side.beta,
        b2: side.b2,
        denominator: side.denominator,
        lhs: side.lhs,
        rhs,
        scale,
        residual,
        residual_without_suspect,
        parity,
        coefficients: side
            .coeffs
            .iter()
            .map(|(k, c)| CoefficientReport::new(*k, c, alpha, scale))
            .collect(),
        candidates,
        tol,
        status,
    })
}

/// [`verify_expansion_at`] for a fresh point.
#[allow(clippy::too_many_arguments)]
pub fn verify_expansion(
    kind: ExpansionKind,
    spec: &MetricSpec,
    family: &PhiFamily,
    x: &[f64],
    y: &[f64],
    pair: (usize, usize),
    reading: OddBReading,
    tol: f64,
) -> Result<ExpansionReport> {
    let probe = CurvatureProbe::new(spec, family, x)?;
    verify_expansion_at(kind, &probe, y, pair, reading, tol)
}

/// A property the conditional identities assume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    RiemannReversible,
    RiemannQuadratic,
    RicciReversible,
    Conformal,
    WeaklyEinstein,
}

/// Why a hypothesis is believed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    /// a curvature detector run
    Detector(DetectorReport),
    /// a fitted residual compared with its tolerance
    Residual { value: f64, tol: f64 },
    /// the instance was built to satisfy it
    Construction(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub hypothesis: Hypothesis,
    pub evidence: Evidence,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        match &self.evidence {
            Evidence::Detector(r) => r.verdict,
            Evidence::Residual { value, tol } => value.is_finite() && value < tol,
            Evidence::Construction(_) => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    A1Reversible,
    A2Conformal,
    A5Rrev,
    A16Rquad,
    S3WeaklyEinstein,
    S5WeaklyEinsteinConformal,
}

impl IdentityKind {
    pub const ALL: [IdentityKind; 6] = [
        IdentityKind::A1Reversible,
        IdentityKind::A2Conformal,
        IdentityKind::A5Rrev,
        IdentityKind::A16Rquad,
        IdentityKind::S3WeaklyEinstein,
        IdentityKind::S5WeaklyEinsteinConformal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityKind::A1Reversible => "a1_reversible",
            IdentityKind::A2Conformal => "a2_conformal",
            IdentityKind::A5Rrev => "a5_rrev",
            IdentityKind::A16Rquad => "a16_rquad",
            IdentityKind::S3WeaklyEinstein => "s3_weakly_einstein",
            IdentityKind::S5WeaklyEinsteinConformal => "s5_weakly_einstein_conformal",
        }
    }

    pub fn from_name(name: &str) -> Option<IdentityKind> {
        IdentityKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Table summed by this identity and the indices it sums; `None` for the closed form.
    pub fn table(self) -> Option<(Table, Vec<usize>)> {
        let even = |hi: usize| (0..=hi).step_by(2).collect::<Vec<_>>();
        match self {
            IdentityKind::A1Reversible => Some((Table::DPrime, even(10))),
            IdentityKind::A2Conformal => Some((Table::DDoublePrime, even(8))),
            IdentityKind::A5Rrev => Some((Table::TPrime, even(12))),
            IdentityKind::A16Rquad => None,
            IdentityKind::S3WeaklyEinstein => Some((Table::A, (0..=13).collect())),
            IdentityKind::S5WeaklyEinsteinConformal => Some((Table::APrime, even(10))),
        }
    }

    /// Each inner list is a disjunction; all lists must be satisfied.
    pub fn requirements(self) -> Vec<Vec<Hypothesis>> {
        use Hypothesis::*;
        match self {
            IdentityKind::A1Reversible => vec![vec![RicciReversible]],
            IdentityKind::A2Conformal => vec![vec![RicciReversible], vec![Conformal]],
            IdentityKind::A5Rrev => vec![vec![RiemannReversible], vec![Conformal]],
            IdentityKind::A16Rquad => {
                vec![vec![RiemannReversible, RiemannQuadratic], vec![Conformal]]
            }
            IdentityKind::S3WeaklyEinstein => vec![vec![WeaklyEinstein]],
            IdentityKind::S5WeaklyEinsteinConformal => vec![vec![WeaklyEinstein], vec![Conformal]],
        }
    }
}

impl fmt::Display for IdentityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub kind: IdentityKind,
    pub reading: OddBReading,
    pub alpha: f64,
    /// the quantity that should vanish
    pub sum: f64,
    pub suspect_sum: f64,
    /// sum of absolute term values
    pub scale: f64,
    pub residual: f64,
    pub residual_without_suspect: f64,
    pub coefficients: Vec<CoefficientReport>,
    /// indices the identity sums but the source does not print
    pub missing: Vec<usize>,
    /// filled when the check does not pass
    pub candidates: Vec<TermShare>,
    /// closed form only: pipeline and predicted component
    pub pipeline: Option<f64>,
    pub predicted: Option<f64>,
    pub certificates: Vec<Certificate>,
    pub tol: f64,
    pub status: Status,
}

fn check_certificates(
    kind: IdentityKind,
    bundle: &InvariantBundle,
    certificates: &[Certificate],
) -> Result<()> {
    for any_of in kind.requirements() {
        let ok = certificates
            .iter()
            .any(|c| any_of.contains(&c.hypothesis) && c.holds());
        if !ok {
            return Err(Error::HypothesisNotCertified(format!(
                "{} needs one of {:?}",
                kind.name(),
                any_of
            )));
        }
        if any_of.contains(&Hypothesis::Conformal) && !bundle.conformal {
            return Err(Error::HypothesisNotCertified(format!(
                "{} needs a bundle with conformal slots filled",
                kind.name()
            )));
        }
        if any_of.contains(&Hypothesis::WeaklyEinstein) && !bundle.einstein {
            return Err(Error::HypothesisNotCertified(format!(
                "{} needs a bundle with the weakly Einstein fit filled",
                kind.name()
            )));
        }
    }
    Ok(())
}

const CLOSED_FORM_BRACKET: &str = "# schema: v1
tp 0 10 y_i*y_j*c^2
tp 0 -16 y_i*y_j*c^2
tp 0 4 y_i*y_j*c^2
tp 0 -8 y_i*y_j*c^2
tp 0 -2979 s_i0*s_0j
tp 0 32 y_i*c^2*y_j*b
tp 0 12 y_i*y_j*c*s_0*beta^-1
tp 0 17 y_i*y_j*c_0*beta^-1
tp 0 16 y_i*y_j*c_0*b^2*beta^-1
tp 0 -20 y_i*y_j*c*s_0*beta^-1
tp 0 -4 y_i*c*y_j*s_0*beta^-1
tp 0 -24 y_i*c_0*y_j*b^2*beta^-1
tp 0 -24 s_i0_0*y_j*b^2*beta^-1
tp 0 32 y_i*y_j*c*s_0*b*beta^-1
tp 0 -33 y_i*c_0*y_j*beta^-1
tp 0 -60 s_i0_0*y_j*beta^-1
tp 0 32 y_i*c*y_j*s_0*b*beta^-1
tp 0 32 y_i*y_j*s_0^2*b*beta^-2
tp 0 -8 y_i*y_j*s_0_0*b^2*beta^-2
tp 0 -6 y_i*y_j*s_0^2*beta^-2
tp 0 -10 y_i*y_j*s_0_0*beta^-2
";

/// Terms of the bracket in `R^i_j = R̄^i_j − (1/9)[…]`, each of `y`-degree 2.
pub fn closed_form_terms() -> &'static [Term] {
    static TERMS: OnceLock<Vec<Term>> = OnceLock::new();
    TERMS.get_or_init(|| {
        let parsed = TermTables::parse(CLOSED_FORM_BRACKET).expect("closed form parses");
        let mut terms = parsed
            .terms(Table::TPrime, 0)
            .expect("closed form present")
            .to_vec();
        // parsed against the t' degree; the bracket is homogeneous of degree 2
        for t in &mut terms {
            t.suspect.degree = t.degree().is_some_and(|d| d != 2);
        }
        terms
    })
}

/// Evaluate a conditional identity on a bundle whose hypotheses are certified.
pub fn verify_conditional_identity(
    kind: IdentityKind,
    bundle: &InvariantBundle,
    certificates: &[Certificate],
    tol: f64,
) -> Result<IdentityReport> {
    check_certificates(kind, bundle, certificates)?;
    let alpha = bundle.alpha;
    let finish = |sum: f64,
                  suspect_sum: f64,
                  scale: f64,
                  coefficients,
                  missing: Vec<usize>,
                  closed: Option<(f64, f64)>,
                  groups: Vec<(usize, &[Term])>,
                  weight: &dyn Fn(usize) -> f64| {
        let (residual, residual_without_suspect) = if scale > 0.0 {
            (sum.abs() / scale, (sum - suspect_sum).abs() / scale)
        } else {
            (0.0, 0.0)
        };
        let mut status = Status::judge(residual, residual_without_suspect, tol);
        // a sum with unprinted coefficients is never a clean pass
        if status == Status::Pass && !missing.is_empty() {
            status = Status::Suspect;
        }
        let candidates = if status == Status::Pass || scale == 0.0 {
            Vec::new()
        } else {
            closest_terms(sum, scale, bundle, groups.into_iter(), weight)
        };
        IdentityReport {
            kind,
            reading: bundle.odd_b,
            alpha,
            sum,
            suspect_sum,
            scale,
            residual,
            residual_without_suspect,
            coefficients,
            missing,
            candidates,
            pipeline: closed.map(|c| c.0),
            predicted: closed.map(|c| c.1),
            certificates: certificates.to_vec(),
            tol,
            status,
        }
    };

    let Some((table, indices)) = kind.table() else {
        let beta = bundle.beta();
        if (beta / alpha).abs() < REGULARITY_MARGIN {
            return Err(Error::Margin {
                which: "β",
                value: beta / alpha,
            });
        }
        let bracket = eval_terms(closed_form_terms(), bundle);
        let pipeline = bundle.get(Slot::Rij);
        let base = bundle.get(Slot::RbarIj);
        let predicted = base - bracket.value / 9.0;
        let scale = pipeline.abs() + base.abs() + bracket.magnitude / 9.0;
        let coefficients = vec![CoefficientReport::new(
            0,
            &bracket,
            1.0,
            -9.0 * scale.max(f64::MIN_POSITIVE),
        )];
        return Ok(finish(
            pipeline - predicted,
            bracket.suspect_value / 9.0,
            scale,
            coefficients,
            Vec::new(),
            Some((pipeline, predicted)),
            vec![(0, closed_form_terms())],
            &|_| 1.0 / 9.0,
        ));
    };

    let tables = term_tables();
    let mut values = Vec::new();
    let mut groups = Vec::new();
    let mut missing = Vec::new();
    for k in indices {
        match tables.terms(table, k) {
            Ok(terms) => {
                values.push((k, eval_terms(terms, bundle)));
                groups.push((k, terms));
            }
            Err(Error::NotPrinted { .. }) => missing.push(k),
            Err(e) => return Err(e),
        }
    }
    let sum = power_sum(&values, alpha, |c| c.value);
    let suspect_sum = power_sum(&values, alpha, |c| c.suspect_value);
    let scale = power_sum(&values, alpha, |c| c.magnitude);
    let coefficients = values
        .iter()
        .map(|(k, c)| CoefficientReport::new(*k, c, alpha, scale.max(f64::MIN_POSITIVE)))
        .collect();
    Ok(finish(
        sum,
        suspect_sum,
        scale,
        coefficients,
        missing,
        None,
        groups,
        &|k| alpha.powi(k as i32),
    ))
}
