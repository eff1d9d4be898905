//! Riemann and Ricci curvature of a spray, and detectors for the curvature
//! properties that compare `y` with `−y` or test for a quadratic form in `y`.
//!
//! For a spray `G^i` the Riemann curvature is
//!
//! `R^i_k = 2∂G^i/∂x^k − y^j ∂²G^i/∂x^j∂y^k + 2G^j ∂²G^i/∂y^j∂y^k − (∂G^i/∂y^j)(∂G^j/∂y^k)`
//!
//! and every derivative here is read off one jet evaluation of the spray.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number::{Jet, Number};
use crate::riemannian::{LocalGeometry, MetricSpec};
use crate::spray::{spray_core, Fields, PhiFamily, SprayDiagnostics};

/// Default detector threshold (relative residual).
pub const DETECTOR_THRESHOLD: f64 = 1e-7;

/// A residual within this factor of the threshold, either side, is marginal.
pub const MARGINAL_FACTOR: f64 = 10.0;

/// Radii applied to every unit sample direction.
pub const SAMPLE_RADII: [f64; 3] = [0.5, 1.0, 2.0];

/// Curvature at one `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureValue {
    /// `r[(i, j)] = R^i_j`
    pub r: DMatrix<f64>,
    pub ric: f64,
    pub diagnostics: SprayDiagnostics,
}

impl CurvatureValue {
    pub fn alpha(&self) -> f64 {
        self.diagnostics.alpha
    }

    pub fn beta(&self) -> f64 {
        self.diagnostics.beta
    }
}

/// Apply the spray-curvature formula to jets of `G^i` over `(x, y)`.
pub(crate) fn curvature_from_jets(g: &[Jet], y: &[f64]) -> DMatrix<f64> {
    let n = y.len();
    DMatrix::from_fn(n, n, |i, k| {
        let mut v = 2.0 * g[i].first(k);
        for j in 0..n {
            v -= y[j] * g[i].second(j, n + k);
            v += 2.0 * g[j].value() * g[i].second(n + j, n + k);
            v -= g[i].first(n + j) * g[j].first(n + k);
        }
        v
    })
}

fn direction_jets(y: &[f64]) -> Vec<Jet> {
    let n = y.len();
    (0..n).map(|k| Jet::variable(y[k], n + k, 2 * n)).collect()
}

/// Curvature evaluator for many directions at one base point.
#[derive(Debug, Clone)]
pub struct CurvatureProbe {
    geometry: LocalGeometry,
    jets: Fields<Jet>,
    family: Option<PhiFamily>,
}

impl CurvatureProbe {
    /// Probe for `α φ(β/α)` at `x`.
    pub fn new(spec: &MetricSpec, family: &PhiFamily, x: &[f64]) -> Result<CurvatureProbe> {
        let geometry = LocalGeometry::at(spec, x)?;
        Ok(CurvatureProbe {
            jets: Fields::jets(&geometry),
            geometry,
            family: Some(family.clone()),
        })
    }

    /// Probe for the Riemannian metric `α` alone.
    pub fn riemannian(spec: &MetricSpec, x: &[f64]) -> Result<CurvatureProbe> {
        let geometry = LocalGeometry::at(spec, x)?;
        Ok(CurvatureProbe {
            jets: Fields::jets(&geometry),
            geometry,
            family: None,
        })
    }

    /// Probe for `α` alone at the same point.
    pub fn base(&self) -> CurvatureProbe {
        CurvatureProbe {
            geometry: self.geometry.clone(),
            jets: self.jets.clone(),
            family: None,
        }
    }

    pub fn geometry(&self) -> &LocalGeometry {
        &self.geometry
    }

    pub fn family(&self) -> Option<&PhiFamily> {
        self.family.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.geometry.n
    }

    /// Spray jets `G^i` over `(x, y)` at direction `y`.
    pub fn spray_jets(&self, y: &[f64]) -> Result<(Vec<Jet>, SprayDiagnostics)> {
        if y.len() != self.geometry.n {
            return Err(Error::Dimension {
                expected: self.geometry.n,
                got: y.len(),
            });
        }
        if y.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroDirection);
        }
        spray_core(&self.jets, &direction_jets(y), self.family.as_ref())
    }

    pub fn at(&self, y: &[f64]) -> Result<CurvatureValue> {
        let (g, diagnostics) = self.spray_jets(y)?;
        let r = curvature_from_jets(&g, y);
        Ok(CurvatureValue {
            ric: r.trace(),
            r,
            diagnostics,
        })
    }
}

/// `R^i_j` and `Ric` of `α φ(β/α)` at `(x, y)`.
pub fn riemann_curvature(
    spec: &MetricSpec,
    family: &PhiFamily,
    x: &[f64],
    y: &[f64],
) -> Result<CurvatureValue> {
    CurvatureProbe::new(spec, family, x)?.at(y)
}

/// Which curvature a detector looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureKind {
    Riemann,
    Ricci,
}

/// Outcome of a detector run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    pub verdict: bool,
    pub residual: f64,
    pub threshold: f64,
    pub samples: usize,
    pub skipped: usize,
    pub marginal: bool,
}

impl DetectorReport {
    fn new(residual: f64, threshold: f64, samples: usize, skipped: usize) -> DetectorReport {
        DetectorReport {
            verdict: residual <= threshold,
            residual,
            threshold,
            samples,
            skipped,
            marginal: residual > threshold / MARGINAL_FACTOR
                && residual < threshold * MARGINAL_FACTOR,
        }
    }
}

/// Directions spread over the unit `α`-sphere at `x`, each scaled by
/// [`SAMPLE_RADII`]. Deterministic in `seed`.
pub fn sphere_samples(geometry: &LocalGeometry, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = geometry.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count * SAMPLE_RADII.len());
    for _ in 0..count {
        let v = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let unit = &v / geometry.alpha(&v);
        for radius in SAMPLE_RADII {
            out.push((&unit * radius).iter().copied().collect());
        }
    }
    out
}

/// Number of unit directions giving at least `n² + n` samples after scaling.
pub fn default_direction_count(n: usize) -> usize {
    (n * n + n)
        .div_ceil(SAMPLE_RADII.len())
        .max(n * (n + 1) / 2 + 1)
}

fn sup_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Compare curvature at `y` and `−y` over the samples.
///
/// Residual is `max ‖R(y) − R(−y)‖∞ / (1 + ‖R(y)‖∞)`, or the same with `Ric`.
/// A sample is skipped only when both `y` and `−y` fail to evaluate.
pub fn reversibility_check(
    probe: &CurvatureProbe,
    samples: &[Vec<f64>],
    kind: CurvatureKind,
    tol: f64,
) -> Result<DetectorReport> {
    let mut residual: f64 = 0.0;
    let mut used = 0;
    let mut skipped = 0;
    for (index, y) in samples.iter().enumerate() {
        let minus: Vec<f64> = y.iter().map(|v| -v).collect();
        let (plus, neg) = match (probe.at(y), probe.at(&minus)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(_), Err(_)) => {
                skipped += 1;
                continue;
            }
            (Err(e), Ok(_)) | (Ok(_), Err(e)) => {
                return Err(Error::Validity {
                    index,
                    message: e.to_string(),
                })
            }
        };
        let r = match kind {
            CurvatureKind::Riemann => sup_norm(&(&plus.r - &neg.r)) / (1.0 + sup_norm(&plus.r)),
            CurvatureKind::Ricci => (plus.ric - neg.ric).abs() / (1.0 + plus.ric.abs()),
        };
        residual = residual.max(r);
        used += 1;
    }
    if used == 0 {
        return Err(Error::TooFewSamples { got: 0, needed: 1 });
    }
    Ok(DetectorReport::new(residual, tol, used, skipped))
}

fn quadratic_design(samples: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    let m = n * (n + 1) / 2;
    DMatrix::from_fn(samples.len(), m, |row, col| {
        // columns enumerate k <= l in row-major order
        let mut c = col;
        let mut k = 0;
        while c >= n - k {
            c -= n - k;
            k += 1;
        }
        let l = k + c;
        samples[row][k] * samples[row][l]
    })
}

fn least_squares(design: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let needed = design.ncols();
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > 1e-10 * smax)
        .count();
    if rank < needed {
        return Err(Error::RankDeficient { rank, needed });
    }
    let fitted = svd
        .solve(rhs, 1e-12 * smax)
        .map_err(|_| Error::RankDeficient { rank, needed })?;
    Ok(design * fitted)
}

/// Fit curvature to a quadratic form in `y` by least squares.
///
/// Residual is the RMS misfit divided by the RMS magnitude of the data
/// (zero when the data vanish identically).
pub fn quadraticity_check(
    probe: &CurvatureProbe,
    samples: &[Vec<f64>],
    kind: CurvatureKind,
    tol: f64,
) -> Result<DetectorReport> {
    let n = probe.dim();
    let needed = n * n + n;
    if samples.len() < needed {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            needed,
        });
    }
    let values = samples
        .iter()
        .enumerate()
        .map(|(index, y)| {
            probe.at(y).map_err(|e| Error::Validity {
                index,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let width = match kind {
        CurvatureKind::Riemann => n * n,
        CurvatureKind::Ricci => 1,
    };
    let data = DMatrix::from_fn(samples.len(), width, |row, col| match kind {
        CurvatureKind::Riemann => values[row].r[(col / n, col % n)],
        CurvatureKind::Ricci => values[row].ric,
    });
    let fitted = least_squares(&quadratic_design(samples, n), &data)?;
    let count = data.len() as f64;
    let misfit = ((&data - fitted).norm_squared() / count).sqrt();
    let magnitude = (data.norm_squared() / count).sqrt();
    let residual = if magnitude > 0.0 {
        misfit / magnitude
    } else {
        0.0
    };
    Ok(DetectorReport::new(residual, tol, samples.len(), 0))
}

/// Least-squares fit of `Ric = (n−1)(3θF + σF²)` with `θ = θ_i y^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeaklyEinsteinFit {
    pub theta: Vec<f64>,
    pub sigma: f64,
    /// RMS of `Ric − (n−1)(3θF + σF²)` over the samples.
    pub residual: f64,
    pub samples: usize,
}

pub fn weakly_einstein_fit(
    probe: &CurvatureProbe,
    samples: &[Vec<f64>],
) -> Result<WeaklyEinsteinFit> {
    let n = probe.dim();
    if samples.len() < n + 2 {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            needed: n + 2,
        });
    }
    let values = samples
        .iter()
        .enumerate()
        .map(|(index, y)| {
            probe.at(y).map_err(|e| Error::Validity {
                index,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = (n - 1) as f64;
    let design = DMatrix::from_fn(samples.len(), n + 1, |row, col| {
        let f = values[row].diagnostics.f;
        if col < n {
            k * 3.0 * f * samples[row][col]
        } else {
            k * f * f
        }
    });
    let rhs = DMatrix::from_fn(samples.len(), 1, |row, _| values[row].ric);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > 1e-10 * smax)
        .count();
    if rank < n + 1 {
        return Err(Error::RankDeficient {
            rank,
            needed: n + 1,
        });
    }
    let coef = svd
        .solve(&rhs, 1e-12 * smax)
        .map_err(|_| Error::RankDeficient {
            rank,
            needed: n + 1,
        })?;
    let misfit = &rhs - &design * &coef;
    Ok(WeaklyEinsteinFit {
        theta: (0..n).map(|i| coef[(i, 0)]).collect(),
        sigma: coef[(n, 0)],
        residual: (misfit.norm_squared() / samples.len() as f64).sqrt(),
        samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_columns_cover_upper_triangle() {
        let d = quadratic_design(&[vec![2.0, 3.0, 5.0]], 3);
        let row: Vec<f64> = d.row(0).iter().copied().collect();
        assert_eq!(row, vec![4.0, 6.0, 10.0, 9.0, 15.0, 25.0]);
    }

    #[test]
    fn flat_zero_form_is_flat() {
        let spec = MetricSpec::euclidean(&["0", "0", "0"]).unwrap();
        let c = riemann_curvature(
            &spec,
            &PhiFamily::Matsumoto,
            &[0.1, 0.2, 0.3],
            &[1.0, -2.0, 0.5],
        )
        .unwrap();
        assert_eq!(sup_norm(&c.r), 0.0);
        assert_eq!(c.ric, 0.0);
    }

    #[test]
    fn sample_count_meets_fit_requirement() {
        for n in 2..=4 {
            assert!(default_direction_count(n) * SAMPLE_RADII.len() >= n * n + n);
        }
    }

    #[test]
    fn marginal_band() {
        assert!(DetectorReport::new(2e-7, 1e-7, 1, 0).marginal);
        assert!(!DetectorReport::new(1e-12, 1e-7, 1, 0).marginal);
        assert!(!DetectorReport::new(1e-3, 1e-7, 1, 0).marginal);
    }
}
