//! The (α, β)-metric layer: `F = α φ(s)` with `s = β/α`, the coefficients
//! `Q`, `Ψ`, `Θ`, and the spray
//!
//! `G^i = Ḡ^i + αQ s^i_0 + Ψ(r_00 − 2αQ s_0) b^i + (Θ/α)(r_00 − 2αQ s_0) y^i`.
//!
//! The formula is written once over [`Number`], so the same code gives plain
//! values and the jets that the curvature module differentiates.

use nalgebra::DMatrix;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_profile, Expr};
use crate::number::{Jet, Number, Series};
use crate::riemannian::{LocalGeometry, MetricSpec};

/// Distance kept from every denominator zero.
pub const REGULARITY_MARGIN: f64 = 1e-6;

/// The profile function `φ`.
#[derive(Debug, Clone)]
pub enum PhiFamily {
    /// `φ(s) = 1/(1 − s)`
    Matsumoto,
    /// `φ(s) = 1 + s`
    Randers,
    /// `φ(s) = 1/s`
    Kropina,
    Custom {
        source: String,
        expr: Expr,
    },
}

impl PhiFamily {
    pub fn custom(source: &str) -> Result<PhiFamily> {
        Ok(PhiFamily::Custom {
            source: source.to_string(),
            expr: parse_profile(source)?,
        })
    }

    pub fn name(&self) -> &str {
        match self {
            PhiFamily::Matsumoto => "matsumoto",
            PhiFamily::Randers => "randers",
            PhiFamily::Kropina => "kropina",
            PhiFamily::Custom { .. } => "custom",
        }
    }

    fn domain_error(&self, s: f64, message: &str) -> Error {
        Error::ProfileDomain {
            family: self.name().to_string(),
            s,
            message: message.to_string(),
        }
    }

    /// `φ` and its first four derivatives at `s`.
    pub fn derivatives(&self, s: f64) -> Result<[f64; 5]> {
        match self {
            PhiFamily::Matsumoto => {
                if !(s < 0.5 - REGULARITY_MARGIN) {
                    return Err(self.domain_error(s, "Q = 1/(1 - 2s) requires s < 1/2"));
                }
                let u = 1.0 / (1.0 - s);
                Ok([u, u * u, 2.0 * u.powi(3), 6.0 * u.powi(4), 24.0 * u.powi(5)])
            }
            PhiFamily::Randers => Ok([1.0 + s, 1.0, 0.0, 0.0, 0.0]),
            PhiFamily::Kropina => {
                if !(s > REGULARITY_MARGIN) {
                    return Err(self.domain_error(s, "requires s > 0"));
                }
                let u = 1.0 / s;
                Ok([
                    u,
                    -u * u,
                    2.0 * u.powi(3),
                    -6.0 * u.powi(4),
                    24.0 * u.powi(5),
                ])
            }
            PhiFamily::Custom { expr, .. } => {
                let v = expr
                    .eval(&[Series::variable(s)])
                    .map_err(|e| self.domain_error(s, &e.to_string()))?;
                Ok(std::array::from_fn(|k| v.derivative(k)))
            }
        }
    }
}

/// `(φ, φ′, φ″)` at `s`.
pub fn phi_eval(family: &PhiFamily, s: f64) -> Result<(f64, f64, f64)> {
    let d = family.derivatives(s)?;
    Ok((d[0], d[1], d[2]))
}

/// The spray coefficients `(Q, Ψ, Θ)` at slope `s` and `b²`.
pub fn qpt(family: &PhiFamily, s: f64, b2: f64) -> Result<(f64, f64, f64)> {
    let d = family.derivatives(s)?;
    let c = coefficients(&s, &b2, &[d[0], d[1], d[2]])?;
    Ok((c.q, c.psi, c.theta))
}

struct Coefficients<T> {
    phi: T,
    q: T,
    psi: T,
    theta: T,
}

fn check(which: &'static str, value: f64) -> Result<()> {
    if value.abs() < REGULARITY_MARGIN || !value.is_finite() {
        return Err(Error::SingularDenominator { which, value });
    }
    Ok(())
}

fn coefficients<T: Number>(s: &T, b2: &T, phi: &[T; 3]) -> Result<Coefficients<T>> {
    let [p0, p1, p2] = phi.clone();
    let q_den = p0.clone() - s.clone() * p1.clone();
    check("phi - s*phi'", q_den.value())?;
    let reg = q_den.clone() + (b2.clone() - s.square()) * p2.clone();
    check("phi - s*phi' + (b^2 - s^2)*phi''", reg.value())?;
    if reg.value() <= 0.0 {
        return Err(Error::SingularDenominator {
            which: "phi - s*phi' + (b^2 - s^2)*phi'' (must be positive)",
            value: reg.value(),
        });
    }
    check("phi", p0.value())?;
    let q = p1.div(&q_den);
    let psi = p2.div(&reg.scale(2.0));
    let num = p0.clone() * p1.clone() - s.clone() * (p0.clone() * p2 + p1.square());
    let theta = num.div(&(p0.clone() * reg).scale(2.0));
    Ok(Coefficients {
        phi: p0,
        q,
        psi,
        theta,
    })
}

/// Geometric inputs of the spray, as values or as jets in `(x, y)`.
#[derive(Debug, Clone)]
pub(crate) struct Fields<T> {
    pub a: Vec<Vec<T>>,
    pub a_inv: Vec<Vec<T>>,
    pub b: Vec<T>,
    /// `gamma[i][j][k] = γ^i_jk`
    pub gamma: Vec<Vec<Vec<T>>>,
    pub r: Vec<Vec<T>>,
    pub s: Vec<Vec<T>>,
}

fn matrix_map<T>(m: &DMatrix<f64>, f: impl Fn(usize, usize) -> T) -> Vec<Vec<T>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| f(i, j)).collect())
        .collect()
}

impl Fields<f64> {
    pub(crate) fn values(g: &LocalGeometry) -> Fields<f64> {
        Fields {
            a: matrix_map(&g.a, |i, j| g.a[(i, j)]),
            a_inv: matrix_map(&g.a_inv, |i, j| g.a_inv[(i, j)]),
            b: g.b.iter().copied().collect(),
            gamma: g
                .gamma
                .iter()
                .map(|m| matrix_map(m, |j, k| m[(j, k)]))
                .collect(),
            r: matrix_map(&g.r, |i, j| g.r[(i, j)]),
            s: matrix_map(&g.s, |i, j| g.s[(i, j)]),
        }
    }
}

/// A field of `x` alone, as a jet over `(x, y)`.
///
/// Second derivatives in two `x` directions are never needed by the curvature
/// formula and are not available from second-order data, so they are set to
/// NaN: products and compositions keep each Hessian slot separate, and any
/// accidental read of those slots surfaces as NaN.
fn lift(value: f64, grad_x: impl Fn(usize) -> f64, n: usize) -> Jet {
    let mut first = vec![0.0; 2 * n];
    for (k, slot) in first.iter_mut().enumerate().take(n) {
        *slot = grad_x(k);
    }
    let mut j = Jet::linear(value, first);
    for p in 0..n {
        for q in p..n {
            j.set_second(p, q, f64::NAN);
        }
    }
    j
}

impl Fields<Jet> {
    /// Jets over `2n` variables: `x^1..x^n` then `y^1..y^n`.
    pub(crate) fn jets(g: &LocalGeometry) -> Fields<Jet> {
        let n = g.n;
        Fields {
            a: matrix_map(&g.a, |i, j| lift(g.a[(i, j)], |k| g.da[k][(i, j)], n)),
            a_inv: matrix_map(&g.a_inv, |i, j| {
                lift(g.a_inv[(i, j)], |k| g.da_inv[k][(i, j)], n)
            }),
            b: (0..n).map(|i| lift(g.b[i], |k| g.db[(i, k)], n)).collect(),
            gamma: (0..n)
                .map(|i| {
                    matrix_map(&g.gamma[i], |j, k| {
                        lift(g.gamma[i][(j, k)], |l| g.dgamma[l][i][(j, k)], n)
                    })
                })
                .collect(),
            r: matrix_map(&g.r, |i, j| lift(g.r[(i, j)], |k| g.dr[k][(i, j)], n)),
            s: matrix_map(&g.s, |i, j| lift(g.s[(i, j)], |k| g.ds[k][(i, j)], n)),
        }
    }
}

/// Scalar byproducts of a spray evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SprayDiagnostics {
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    pub b2: f64,
    /// `F = α φ(s)`; equals `α` for the Riemannian spray.
    pub f: f64,
    pub q: f64,
    pub psi: f64,
    pub theta: f64,
}

fn sum<T: Number>(zero: &T, terms: impl Iterator<Item = T>) -> T {
    terms.fold(zero.constant_like(0.0), |acc, t| acc + t)
}

/// `G^i` over any scalar type. `family = None` gives the Riemannian spray `Ḡ^i`.
pub(crate) fn spray_core<T: Number>(
    f: &Fields<T>,
    y: &[T],
    family: Option<&PhiFamily>,
) -> Result<(Vec<T>, SprayDiagnostics)> {
    let n = y.len();
    let zero = y[0].constant_like(0.0);
    let y_low: Vec<T> = (0..n)
        .map(|i| sum(&zero, (0..n).map(|j| f.a[i][j].clone() * y[j].clone())))
        .collect();
    let alpha2 = sum(&zero, (0..n).map(|i| y_low[i].clone() * y[i].clone()));
    if !(alpha2.value() > 0.0) {
        return Err(Error::ZeroDirection);
    }
    let alpha = alpha2.sqrt();
    let g_bar: Vec<T> = (0..n)
        .map(|i| {
            let mut acc = zero.clone();
            for j in 0..n {
                let row = sum(
                    &zero,
                    (0..n).map(|k| f.gamma[i][j][k].clone() * y[k].clone()),
                );
                acc = acc + row * y[j].clone();
            }
            acc.scale(0.5)
        })
        .collect();
    let Some(family) = family else {
        let diag = SprayDiagnostics {
            alpha: alpha.value(),
            beta: 0.0,
            s: 0.0,
            b2: 0.0,
            f: alpha.value(),
            q: 0.0,
            psi: 0.0,
            theta: 0.0,
        };
        return Ok((g_bar, diag));
    };

    let beta = sum(&zero, (0..n).map(|i| f.b[i].clone() * y[i].clone()));
    let s = beta.div(&alpha);
    let b_up: Vec<T> = (0..n)
        .map(|i| {
            sum(
                &zero,
                (0..n).map(|k| f.a_inv[i][k].clone() * f.b[k].clone()),
            )
        })
        .collect();
    let b2 = sum(&zero, (0..n).map(|i| f.b[i].clone() * b_up[i].clone()));
    let r_y: Vec<T> = (0..n)
        .map(|i| sum(&zero, (0..n).map(|j| f.r[i][j].clone() * y[j].clone())))
        .collect();
    let r00 = sum(&zero, (0..n).map(|i| r_y[i].clone() * y[i].clone()));
    // s_{m0} = s_mk y^k, then s^i_0 = a^{im} s_{m0} and s_0 = b^m s_{m0}
    let s_y: Vec<T> = (0..n)
        .map(|m| sum(&zero, (0..n).map(|k| f.s[m][k].clone() * y[k].clone())))
        .collect();
    let s_up_0: Vec<T> = (0..n)
        .map(|i| {
            sum(
                &zero,
                (0..n).map(|m| f.a_inv[i][m].clone() * s_y[m].clone()),
            )
        })
        .collect();
    let s0 = sum(&zero, (0..n).map(|m| b_up[m].clone() * s_y[m].clone()));

    let d = family.derivatives(s.value())?;
    let phi = [
        s.compose(&d[0..3]),
        s.compose(&d[1..4]),
        s.compose(&d[2..5]),
    ];
    let c = coefficients(&s, &b2, &phi)?;
    let aq = alpha.clone() * c.q.clone();
    let common = r00 - (aq.clone() * s0).scale(2.0);
    let psi_c = c.psi.clone() * common.clone();
    let theta_c = c.theta.div(&alpha) * common;
    let g = (0..n)
        .map(|i| {
            g_bar[i].clone()
                + aq.clone() * s_up_0[i].clone()
                + psi_c.clone() * b_up[i].clone()
                + theta_c.clone() * y[i].clone()
        })
        .collect();
    let diag = SprayDiagnostics {
        alpha: alpha.value(),
        beta: beta.value(),
        s: s.value(),
        b2: b2.value(),
        f: alpha.value() * c.phi.value(),
        q: c.q.value(),
        psi: c.psi.value(),
        theta: c.theta.value(),
    };
    Ok((g, diag))
}

/// Spray coefficients with their diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprayValue {
    pub g: Vec<f64>,
    pub diagnostics: SprayDiagnostics,
}

/// `G^i(x, y)` for the metric `α φ(β/α)`.
pub fn spray(spec: &MetricSpec, family: &PhiFamily, x: &[f64], y: &[f64]) -> Result<SprayValue> {
    let g = LocalGeometry::at(spec, x)?;
    spray_at(&g, family, y)
}

/// Spray at a point whose geometry is already evaluated.
pub fn spray_at(g: &LocalGeometry, family: &PhiFamily, y: &[f64]) -> Result<SprayValue> {
    if y.len() != g.n {
        return Err(Error::Dimension {
            expected: g.n,
            got: y.len(),
        });
    }
    let (g, diagnostics) = spray_core(&Fields::values(g), y, Some(family))?;
    Ok(SprayValue { g, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn matsumoto_profile_values() {
        assert_eq!(
            phi_eval(&PhiFamily::Matsumoto, 0.0).unwrap(),
            (1.0, 1.0, 2.0)
        );
        let (p, p1, p2) = phi_eval(&PhiFamily::Matsumoto, 0.2).unwrap();
        assert!(close(p, 1.25, 1e-15) && close(p1, 1.5625, 1e-15) && close(p2, 3.90625, 1e-15));
        assert!(phi_eval(&PhiFamily::Matsumoto, 1.0).is_err());
        match phi_eval(&PhiFamily::Matsumoto, 0.5) {
            Err(Error::ProfileDomain { s, .. }) => assert_eq!(s, 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coefficient_closed_forms() {
        let (q, _, _) = qpt(&PhiFamily::Matsumoto, 0.2, 0.3).unwrap();
        assert!(close(q, 5.0 / 3.0, 1e-14));
        let (q, psi, theta) = qpt(&PhiFamily::Matsumoto, 0.0, 0.0).unwrap();
        assert!(close(q, 1.0, 1e-15) && close(psi, 1.0, 1e-15) && close(theta, 0.5, 1e-15));
        for (s, b2) in [(0.3, 0.5), (-0.7, 0.9), (0.0, 0.0)] {
            let (q, psi, _) = qpt(&PhiFamily::Randers, s, b2).unwrap();
            assert_eq!((q, psi), (1.0, 0.0));
        }
    }

    #[test]
    fn custom_profile_matches_named_family() {
        let custom = PhiFamily::custom("1/(1 - s)").unwrap();
        let a = PhiFamily::Matsumoto.derivatives(0.23).unwrap();
        let b = custom.derivatives(0.23).unwrap();
        for k in 0..5 {
            assert!(close(a[k], b[k], 1e-13), "{k}: {} vs {}", a[k], b[k]);
        }
    }

    #[test]
    fn radial_form_at_origin() {
        let spec = MetricSpec::euclidean(&["0.1*x1", "0.1*x2"]).unwrap();
        let v = spray(&spec, &PhiFamily::Matsumoto, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(
            close(v.g[0], 0.05, 1e-15) && v.g[1].abs() < 1e-15,
            "{:?}",
            v.g
        );
    }

    #[test]
    fn zero_form_gives_riemannian_spray() {
        let spec = MetricSpec::stereographic_sphere(1.0, &["0", "0"]).unwrap();
        let g = LocalGeometry::at(&spec, &[0.3, -0.2]).unwrap();
        let y = [0.4, 0.9];
        let full = spray_at(&g, &PhiFamily::Matsumoto, &y).unwrap();
        let (bar, _) = spray_core(&Fields::values(&g), &y, None).unwrap();
        assert_eq!(full.g, bar);
    }
}
