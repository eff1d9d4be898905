//! The Riemannian part of an (α, β)-metric: the metric `a_ij`, its
//! Levi-Civita connection, and covariant derivatives of the one-form `b_i`.
//!
//! Lowered direction components always mean `y_i = a_ij y^j`. A subscript 0
//! in field names stands for contraction with `y`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr};
use crate::number::{Jet, Number};

/// Metric components `a_ij(x)` and one-form components `b_i(x)`.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    dim: usize,
    a: Vec<Vec<Expr>>,
    b: Vec<Expr>,
    a_src: Vec<Vec<String>>,
    b_src: Vec<String>,
}

impl MetricSpec {
    /// Build from component sources; `a` must be square and symmetric as trees.
    pub fn new<A: AsRef<str>, B: AsRef<str>>(a: &[Vec<A>], b: &[B]) -> Result<MetricSpec> {
        let dim = b.len();
        if dim == 0 {
            return Err(Error::Dimension {
                expected: 1,
                got: 0,
            });
        }
        if a.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: a.len(),
            });
        }
        let mut parsed = Vec::with_capacity(dim);
        for row in a {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: row.len(),
                });
            }
            let r = row
                .iter()
                .map(|s| parse_expression(s.as_ref(), dim))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            parsed.push(r);
        }
        for i in 0..dim {
            for j in 0..i {
                if parsed[i][j] != parsed[j][i] {
                    return Err(Error::AsymmetricMetric { i, j });
                }
            }
        }
        let bs = b
            .iter()
            .map(|s| parse_expression(s.as_ref(), dim))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(MetricSpec {
            dim,
            a: parsed,
            b: bs,
            a_src: a
                .iter()
                .map(|r| r.iter().map(|s| s.as_ref().to_string()).collect())
                .collect(),
            b_src: b.iter().map(|s| s.as_ref().to_string()).collect(),
        })
    }

    /// Flat metric `δ_ij` with the given one-form.
    pub fn euclidean<S: AsRef<str>>(b: &[S]) -> Result<MetricSpec> {
        let n = b.len();
        let a: Vec<Vec<String>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { "1" } else { "0" }.to_string())
                    .collect()
            })
            .collect();
        MetricSpec::new(&a, b)
    }

    /// Round sphere of the given radius in stereographic coordinates,
    /// `a_ij = 4 ρ⁴ δ_ij / (ρ² + |x|²)²`, sectional curvature `1/ρ²`.
    pub fn stereographic_sphere<S: AsRef<str>>(radius: f64, b: &[S]) -> Result<MetricSpec> {
        let n = b.len();
        let norm: Vec<String> = (1..=n).map(|k| format!("x{k}^2")).collect();
        let r2 = radius * radius;
        let factor = format!("{:?}/({:?} + {})^2", 4.0 * r2 * r2, r2, norm.join(" + "));
        let a: Vec<Vec<String>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            factor.clone()
                        } else {
                            "0".to_string()
                        }
                    })
                    .collect()
            })
            .collect();
        MetricSpec::new(&a, b)
    }

    /// The same metric with a different one-form.
    pub fn with_one_form<S: AsRef<str>>(&self, b: &[S]) -> Result<MetricSpec> {
        MetricSpec::new(&self.a_src, b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric_sources(&self) -> &[Vec<String>] {
        &self.a_src
    }

    pub fn one_form_sources(&self) -> &[String] {
        &self.b_src
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Returns the smallest pivot if the matrix is not positive definite.
///
/// Cholesky with symmetric pivoting: each step eliminates the largest
/// remaining diagonal entry. A pivot at or below `1e-14 · max diag` fails.
pub fn pivoted_cholesky_check(a: &DMatrix<f64>) -> std::result::Result<(), f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let scale = (0..n)
        .map(|i| m[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        let (pos, &p) = active
            .iter()
            .enumerate()
            .max_by(|a, b| m[(*a.1, *a.1)].total_cmp(&m[(*b.1, *b.1)]))
            .unwrap();
        let pivot = m[(p, p)];
        // also rejects a NaN pivot
        if pivot.is_nan() || pivot <= 1e-14 * scale {
            return Err(pivot);
        }
        active.swap_remove(pos);
        for &i in &active {
            for &j in &active {
                m[(i, j)] -= m[(i, p)] * m[(p, j)] / pivot;
            }
        }
    }
    Ok(())
}

/// Everything the curvature machinery needs about `a` and `b` at one point.
///
/// Derivative tensors are indexed by the differentiation direction first:
/// `da[k]` is `∂_k a`, `dgamma[l][i]` holds `∂_l γ^i_jk` as a matrix in `(j, k)`.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub n: usize,
    pub x: Vec<f64>,
    pub a: DMatrix<f64>,
    pub a_inv: DMatrix<f64>,
    pub da: Vec<DMatrix<f64>>,
    pub da_inv: Vec<DMatrix<f64>>,
    /// `b_i`
    pub b: DVector<f64>,
    /// `db[(i, k)] = ∂_k b_i`
    pub db: DMatrix<f64>,
    /// `gamma[i][(j, k)] = γ^i_jk`
    pub gamma: Vec<DMatrix<f64>>,
    pub dgamma: Vec<Vec<DMatrix<f64>>>,
    /// `b_{i|j}`
    pub b_cov: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub dr: Vec<DMatrix<f64>>,
    pub ds: Vec<DMatrix<f64>>,
    /// `r_cov[k][(i, j)] = r_{ij|k}`
    pub r_cov: Vec<DMatrix<f64>>,
    pub s_cov: Vec<DMatrix<f64>>,
}

impl LocalGeometry {
    pub fn at(spec: &MetricSpec, x: &[f64]) -> Result<LocalGeometry> {
        spec.check_point(x)?;
        let n = spec.dim;
        let vars: Vec<Jet> = (0..n).map(|k| Jet::variable(x[k], k, n)).collect();
        let mut a = DMatrix::zeros(n, n);
        let mut da = vec![DMatrix::zeros(n, n); n];
        let mut dda = vec![vec![DMatrix::zeros(n, n); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = spec.a[i][j].eval(&vars)?;
                for (p, q) in [(i, j), (j, i)] {
                    a[(p, q)] = v.value();
                    for k in 0..n {
                        da[k][(p, q)] = v.first(k);
                        for l in 0..n {
                            dda[k][l][(p, q)] = v.second(k, l);
                        }
                    }
                }
            }
        }
        if let Err(pivot) = pivoted_cholesky_check(&a) {
            return Err(Error::NotPositiveDefinite {
                x: x.to_vec(),
                pivot,
            });
        }
        let a_inv = a
            .clone()
            .cholesky()
            .expect("checked positive definite")
            .inverse();
        let da_inv: Vec<DMatrix<f64>> = da.iter().map(|d| -(&a_inv * d * &a_inv)).collect();

        let mut b = DVector::zeros(n);
        let mut db = DMatrix::zeros(n, n);
        let mut ddb = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            let v = spec.b[i].eval(&vars)?;
            b[i] = v.value();
            for k in 0..n {
                db[(i, k)] = v.first(k);
                for l in 0..n {
                    ddb[i][(k, l)] = v.second(k, l);
                }
            }
        }

        // first-kind symbols Γ_mjk = ∂_j a_mk + ∂_k a_mj − ∂_m a_jk and their derivatives
        let first_kind =
            |m: usize, j: usize, k: usize| da[j][(m, k)] + da[k][(m, j)] - da[m][(j, k)];
        let d_first_kind = |l: usize, m: usize, j: usize, k: usize| {
            dda[l][j][(m, k)] + dda[l][k][(m, j)] - dda[l][m][(j, k)]
        };
        let mut gamma = vec![DMatrix::zeros(n, n); n];
        let mut dgamma = vec![vec![DMatrix::zeros(n, n); n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut g = 0.0;
                    for m in 0..n {
                        g += a_inv[(i, m)] * first_kind(m, j, k);
                    }
                    gamma[i][(j, k)] = 0.5 * g;
                    for l in 0..n {
                        let mut dg = 0.0;
                        for m in 0..n {
                            dg += da_inv[l][(i, m)] * first_kind(m, j, k)
                                + a_inv[(i, m)] * d_first_kind(l, m, j, k);
                        }
                        dgamma[l][i][(j, k)] = 0.5 * dg;
                    }
                }
            }
        }

        // b_{i|j} = ∂_j b_i − γ^m_ij b_m and its partials
        let mut b_cov = DMatrix::zeros(n, n);
        let mut d_b_cov = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in 0..n {
                let mut v = db[(i, j)];
                for m in 0..n {
                    v -= gamma[m][(i, j)] * b[m];
                }
                b_cov[(i, j)] = v;
                for k in 0..n {
                    let mut dv = ddb[i][(j, k)];
                    for m in 0..n {
                        dv -= dgamma[k][m][(i, j)] * b[m] + gamma[m][(i, j)] * db[(m, k)];
                    }
                    d_b_cov[k][(i, j)] = dv;
                }
            }
        }
        let sym = |m: &DMatrix<f64>| (m + m.transpose()) * 0.5;
        let skew = |m: &DMatrix<f64>| (m - m.transpose()) * 0.5;
        let r = sym(&b_cov);
        let s = skew(&b_cov);
        let dr: Vec<_> = d_b_cov.iter().map(sym).collect();
        let ds: Vec<_> = d_b_cov.iter().map(skew).collect();
        let covariant = |t: &DMatrix<f64>, dt: &[DMatrix<f64>]| -> Vec<DMatrix<f64>> {
            (0..n)
                .map(|k| {
                    DMatrix::from_fn(n, n, |i, j| {
                        let mut v = dt[k][(i, j)];
                        for m in 0..n {
                            v -= gamma[m][(k, i)] * t[(m, j)] + gamma[m][(k, j)] * t[(i, m)];
                        }
                        v
                    })
                })
                .collect()
        };
        let r_cov = covariant(&r, &dr);
        let s_cov = covariant(&s, &ds);

        Ok(LocalGeometry {
            n,
            x: x.to_vec(),
            a,
            a_inv,
            da,
            da_inv,
            b,
            db,
            gamma,
            dgamma,
            b_cov,
            r,
            s,
            dr,
            ds,
            r_cov,
            s_cov,
        })
    }

    /// `b^i = a^{ij} b_j`
    pub fn b_up(&self) -> DVector<f64> {
        &self.a_inv * &self.b
    }

    /// `b² = a^{ij} b_i b_j`
    pub fn b_norm2(&self) -> f64 {
        self.b.dot(&self.b_up())
    }

    /// Riemannian norm `α(y)`.
    pub fn alpha(&self, y: &DVector<f64>) -> f64 {
        (y.dot(&(&self.a * y))).sqrt()
    }

    /// Christoffel symbols as `gamma[i][(j, k)] = γ^i_jk`.
    pub fn christoffel(&self) -> &[DMatrix<f64>] {
        &self.gamma
    }
}

/// `γ^i_jk` at `x`, as `gamma[i][(j, k)]`.
pub fn christoffel(spec: &MetricSpec, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    Ok(LocalGeometry::at(spec, x)?.gamma)
}

/// Contractions of `r_ij`, `s_ij` and their covariant derivatives at `(x, y)`.
///
/// Names follow index positions: `s_up_0[i]` is `s^i_0`, `s_0j[j]` is
/// `s_{0j} = y^i s_ij`, `rj0_0[j]` is `r_{j0|0}`, and so on. Every field is
/// recomputed from the tensors in [`LocalGeometry`].
#[derive(Debug, Clone)]
pub struct BetaBundle {
    pub n: usize,
    pub y: DVector<f64>,
    /// `y_i = a_ij y^j`
    pub y_low: DVector<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub b_low: DVector<f64>,
    pub b_up: DVector<f64>,
    pub b2: f64,
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
    /// `r^i_j`
    pub r_up: DMatrix<f64>,
    /// `s^i_j`
    pub s_up: DMatrix<f64>,
    /// `r_j = b^m r_mj`
    pub r_vec: DVector<f64>,
    /// `s_j = b^m s_mj`
    pub s_vec: DVector<f64>,
    /// `s^i = a^{im} s_m`
    pub s_vec_up: DVector<f64>,
    /// `r = r_j b^j`
    pub r_scalar: f64,
    pub r00: f64,
    /// `r_0 = r_j y^j`
    pub r0: f64,
    /// `r_{0j} = r_{j0} = y^i r_ij`
    pub r_0j: DVector<f64>,
    pub s0: f64,
    /// `s^i_0`
    pub s_up_0: DVector<f64>,
    /// `s_{0j} = y^i s_ij`
    pub s_0j: DVector<f64>,
    /// `r^i_0`
    pub r_up_0: DVector<f64>,
    pub r_cov: Vec<DMatrix<f64>>,
    pub s_cov: Vec<DMatrix<f64>>,
    /// `s_{j|k}` for the covector `s_j`
    pub s_vec_cov: DMatrix<f64>,
    pub r00_0: f64,
    pub r00_j: DVector<f64>,
    pub rj0_0: DVector<f64>,
    pub s0_0: f64,
    /// `s^i_{0|0}`
    pub s_up_0_0: DVector<f64>,
    /// `s_{0|j}`
    pub s0_j: DVector<f64>,
    /// `s_{j|0}`
    pub sj_0: DVector<f64>,
    /// `s^i_{j|0}`
    pub s_up_j_0: DMatrix<f64>,
    /// `s^i_{0|j}`
    pub s_up_0_j: DMatrix<f64>,
    /// `s^m_{0|m}`
    pub s_div_0: f64,
    /// `s_{m|0} b^m`
    pub sm_0_bm: f64,
    /// `s_{0|m} b^m`
    pub s0_m_bm: f64,
    /// `r_{0m|0} b^m`
    pub r0m_0_bm: f64,
    /// `r_{00|m} b^m`
    pub r00_m_bm: f64,
    /// `r_{0k} s^k_0`
    pub r0k_sk0: f64,
    /// `r_{0k} s^k`
    pub r0k_sk: f64,
    /// `s^k_0 r_k`
    pub sk0_rk: f64,
    /// `s_m s^m_0`
    pub sm_sm0: f64,
    /// `s_m s^m`
    pub sm_sm: f64,
    /// `s^i_k s^k_j`
    pub s_sq: DMatrix<f64>,
    /// `s^i_k s^k_0`
    pub s_sq_0: DVector<f64>,
    /// `s^i_m s^m_i`
    pub s_sq_trace: f64,
    /// `s_m s^m_j`
    pub sm_smj: DVector<f64>,
    /// `r_{k0} s^k_j`
    pub rk0_skj: DVector<f64>,
    /// `r_{jk} s^k_0`
    pub rjk_sk0: DVector<f64>,
    /// `r_{0m} r^m_0`
    pub r0m_rm0: f64,
    /// `r^m_m`
    pub r_trace: f64,
    /// `s_m r^m_0`
    pub sm_rm0: f64,
    /// `r_m s^m_0`
    pub rm_sm0: f64,
}

impl BetaBundle {
    pub fn from_geometry(g: &LocalGeometry, y: &[f64]) -> Result<BetaBundle> {
        let n = g.n;
        if y.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: y.len(),
            });
        }
        let y = DVector::from_column_slice(y);
        if y.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroDirection);
        }
        let ai = &g.a_inv;
        let y_low = &g.a * &y;
        let alpha = y.dot(&y_low).sqrt();
        let b_up = g.b_up();
        let beta = g.b.dot(&y);
        let b2 = g.b.dot(&b_up);
        let r_up = ai * &g.r;
        let s_up = ai * &g.s;
        let r_vec = g.r.transpose() * &b_up;
        let s_vec = g.s.transpose() * &b_up;
        let s_vec_up = ai * &s_vec;
        let r_scalar = r_vec.dot(&b_up);
        let r_0j = g.r.transpose() * &y;
        let r00 = r_0j.dot(&y);
        let r0 = r_vec.dot(&y);
        let s0 = s_vec.dot(&y);
        let s_up_0 = &s_up * &y;
        let s_0j = g.s.transpose() * &y;
        let r_up_0 = &r_up * &y;

        // covector s_j = b^m s_mj; b^m_{|k} = a^{ml} b_{l|k}
        let b_up_cov = ai * &g.b_cov;
        let s_vec_cov = DMatrix::from_fn(n, n, |j, k| {
            (0..n)
                .map(|m| b_up_cov[(m, k)] * g.s[(m, j)] + b_up[m] * g.s_cov[k][(m, j)])
                .sum()
        });
        let contract_y = |t: &[DMatrix<f64>]| -> Vec<DVector<f64>> {
            // t[k] (i, j) -> (t_{ij|k} y^j) as a vector over (k, i)
            t.iter().map(|m| m * &y).collect()
        };
        let r_y = contract_y(&g.r_cov); // r_y[k][i] = r_{i0|k}
        let s_y = contract_y(&g.s_cov); // s_y[k][i] = s_{i0|k}
        let r00_j = DVector::from_fn(n, |j, _| r_y[j].dot(&y));
        let r00_0 = r00_j.dot(&y);
        let rj0_0 = DVector::from_fn(n, |j, _| (0..n).map(|k| r_y[k][j] * y[k]).sum());
        let sj_0 = &s_vec_cov * &y;
        let s0_j = s_vec_cov.transpose() * &y;
        let s0_0 = sj_0.dot(&y);
        // s_{m0|k} y^k as a vector in m, then raised
        let s_m0_0 = DVector::from_fn(n, |m, _| (0..n).map(|k| s_y[k][m] * y[k]).sum());
        let s_up_0_0 = ai * &s_m0_0;
        let s_mj_0 = DMatrix::from_fn(n, n, |m, j| (0..n).map(|k| g.s_cov[k][(m, j)] * y[k]).sum());
        let s_up_j_0 = ai * &s_mj_0;
        let s_m0_j = DMatrix::from_fn(n, n, |m, j| s_y[j][m]);
        let s_up_0_j = ai * &s_m0_j;
        let s_div_0 = (0..n).map(|m| s_up_0_j[(m, m)]).sum();
        let sm_0_bm = sj_0.dot(&b_up);
        let s0_m_bm = s0_j.dot(&b_up);
        // r_{km|l} y^k y^l b^m
        let r0m_0_bm = (0..n)
            .map(|l| (g.r_cov[l].transpose() * &y).dot(&b_up) * y[l])
            .sum::<f64>();
        let r00_m_bm = r00_j.dot(&b_up);

        let r0k_sk0 = r_0j.dot(&s_up_0);
        let r0k_sk = r_0j.dot(&s_vec_up);
        let sk0_rk = s_up_0.dot(&r_vec);
        let sm_sm0 = s_vec.dot(&s_up_0);
        let sm_sm = s_vec.dot(&s_vec_up);
        let s_sq = &s_up * &s_up;
        let s_sq_0 = &s_sq * &y;
        let s_sq_trace = s_sq.trace();
        let sm_smj = s_up.transpose() * &s_vec;
        let rk0_skj = s_up.transpose() * &r_0j;
        let rjk_sk0 = &g.r * &s_up_0;
        let r0m_rm0 = r_0j.dot(&r_up_0);
        let r_trace = r_up.trace();
        let sm_rm0 = s_vec.dot(&r_up_0);
        let rm_sm0 = r_vec.dot(&s_up_0);

        Ok(BetaBundle {
            n,
            y_low,
            alpha,
            beta,
            b_low: g.b.clone(),
            b_up,
            b2,
            r: g.r.clone(),
            s: g.s.clone(),
            r_up,
            s_up,
            r_vec,
            s_vec,
            s_vec_up,
            r_scalar,
            r00,
            r0,
            r_0j,
            s0,
            s_up_0,
            s_0j,
            r_up_0,
            r_cov: g.r_cov.clone(),
            s_cov: g.s_cov.clone(),
            s_vec_cov,
            r00_0,
            r00_j,
            rj0_0,
            s0_0,
            s_up_0_0,
            s0_j,
            sj_0,
            s_up_j_0,
            s_up_0_j,
            s_div_0,
            sm_0_bm,
            s0_m_bm,
            r0m_0_bm,
            r00_m_bm,
            r0k_sk0,
            r0k_sk,
            sk0_rk,
            sm_sm0,
            sm_sm,
            s_sq,
            s_sq_0,
            s_sq_trace,
            sm_smj,
            rk0_skj,
            rjk_sk0,
            r0m_rm0,
            r_trace,
            sm_rm0,
            rm_sm0,
            y,
        })
    }
}

/// Contraction bundle of `β` at `(x, y)`.
pub fn beta_bundle(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<BetaBundle> {
    BetaBundle::from_geometry(&LocalGeometry::at(spec, x)?, y)
}

/// Geodesic spray, Riemann curvature and Ricci scalar of `α` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCurvature {
    /// `Ḡ^i = ½ γ^i_jk y^j y^k`
    pub g: Vec<f64>,
    /// `r[(i, j)] = R̄^i_j`
    pub r: DMatrix<f64>,
    pub ric: f64,
}

pub fn base_spray_curvature(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<BaseCurvature> {
    let probe = crate::curvature::CurvatureProbe::riemannian(spec, x)?;
    let (g, _) = probe.spray_jets(y)?;
    let c = probe.at(y)?;
    Ok(BaseCurvature {
        g: g.iter().map(|j| j.value()).collect(),
        r: c.r,
        ric: c.ric,
    })
}
