//! Scalars that carry derivative information.
//!
//! [`Jet`] is a truncated second-order Taylor jet in a fixed number of
//! variables: value, gradient, and the symmetric Hessian stored as a packed
//! upper triangle so that `(p, q)` and `(q, p)` share one slot. [`Series`] is a
//! univariate Taylor series to order four, used for the profile function of a
//! metric where fourth derivatives are needed. Plain `f64` implements the same
//! trait so formulas can be written once and evaluated at any level.

use std::ops::{Add, Mul, Neg, Sub};

/// Arithmetic shared by `f64`, [`Jet`] and [`Series`].
///
/// Division and elementary functions go through [`Number::compose`], which
/// takes the derivatives of the outer function at the inner value.
pub trait Number:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// A constant living in the same derivative space as `self`.
    fn constant_like(&self, c: f64) -> Self;

    fn value(&self) -> f64;

    /// `f(self)` where `derivs[k]` is the k-th derivative of `f` at `self.value()`.
    ///
    /// Jets read three entries, series read five; missing entries count as 0.
    fn compose(&self, derivs: &[f64]) -> Self;

    fn scale(&self, c: f64) -> Self;

    /// True when the type carries no derivatives at all.
    fn is_plain(&self) -> bool {
        false
    }

    fn recip(&self) -> Self {
        let v = self.value();
        let r = 1.0 / v;
        self.compose(&[
            r,
            -r * r,
            2.0 * r * r * r,
            -6.0 * r.powi(4),
            24.0 * r.powi(5),
        ])
    }

    fn div(&self, other: &Self) -> Self {
        self.clone() * other.recip()
    }

    fn sqrt(&self) -> Self {
        let v = self.value();
        let s = v.sqrt();
        self.compose(&[
            s,
            0.5 / s,
            -0.25 / (s * v),
            0.375 / (s * v * v),
            -0.9375 / (s * v * v * v),
        ])
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    fn powi(&self, k: u32) -> Self {
        let mut acc = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        acc
    }
}

impl Number for f64 {
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn compose(&self, derivs: &[f64]) -> Self {
        derivs[0]
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn is_plain(&self) -> bool {
        true
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
}

/// Position of the unordered pair `{p, q}` in a packed upper triangle of size `n`.
pub fn pair_index(n: usize, p: usize, q: usize) -> usize {
    let (p, q) = if p <= q { (p, q) } else { (q, p) };
    debug_assert!(q < n);
    // row p starts after p rows of lengths n, n-1, ..., n-p+1
    p * (2 * n + 1 - p) / 2 + (q - p)
}

/// Second-order jet in `nvars` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    value: f64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, nvars: usize) -> Jet {
        Jet {
            value,
            first: vec![0.0; nvars],
            second: vec![0.0; nvars * (nvars + 1) / 2],
        }
    }

    /// The `k`-th coordinate function, seeded at `value`.
    pub fn variable(value: f64, k: usize, nvars: usize) -> Jet {
        let mut j = Jet::constant(value, nvars);
        j.first[k] = 1.0;
        j
    }

    /// A jet with given value and gradient and zero second derivatives.
    pub fn linear(value: f64, first: Vec<f64>) -> Jet {
        let n = first.len();
        Jet {
            value,
            first,
            second: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn from_parts(value: f64, first: Vec<f64>, second: Vec<f64>) -> Jet {
        assert_eq!(second.len(), first.len() * (first.len() + 1) / 2);
        Jet {
            value,
            first,
            second,
        }
    }

    pub fn nvars(&self) -> usize {
        self.first.len()
    }

    pub fn first(&self, k: usize) -> f64 {
        self.first[k]
    }

    pub fn second(&self, p: usize, q: usize) -> f64 {
        self.second[pair_index(self.nvars(), p, q)]
    }

    pub fn set_second(&mut self, p: usize, q: usize, v: f64) {
        let n = self.nvars();
        self.second[pair_index(n, p, q)] = v;
    }

    pub fn gradient(&self) -> &[f64] {
        &self.first
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        assert_eq!(self.nvars(), other.nvars(), "jets from different spaces");
        Jet {
            value: f(self.value, other.value),
            first: self
                .first
                .iter()
                .zip(&other.first)
                .map(|(a, b)| f(*a, *b))
                .collect(),
            second: self
                .second
                .iter()
                .zip(&other.second)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        self.zip(&o, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self.zip(&o, |a, b| a - b)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let n = self.nvars();
        assert_eq!(n, o.nvars(), "jets from different spaces");
        let (u, v) = (self.value, o.value);
        let first = (0..n).map(|k| self.first[k] * v + u * o.first[k]).collect();
        let mut second = Vec::with_capacity(self.second.len());
        for p in 0..n {
            for q in p..n {
                let idx = second.len();
                second.push(
                    self.second[idx] * v
                        + self.first[p] * o.first[q]
                        + self.first[q] * o.first[p]
                        + u * o.second[idx],
                );
            }
        }
        Jet {
            value: u * v,
            first,
            second,
        }
    }
}

impl Number for Jet {
    fn constant_like(&self, c: f64) -> Self {
        Jet::constant(c, self.nvars())
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn compose(&self, derivs: &[f64]) -> Self {
        let d = |k: usize| derivs.get(k).copied().unwrap_or(0.0);
        let (f0, f1, f2) = (d(0), d(1), d(2));
        let n = self.nvars();
        let first = self.first.iter().map(|g| f1 * g).collect();
        let mut second = Vec::with_capacity(self.second.len());
        for p in 0..n {
            for q in p..n {
                let idx = second.len();
                second.push(f1 * self.second[idx] + f2 * self.first[p] * self.first[q]);
            }
        }
        Jet {
            value: f0,
            first,
            second,
        }
    }

    fn scale(&self, c: f64) -> Self {
        Jet {
            value: self.value * c,
            first: self.first.iter().map(|x| x * c).collect(),
            second: self.second.iter().map(|x| x * c).collect(),
        }
    }
}

/// Truncated univariate Taylor series `c[0] + c[1] t + ... + c[4] t^4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Series {
    pub c: [f64; 5],
}

impl Series {
    /// The identity function expanded at `x`.
    pub fn variable(x: f64) -> Series {
        Series {
            c: [x, 1.0, 0.0, 0.0, 0.0],
        }
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];
        self.c[k] * FACT[k]
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, o: Series) -> Series {
        Series {
            c: std::array::from_fn(|k| self.c[k] + o.c[k]),
        }
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, o: Series) -> Series {
        Series {
            c: std::array::from_fn(|k| self.c[k] - o.c[k]),
        }
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(-1.0)
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, o: Series) -> Series {
        Series {
            c: std::array::from_fn(|k| (0..=k).map(|i| self.c[i] * o.c[k - i]).sum()),
        }
    }
}

impl Number for Series {
    fn constant_like(&self, c: f64) -> Self {
        Series {
            c: [c, 0.0, 0.0, 0.0, 0.0],
        }
    }

    fn value(&self) -> f64 {
        self.c[0]
    }

    fn compose(&self, derivs: &[f64]) -> Self {
        const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut out = self.constant_like(derivs[0]);
        let mut power = self.constant_like(1.0);
        for (k, fact) in FACT.iter().enumerate().skip(1) {
            power = power * delta;
            let dk = derivs.get(k).copied().unwrap_or(0.0);
            if dk != 0.0 {
                out = out + power.scale(dk / fact);
            }
        }
        out
    }

    fn scale(&self, c: f64) -> Self {
        Series {
            c: self.c.map(|x| x * c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // f(u, v) = sqrt(u² + v²) / (1 + u v), generic over the scalar
    fn sample<T: Number>(u: T, v: T) -> T {
        let num = (u.square() + v.square()).sqrt();
        let den = u.constant_like(1.0) + u.clone() * v;
        num.div(&den)
    }

    #[test]
    fn pair_index_is_symmetric_and_dense() {
        let n = 4;
        let mut seen = vec![false; n * (n + 1) / 2];
        for p in 0..n {
            for q in 0..n {
                assert_eq!(pair_index(n, p, q), pair_index(n, q, p));
                seen[pair_index(n, p, q)] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn series_of_geometric_profile() {
        // 1/(1 − s) has k-th derivative k!/(1 − s)^(k+1)
        let s = 0.2;
        let x = Series::variable(s);
        let f = (x.constant_like(1.0) - x).recip();
        let mut fact = 1.0;
        for k in 0..5 {
            if k > 0 {
                fact *= k as f64;
            }
            let want = fact / (1.0 - s).powi(k as i32 + 1);
            assert!((f.derivative(k) - want).abs() < 1e-12 * want);
        }
    }

    proptest! {
        #[test]
        fn jet_matches_central_differences(u in 0.2f64..1.2, v in -0.6f64..0.6) {
            let j = sample(Jet::variable(u, 0, 2), Jet::variable(v, 1, 2));
            prop_assert!((j.value() - sample(u, v)).abs() < 1e-15);
            let h = 1e-5;
            let f = |a: f64, b: f64| sample(a, b);
            let du = (f(u + h, v) - f(u - h, v)) / (2.0 * h);
            let dv = (f(u, v + h) - f(u, v - h)) / (2.0 * h);
            let duu = (f(u + h, v) - 2.0 * f(u, v) + f(u - h, v)) / (h * h);
            let duv = (f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h)) / (4.0 * h * h);
            let rel = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol * (1.0 + b.abs());
            prop_assert!(rel(j.first(0), du, 1e-6));
            prop_assert!(rel(j.first(1), dv, 1e-6));
            prop_assert!(rel(j.second(0, 0), duu, 1e-4));
            prop_assert!(rel(j.second(0, 1), duv, 1e-4));
            prop_assert_eq!(j.second(0, 1), j.second(1, 0));
        }

        #[test]
        fn powi_agrees_with_repeated_products(x in -2.0f64..2.0, k in 0u32..9) {
            let j = Jet::variable(x, 0, 1);
            let mut prod = Jet::constant(1.0, 1);
            for _ in 0..k {
                prod = prod * j.clone();
            }
            let p = j.powi(k);
            prop_assert!((p.value() - prod.value()).abs() <= 1e-12 * (1.0 + prod.value().abs()));
            prop_assert!((p.first(0) - prod.first(0)).abs() <= 1e-12 * (1.0 + prod.first(0).abs()));
            prop_assert!((p.second(0, 0) - prod.second(0, 0)).abs() <= 1e-12 * (1.0 + prod.second(0, 0).abs()));
        }
    }
}
