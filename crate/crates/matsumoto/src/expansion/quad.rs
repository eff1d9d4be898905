//! Arithmetic in `ℝ[α]/(α² − A)`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// `u + v α` with `α² = a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadExtScalar {
    pub u: f64,
    pub v: f64,
    pub a: f64,
}

impl QuadExtScalar {
    pub fn new(u: f64, v: f64, a: f64) -> QuadExtScalar {
        QuadExtScalar { u, v, a }
    }

    /// `α` itself.
    pub fn generator(a: f64) -> QuadExtScalar {
        QuadExtScalar::new(0.0, 1.0, a)
    }

    /// Value at `α = √A`.
    pub fn at_plus(&self) -> f64 {
        self.u + self.v * self.a.sqrt()
    }

    /// Value at `α = −√A`.
    pub fn at_minus(&self) -> f64 {
        self.u - self.v * self.a.sqrt()
    }
}

impl Add for QuadExtScalar {
    type Output = QuadExtScalar;
    fn add(self, o: QuadExtScalar) -> QuadExtScalar {
        QuadExtScalar::new(self.u + o.u, self.v + o.v, self.a)
    }
}

impl Sub for QuadExtScalar {
    type Output = QuadExtScalar;
    fn sub(self, o: QuadExtScalar) -> QuadExtScalar {
        QuadExtScalar::new(self.u - o.u, self.v - o.v, self.a)
    }
}

impl Neg for QuadExtScalar {
    type Output = QuadExtScalar;
    fn neg(self) -> QuadExtScalar {
        QuadExtScalar::new(-self.u, -self.v, self.a)
    }
}

impl Mul for QuadExtScalar {
    type Output = QuadExtScalar;
    fn mul(self, o: QuadExtScalar) -> QuadExtScalar {
        QuadExtScalar::new(
            self.u * o.u + self.v * o.v * self.a,
            self.u * o.v + self.v * o.u,
            self.a,
        )
    }
}

/// `Σ c_k α^k` reduced to `(Σ c_{2i} A^i) + (Σ c_{2i+1} A^i) α`.
pub fn parity_split(coeffs: &[f64], a: f64) -> QuadExtScalar {
    let horner =
        |it: &mut dyn DoubleEndedIterator<Item = &f64>| it.rev().fold(0.0, |acc, c| acc * a + c);
    let u = horner(&mut coeffs.iter().step_by(2));
    let v = horner(&mut coeffs.iter().skip(1).step_by(2));
    QuadExtScalar::new(u, v, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(
            parity_split(&[1.0, 2.0, 3.0], 4.0),
            QuadExtScalar::new(13.0, 2.0, 4.0)
        );
        assert_eq!(
            parity_split(&[0.0; 6], 2.0),
            QuadExtScalar::new(0.0, 0.0, 2.0)
        );
        assert_eq!(parity_split(&[], 2.0), QuadExtScalar::new(0.0, 0.0, 2.0));
    }

    fn horner(coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    proptest! {
        #[test]
        fn split_matches_horner_at_both_roots(
            coeffs in prop::collection::vec(-10.0f64..10.0, 0..14),
            alpha in 0.05f64..2.0,
        ) {
            let q = parity_split(&coeffs, alpha * alpha);
            prop_assert!(close(q.at_plus(), horner(&coeffs, alpha)));
            prop_assert!(close(q.at_minus(), horner(&coeffs, -alpha)));
        }

        #[test]
        fn ring_axioms(
            p in prop::array::uniform6(-5.0f64..5.0),
            a in 0.1f64..4.0,
        ) {
            let x = QuadExtScalar::new(p[0], p[1], a);
            let y = QuadExtScalar::new(p[2], p[3], a);
            let z = QuadExtScalar::new(p[4], p[5], a);
            let eq = |l: QuadExtScalar, r: QuadExtScalar| close(l.u, r.u) && close(l.v, r.v);
            prop_assert!(eq(x * y, y * x));
            prop_assert!(eq((x * y) * z, x * (y * z)));
            prop_assert!(eq(x * (y + z), x * y + x * z));
            prop_assert!(eq(x - x, QuadExtScalar::new(0.0, 0.0, a)));
            prop_assert!(close((x * y).at_plus(), x.at_plus() * y.at_plus()));
            let g = QuadExtScalar::generator(a);
            prop_assert!(eq(g * g, QuadExtScalar::new(a, 0.0, a)));
        }
    }
}
