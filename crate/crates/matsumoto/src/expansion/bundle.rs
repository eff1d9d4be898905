//! Slot values for one `(x, y)` and one index pair.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::slots::Slot;
use crate::curvature::{CurvatureProbe, WeaklyEinsteinFit};
use crate::error::{Error, Result};
use crate::riemannian::{BetaBundle, LocalGeometry, MetricSpec};
use crate::spray::PhiFamily;

/// Every scalar the coefficient tables read, for a fixed index pair `(i, j)`.
///
/// Slots that were not filled read 0. Undefined slots always read 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantBundle {
    pub n: usize,
    pub alpha: f64,
    pub pair: (usize, usize),
    values: Vec<f64>,
    /// conformal slots hold meaningful values
    pub conformal: bool,
    /// weakly Einstein slots hold meaningful values
    pub einstein: bool,
    /// how odd powers of the `b` slot are read
    #[serde(default)]
    pub odd_b: OddBReading,
}

/// Reading of a table factor `b^e` with `e` odd.
///
/// `Verbatim` takes `b = √(b²)` literally. `Halved` reads `b^e` as `b^(e−1)/2`;
/// with it the printed tables agree with the curvature pipeline on the
/// instances checked, while the verbatim reading does not.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OddBReading {
    #[default]
    Verbatim,
    Halved,
}

/// What to fill beyond the always-available slots.
#[derive(Debug, Clone, Default)]
pub struct BundleOptions {
    /// fill `c, c_0, c_j, c_m b^m` from `r_ij = c a_ij`
    pub conformal: bool,
    /// fill `θ, σ` from a fit
    pub einstein: Option<WeaklyEinsteinFit>,
}

impl InvariantBundle {
    /// A bundle with every slot zero except `n`.
    pub fn zeroed(n: usize, alpha: f64, pair: (usize, usize)) -> InvariantBundle {
        let mut b = InvariantBundle {
            n,
            alpha,
            pair,
            values: vec![0.0; Slot::COUNT],
            conformal: false,
            einstein: false,
            odd_b: OddBReading::Verbatim,
        };
        b.set(Slot::N, n as f64);
        b
    }

    pub fn get(&self, slot: Slot) -> f64 {
        if slot.is_undefined() {
            0.0
        } else {
            self.values[slot.index()]
        }
    }

    pub fn set(&mut self, slot: Slot, value: f64) {
        self.values[slot.index()] = value;
    }

    /// `slot^e`, honouring the odd-`b` reading.
    pub fn power(&self, slot: Slot, e: i32) -> f64 {
        let v = self.get(slot);
        if slot == Slot::B && e % 2 != 0 && self.odd_b == OddBReading::Halved {
            v.powi(e - 1) / 2.0
        } else {
            v.powi(e)
        }
    }

    pub fn with_odd_b(mut self, reading: OddBReading) -> InvariantBundle {
        self.odd_b = reading;
        self
    }

    /// `b²`, from the slot holding `b = √(b²)`.
    pub fn b2(&self) -> f64 {
        self.get(Slot::B).powi(2)
    }

    pub fn beta(&self) -> f64 {
        self.get(Slot::Beta)
    }

    /// Fill slots from geometry at `probe`'s base point and direction `y`.
    pub fn from_probe(
        probe: &CurvatureProbe,
        y: &[f64],
        pair: (usize, usize),
        options: &BundleOptions,
    ) -> Result<InvariantBundle> {
        let g = probe.geometry();
        let n = g.n;
        let (i, j) = pair;
        if i >= n || j >= n {
            return Err(Error::PairOutOfRange { i, j, n });
        }
        let bb = BetaBundle::from_geometry(g, y)?;
        let curv = probe.at(y)?;
        let base = probe.base().at(y)?;
        let mut out = InvariantBundle::zeroed(n, bb.alpha, pair);
        fill_tensor_slots(&mut out, &bb, i, j);
        out.set(Slot::Ric, curv.ric);
        out.set(Slot::RicBar, base.ric);
        out.set(Slot::Rij, curv.r[(i, j)]);
        out.set(Slot::RbarIj, base.r[(i, j)]);
        if options.conformal {
            let (c, dc) = conformal_factor(g);
            out.set(Slot::C, c);
            out.set(Slot::Cj, dc[j]);
            out.set(Slot::C0, (0..n).map(|k| dc[k] * bb.y[k]).sum());
            out.set(Slot::CmBm, (0..n).map(|k| dc[k] * bb.b_up[k]).sum());
            out.conformal = true;
        }
        if let Some(fit) = &options.einstein {
            out.set(
                Slot::Theta,
                fit.theta.iter().zip(bb.y.iter()).map(|(t, y)| t * y).sum(),
            );
            out.set(Slot::Sigma, fit.sigma);
            out.einstein = true;
        }
        Ok(out)
    }
}

fn fill_tensor_slots(out: &mut InvariantBundle, bb: &BetaBundle, i: usize, j: usize) {
    use Slot::*;
    let pairs = [
        (Beta, bb.beta),
        (B, bb.b2.max(0.0).sqrt()),
        (YUpI, bb.y[i]),
        (YLowJ, bb.y_low[j]),
        (BUpI, bb.b_up[i]),
        (BLowJ, bb.b_low[j]),
        (DeltaIj, if i == j { 1.0 } else { 0.0 }),
        (R00, bb.r00),
        (R0, bb.r0),
        (S0, bb.s0),
        (RScalar, bb.r_scalar),
        (Rj0, bb.r_0j[j]),
        (RUpI0, bb.r_up_0[i]),
        (SUpI0, bb.s_up_0[i]),
        (S0j, bb.s_0j[j]),
        // s_{j0} = s_jm y^m = −s_{0j}
        (Sj0, -bb.s_0j[j]),
        (SUpI, bb.s_vec_up[i]),
        (Sj, bb.s_vec[j]),
        (Rj, bb.r_vec[j]),
        (RUpIj, bb.r_up[(i, j)]),
        (R00D0, bb.r00_0),
        (R00Dj, bb.r00_j[j]),
        (Rj0D0, bb.rj0_0[j]),
        (S0D0, bb.s0_0),
        (SUpI0D0, bb.s_up_0_0[i]),
        (S0Dj, bb.s0_j[j]),
        (SjD0, bb.sj_0[j]),
        (SUpIjD0, bb.s_up_j_0[(i, j)]),
        (SUpI0Dj, bb.s_up_0_j[(i, j)]),
        (R0mSm0, bb.r0k_sk0),
        (SmSm0, bb.sm_sm0),
        (SmSm, bb.sm_sm),
        (SimSmi, bb.s_sq_trace),
        (S0mDm, bb.s_div_0),
        (Sm0Bm, bb.sm_0_bm),
        (S0mBm, bb.s0_m_bm),
        (R0m0Bm, bb.r0m_0_bm),
        (R00mBm, bb.r00_m_bm),
        (R0mRm0, bb.r0m_rm0),
        (Rmm, bb.r_trace),
        (SmRm0, bb.sm_rm0),
        (RmSm0, bb.rm_sm0),
        (SikSkj, bb.s_sq[(i, j)]),
        (SikSk0, bb.s_sq_0[i]),
        (SmSmj, bb.sm_smj[j]),
        (Rk0Skj, bb.rk0_skj[j]),
        (RjkSk0, bb.rjk_sk0[j]),
    ];
    for (slot, value) in pairs {
        out.set(slot, value);
    }
}

/// `c = r^m_m / n` and `c_{|j} = a^{mk} r_{mk|j} / n`.
pub fn conformal_factor(g: &LocalGeometry) -> (f64, Vec<f64>) {
    let n = g.n as f64;
    let c = (&g.a_inv * &g.r).trace() / n;
    let dc = g
        .r_cov
        .iter()
        .map(|rk| (&g.a_inv * rk).trace() / n)
        .collect();
    (c, dc)
}

/// Largest entry of `r_ij − c a_ij`, relative to `1 + |r|`; zero for a conformal one-form.
pub fn conformal_defect(g: &LocalGeometry) -> f64 {
    let (c, _) = conformal_factor(g);
    let diff: DMatrix<f64> = &g.r - &g.a * c;
    diff.amax() / (1.0 + g.r.amax())
}

/// [`InvariantBundle::from_probe`] for a fresh point.
pub fn bundle_from_geometry(
    spec: &MetricSpec,
    family: &PhiFamily,
    x: &[f64],
    y: &[f64],
    pair: (usize, usize),
    options: &BundleOptions,
) -> Result<InvariantBundle> {
    let probe = CurvatureProbe::new(spec, family, x)?;
    InvariantBundle::from_probe(&probe, y, pair, options)
}

/// Overwrite the `r`-slots by their values under `r_ij = c a_ij`.
///
/// Reads `α`, `y_j`, `b_j`, `b`, `δ` and `s_0` from the bundle.
pub fn conformal_substitute(bundle: &InvariantBundle, c: f64, c0: f64) -> InvariantBundle {
    use Slot::*;
    let mut out = bundle.clone();
    let a2 = bundle.alpha * bundle.alpha;
    let s0 = bundle.get(S0);
    out.set(R00, c * a2);
    out.set(Rj0, c * bundle.get(YLowJ));
    out.set(Rj, c * bundle.get(BLowJ));
    out.set(RScalar, c * bundle.b2());
    out.set(RUpIj, c * bundle.get(DeltaIj));
    out.set(R0mSm0, 0.0);
    out.set(SmRm0, c * s0);
    out.set(RmSm0, c * s0);
    out.set(R00D0, c0 * a2);
    out.set(C, c);
    out.set(C0, c0);
    out.conformal = true;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conformal_spec() -> MetricSpec {
        MetricSpec::euclidean(&["0.3*x1", "0.3*x2", "0.3*x3"]).unwrap()
    }

    #[test]
    fn parallel_form_has_zero_derived_slots() {
        let spec = MetricSpec::euclidean(&["0.2", "-0.1", "0.05"]).unwrap();
        let y = [1.0, 0.5, -0.25];
        let b = bundle_from_geometry(
            &spec,
            &PhiFamily::Matsumoto,
            &[0.1, 0.2, 0.3],
            &y,
            (0, 1),
            &Default::default(),
        )
        .unwrap();
        for slot in Slot::ALL {
            let v = b.get(*slot);
            match slot {
                Slot::Beta => assert!((v - (0.2 - 0.05 - 0.0125)).abs() < 1e-15),
                Slot::B => assert!((v * v - 0.0525).abs() < 1e-15),
                Slot::N => assert_eq!(v, 3.0),
                Slot::YUpI | Slot::YLowJ | Slot::BUpI | Slot::BLowJ => assert!(v != 0.0),
                _ => assert_eq!(v, 0.0, "{}", slot.name()),
            }
        }
        assert!((b.alpha - (1.0f64 + 0.25 + 0.0625).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn conformal_slots_match_hand_values() {
        let probe =
            CurvatureProbe::new(&conformal_spec(), &PhiFamily::Matsumoto, &[0.2, -0.1, 0.3])
                .unwrap();
        let y = [0.4, 1.0, -0.7];
        let opts = BundleOptions {
            conformal: true,
            einstein: None,
        };
        let b = InvariantBundle::from_probe(&probe, &y, (2, 1), &opts).unwrap();
        let a2 = 0.16 + 1.0 + 0.49;
        assert!((b.get(Slot::R00) - 0.3 * a2).abs() < 1e-12);
        assert_eq!(b.get(Slot::R0mSm0), 0.0);
        assert!((b.get(Slot::C) - 0.3).abs() < 1e-12);
        assert!(b.get(Slot::C0).abs() < 1e-12);
        let y_low = [0.4, 1.0, -0.7];
        let r_ij: f64 = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| if i == j { 0.3 * y[i] * y_low[j] } else { 0.0 })
                    .sum::<f64>()
            })
            .sum();
        assert!((b.get(Slot::R00) - r_ij).abs() < 1e-12);
        assert!(conformal_defect(probe.geometry()) < 1e-12);
    }

    #[test]
    fn substitution_is_fixed_point_on_conformal_geometry() {
        let probe =
            CurvatureProbe::new(&conformal_spec(), &PhiFamily::Matsumoto, &[0.2, -0.1, 0.3])
                .unwrap();
        let opts = BundleOptions {
            conformal: true,
            einstein: None,
        };
        let b = InvariantBundle::from_probe(&probe, &[0.4, 1.0, -0.7], (0, 0), &opts).unwrap();
        let sub = conformal_substitute(&b, b.get(Slot::C), b.get(Slot::C0));
        for slot in Slot::ALL {
            assert!(
                (sub.get(*slot) - b.get(*slot)).abs() < 1e-10,
                "{}",
                slot.name()
            );
        }
    }

    #[test]
    fn substitution_examples() {
        let mut b = InvariantBundle::zeroed(3, 2.0, (0, 1));
        b.set(Slot::YLowJ, 3.0);
        b.set(Slot::R00, 7.0);
        let s = conformal_substitute(&b, 0.0, 0.0);
        assert_eq!(s.get(Slot::R00), 0.0);
        let s = conformal_substitute(&b, 1.0, 0.0);
        assert_eq!(s.get(Slot::R00), 4.0);
        assert_eq!(s.get(Slot::Rj0), 3.0);
        assert_eq!(conformal_substitute(&s, 1.0, 0.0), s);
    }

    #[test]
    fn pair_must_fit_dimension() {
        let spec = MetricSpec::euclidean(&["0.1", "0"]).unwrap();
        let e = bundle_from_geometry(
            &spec,
            &PhiFamily::Matsumoto,
            &[0.0, 0.0],
            &[1.0, 0.0],
            (2, 0),
            &Default::default(),
        );
        assert!(matches!(e, Err(Error::PairOutOfRange { .. })));
    }
}
