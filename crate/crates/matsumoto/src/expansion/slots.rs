//! Named scalar slots read by the coefficient tables.

use serde::{Deserialize, Serialize};

macro_rules! slots {
    ($($variant:ident => $name:literal, $degree:expr;)*) => {
        /// One scalar input of a coefficient table.
        ///
        /// Component slots refer to the index pair `(i, j)` chosen for the bundle.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Slot {
            $($variant,)*
        }

        impl Slot {
            pub const ALL: &'static [Slot] = &[$(Slot::$variant,)*];

            /// Name used in the term data file.
            pub fn name(self) -> &'static str {
                match self {
                    $(Slot::$variant => $name,)*
                }
            }

            /// Degree of homogeneity in `y`; `None` for tokens with no definition.
            pub fn degree(self) -> Option<u32> {
                match self {
                    $(Slot::$variant => $degree,)*
                }
            }

            pub fn from_name(name: &str) -> Option<Slot> {
                match name {
                    $($name => Some(Slot::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

slots! {
    Beta => "beta", Some(1);
    // the bare symbol b stands for the square root of b²
    B => "b", Some(0);
    N => "n", Some(0);
    C => "c", Some(0);
    C0 => "c_0", Some(1);
    Cj => "c_j", Some(0);
    CmBm => "c_m_bm", Some(0);
    Theta => "theta", Some(1);
    Sigma => "sigma", Some(0);
    Ric => "Ric", Some(2);
    RicBar => "Ricbar", Some(2);
    Rij => "R_ij", Some(2);
    RbarIj => "Rbar_ij", Some(2);
    YUpI => "y_i", Some(1);
    YLowJ => "y_j", Some(1);
    BUpI => "b_i", Some(0);
    BLowJ => "b_j", Some(0);
    DeltaIj => "delta_ij", Some(0);
    R00 => "r_00", Some(2);
    R0 => "r_0", Some(1);
    S0 => "s_0", Some(1);
    RScalar => "r", Some(0);
    Rj0 => "r_j0", Some(1);
    RUpI0 => "r_i0", Some(1);
    SUpI0 => "s_i0", Some(1);
    S0j => "s_0j", Some(1);
    Sj0 => "s_j0", Some(1);
    SUpI => "s_i", Some(0);
    Sj => "s_j", Some(0);
    Rj => "r_j", Some(0);
    RUpIj => "r_ij", Some(0);
    R00D0 => "r_00_0", Some(3);
    R00Dj => "r_00_j", Some(2);
    Rj0D0 => "r_j0_0", Some(2);
    S0D0 => "s_0_0", Some(2);
    SUpI0D0 => "s_i0_0", Some(2);
    S0Dj => "s_0_j", Some(1);
    SjD0 => "s_j_0", Some(1);
    SUpIjD0 => "s_ij_0", Some(1);
    SUpI0Dj => "s_i0_j", Some(1);
    R0mSm0 => "r_0m_s_m0", Some(2);
    SmSm0 => "s_m_s_m0", Some(1);
    SmSm => "s_m_s_m", Some(0);
    SimSmi => "s_im_s_mi", Some(0);
    S0mDm => "s_0m_m", Some(1);
    Sm0Bm => "s_m0_bm", Some(1);
    S0mBm => "s_0m_bm", Some(1);
    R0m0Bm => "r_0m0_bm", Some(2);
    R00mBm => "r_00m_bm", Some(2);
    R0mRm0 => "r_0m_r_m0", Some(2);
    Rmm => "r_mm", Some(0);
    SmRm0 => "s_m_r_m0", Some(1);
    RmSm0 => "r_m_s_m0", Some(1);
    SikSkj => "s_ik_s_kj", Some(0);
    SikSk0 => "s_ik_s_k0", Some(1);
    SmSmj => "s_m_s_mj", Some(0);
    Rk0Skj => "r_k0_s_kj", Some(1);
    RjkSk0 => "r_jk_s_k0", Some(1);
    UndefG => "undef_g", None;
    UndefSij0 => "undef_s_ij0", None;
    UndefS0mMBm => "undef_s0m_m_bm", None;
    UndefFragment => "undef_fragment", None;
    UndefCPowBeta => "undef_c_pow_beta", None;
    UndefR4 => "undef_R4", None;
}

impl Slot {
    pub const COUNT: usize = Slot::ALL.len();

    pub fn index(self) -> usize {
        self as usize
    }

    /// Tokens in the source tables with no definition; they always read 0.
    pub fn is_undefined(self) -> bool {
        self.degree().is_none()
    }

    /// Slots that only carry meaning for a conformal one-form.
    pub fn is_conformal(self) -> bool {
        matches!(self, Slot::C | Slot::C0 | Slot::Cj | Slot::CmBm)
    }

    /// Slots that only carry meaning for a weakly Einstein fit.
    pub fn is_einstein(self) -> bool {
        matches!(self, Slot::Theta | Slot::Sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Slot::ALL {
            assert_eq!(Slot::from_name(s.name()), Some(*s));
            assert_eq!(Slot::ALL[s.index()], *s);
        }
        assert_eq!(Slot::from_name("nope"), None);
    }
}
