//! Cleared-denominator curvature expansions of the Matsumoto metric.
//!
//! The coefficient tables are data ([`tables`]); their inputs are named
//! scalars ([`slots`]) gathered into an [`InvariantBundle`]. The checks in
//! [`verify`] compare table sums with the curvature pipeline.

pub mod bundle;
pub mod quad;
pub mod slots;
pub mod tables;
pub mod verify;

pub use bundle::{
    bundle_from_geometry, conformal_defect, conformal_factor, conformal_substitute, BundleOptions,
    InvariantBundle, OddBReading,
};
pub use quad::{parity_split, QuadExtScalar};
pub use slots::Slot;
pub use tables::{eval_coefficient, term_tables, CoefficientValue, Table, Term, TermTables};
pub use verify::{
    verify_conditional_identity, verify_expansion, verify_expansion_at, Certificate, Evidence,
    ExpansionKind, ExpansionReport, Hypothesis, IdentityKind, IdentityReport, Status,
};
