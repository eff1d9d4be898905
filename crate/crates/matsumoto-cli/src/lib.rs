//! Scenario files, seeded instances and check suites for the `matsumoto` tool.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod generate;
pub mod report;
pub mod scenario;
pub mod suite;

pub use checks::run_scenario;
pub use generate::{generate_instance, InstanceClass};
pub use report::{CheckRecord, Outcome, Report};
pub use scenario::{load_scenario, CheckName, ScenarioConfig, ScenarioError};
