//! Independent brute-force references and identity checks. Nothing here is
//! used by the estimators themselves; the test suites and the CLI `verify`
//! command compare against it.

mod brute;
pub mod random;
mod touchpoints;
mod verify;

pub use brute::{
    brute_force_expectation, brute_force_expectation_exact, exact_distribution, rational_to_f64, to_rational,
};
pub use touchpoints::{
    consistency_breadth_check, gini_simpson_check, iiv_check, oracle_gap, structure_relative_homogenization,
    total_expectation_gap, two_leaf_model, GiniSimpson, IivResult, LanguageSet, RelativeHomogenization, ValiditySet,
};
pub use verify::{dynamics_identity_gap, verify_suite, IdentityCheck, VERIFY_SEED};
