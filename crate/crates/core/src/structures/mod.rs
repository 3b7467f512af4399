//! Compliance structures, systems and the scalar operators over compliance
//! vectors.

mod aggregate;
pub mod callback;
mod structure;
mod system;

pub use aggregate::{Aggregator, DiffMetric, ALL_METRICS};
pub use callback::{ComplianceCallback, FnCallback, SubprocessCallback};
pub use structure::{Structure, StructureKind, StructureParams, StructureSpec, WeightedComponent};
pub use system::{
    difference_score, evaluate_structure, evaluate_system, system_score, ComplianceVector, System,
};
