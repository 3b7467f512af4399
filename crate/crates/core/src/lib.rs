//! Structure-aware diversity over finite autoregressive string generators.
//!
//! A [`model::TrajectoryModel`] is an explicit prefix tree of next-token
//! distributions. A [`structures::System`] scores any string against an
//! ordered list of compliance structures. On top of these the crate computes
//! expected compliance ([`cores`]), per-string non-normativity and
//! homogenization statistics ([`orientation`]), and scores or samples
//! diversity-seeking interventions ([`xeno`]). The [`oracle`] module holds
//! independent brute-force references used by the test suites and the CLI
//! `verify` command.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cores;
pub mod error;
pub mod exec;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod orientation;
pub mod structures;
pub mod xeno;

pub use error::{Error, Result};
pub use exec::Exec;
