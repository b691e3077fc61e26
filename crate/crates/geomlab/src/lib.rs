#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub(crate) mod cells;
pub mod cli;
pub mod count;
pub mod discretize;
pub mod embed;
pub mod error;
pub mod geom;
pub mod graphs;
pub mod norms;
pub mod obstruct;
pub mod rng;
pub mod sum;

/// Schema tag written into every JSON report.
pub const REPORT_SCHEMA: &str = "geomlab/1";
