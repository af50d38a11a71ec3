// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod controller;
pub mod error;
pub mod sensing;
pub mod spectrum_hmm;
pub mod symbiotic;
pub mod tracking;

pub use error::{Error, Result};
pub mod harness;
