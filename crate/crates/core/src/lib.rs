//! Reduced-reference bitstream audiovisual quality modeling.
//!
//! The crate covers the whole modeling pipeline: dataset ingestion
//! ([`data`]), a synthetic bitstream generator ([`synth`]), evaluation
//! statistics ([`metrics`]), four regressor families ([`trees`], [`mlp`],
//! [`gp`]) and the cross-validation / feature-sweep harness ([`harness`]).

// `!(a > b)` is used deliberately so NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod gp;
pub mod harness;
pub mod metrics;
pub mod mlp;
pub mod seed;
pub mod synth;
pub mod trees;

pub use error::{Error, Result};
