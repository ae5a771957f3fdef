//! Traffic flow state classification from smartphone motion and speed
//! streams.
//!
//! The pipeline runs from raw CSV streams ([`data`]) or the seeded generator
//! ([`synth`]) through two-stage windowed features ([`features`]) into a deep
//! belief network ([`dbn`]), with classical baselines ([`baselines`]) and the
//! repeated-split experiment protocol ([`eval`]).

// `!(a > b)` is used on purpose to reject NaN along with out-of-order values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod data;
pub mod dbn;
pub mod eval;
pub mod features;
pub mod model_file;
pub mod rng;
pub mod synth;
