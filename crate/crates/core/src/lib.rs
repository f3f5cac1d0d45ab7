//! Temporal point process toolkit: event-sequence preprocessing, five
//! parametric intensity families, Ogata thinning simulation, NUTS posterior
//! sampling and a goodness-of-fit / forecasting evaluation suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod diagnose;
pub mod error;
pub mod evaluate;
pub mod infer;
pub mod models;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use data::{Dataset, EventSequence};
pub use error::{Result, TppError};
pub use models::{ModelFamily, ParamSet};
