//! Forecasting late-career WAR for batters and pitchers from their first six
//! seasons: Lahman ingest, cohort rules, feature building, four regressors
//! with recursive feature elimination and grid search, and the delta-method
//! aging-curve baseline they are measured against.
//!
//! [`pipeline::run`] strings the stages together; every module is usable on
//! its own.

// `!(a < b)` is how NaN-rejecting range checks are written here
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cohort;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod fixtures;
pub mod ingest;
pub mod kv;
pub mod models;
pub mod numerics;
pub mod pipeline;
pub mod selection;

pub use error::{Error, Result};
