//! Multi-radar human tracking and fall detection: packet codec, window
//! synchronization, filtering, energy-stratified clustering, probability-matrix
//! tracking, status classification, a scenario simulator and an evaluation
//! harness.

// Negated float comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod codec;
pub mod config;
pub mod evaluate;
pub mod filtering;
pub mod geometry;
pub mod ingress;
pub mod io;
pub mod model;
pub mod notifier;
pub mod pipeline;
pub mod posture;
pub mod radar_math;
pub mod replay;
pub mod simulator;
pub mod status;
pub mod sync;
pub mod tracking;
