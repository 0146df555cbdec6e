//! Deterministic simulator of a solar-harvesting wireless sensor node that
//! co-adapts its transmission rate to stored and harvested energy and
//! compresses its data stream with threshold anomaly detection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod eico;
pub mod error;
pub mod harvest;
pub mod isa;
pub mod radio;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
