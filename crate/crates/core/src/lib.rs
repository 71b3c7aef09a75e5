#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fmt;
pub mod metrics;
pub mod params;
pub mod report;
pub mod sim;
pub mod stats;
pub mod trajectory;
