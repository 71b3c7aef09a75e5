//! Driver reports and comparison tables.

pub mod ecd;
pub mod svg;
pub mod table;

use thiserror::Error;

use crate::metrics::MetricsError;
use crate::trajectory::TrajectoryError;

pub use ecd::{
    ecd, EcdOptions, EcdReport, FlatSegment, Panel, Series, DISTANCE, FUEL, PANELS, SAFETY_FRONT,
    SAFETY_REAR, SPACE_SAFETY, SPEED,
};
pub use svg::render_svg;
pub use table::{
    comparison_csv, comparison_text, parse_comparison_csv, render_table, RenderedTable,
};

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("report has no data")]
    Empty,
    #[error("unknown vehicle `{0}`")]
    UnknownVehicle(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}
