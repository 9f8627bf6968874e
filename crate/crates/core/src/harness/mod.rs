//! Run configuration, stepping loop, serialization and comparison tables.

mod compare;
mod config;
mod run;
mod serialize;

pub use compare::{
    compare, fit_order, log_log_slope, ComparisonRow, ComparisonTable, Reference, SweepPoint,
    MIN_SWEEP, ORDER_FIT_FLOOR,
};
pub use config::{
    diagnostic_tolerance, Components, GeoRule, InitialState, Nonlinear1DSpec, OutputKind,
    ProblemKind, ProblemSpec, RunConfig, StepSpec, StepperKind, DEFAULT_TOL,
};
pub use run::{run, EnergyDrift, RunOutput, RunSummary, Trajectory, TrajectoryRow};
pub use serialize::{
    header, parse, parse_csv, parse_json_lines, serialize, to_csv, to_json_lines, write_trajectory,
    OutputFormat,
};
