//! Error type shared across the crate.
//!
//! Every fallible operation returns [`Result`]. Variants are grouped by the
//! layer that raises them: calibration and kinematics, configuration parsing,
//! layout construction, the wire codec, agent decisions, and the engine.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Calibration inputs that admit no physical solution (e.g. a non-positive
    /// braking distance, or a target speed at or above the initial speed).
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    /// A parameter outside its documented domain in a kinematic helper.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A scenario configuration field failed validation or parsing.
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// A safe-spot layout violates grid bounds or spot disjointness.
    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    /// A message failed its invariant checks on the way to the wire.
    #[error("cannot encode field `{field}`: {reason}")]
    Encode { field: &'static str, reason: String },

    /// The destination port of an incoming frame maps to no known message.
    #[error("unknown destination port {0}")]
    UnknownPort(u16),

    /// An incoming frame is truncated, carries trailing bytes, or violates a
    /// message invariant.
    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    /// A frame carries an advice kind that is reserved and not implemented.
    #[error("advice kind {0} is reserved and not supported")]
    UnsupportedAdvice(u8),

    /// No free emergency-lane spot satisfies the assignment constraints.
    #[error("no free safe spot available")]
    NoFreeSpot,

    /// No transition-of-control position satisfies the scheduling bounds.
    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),

    /// Scenario geometry leaves an analytical distribution without support.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// An aggregation was asked to summarize nothing.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A simulation run exceeded its watchdog budget without terminating.
    #[error("run exceeded the watchdog budget ({0:.0} s simulated)")]
    StuckRun(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
