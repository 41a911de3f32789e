use alloc::string::String;
use core::fmt;

/// Errors raised by field construction, spectral operations and the
/// quantity/verification layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid size is not a power of two or is below the minimum of 8.
    InvalidGridSize(usize),
    /// Box length is not a positive finite number.
    InvalidBoxLength(f64),
    /// Sample buffer length does not match `n^3` (or `3 n^3`).
    LengthMismatch {
        expected: usize,
        found: usize,
    },
    /// Two fields that must share a grid do not.
    GridMismatch,
    /// A sample is NaN or infinite.
    NonFinite,
    /// Ball radius is not positive or the ball wraps around the torus (`2r >= L/2`).
    BallTooLarge {
        radius: f64,
        box_length: f64,
    },
    InvalidRadius(f64),
    /// Ball contains no samples.
    EmptyBall,
    NegativeTime(f64),
    /// Input expected to be divergence-free is not.
    NotSolenoidal {
        max_divergence: f64,
    },
    /// Field has a mean that is not negligible and the caller did not allow it.
    NonZeroMean {
        mean: f64,
    },
    InvalidTimeRange {
        t_min: f64,
        t_max: f64,
    },
    InvalidParameter(String),
    /// Cutoff function support reaches too close to its periodic images.
    SupportTooLarge {
        extent: f64,
        limit: f64,
    },
    /// Snapshot times are not strictly increasing, or grids differ.
    InvalidRecord(String),
    /// The parabolic cylinder does not lie inside the record.
    InvalidCylinder(String),
    /// Fewer than two snapshots fall inside the time window.
    EmptyTimeWindow {
        t_start: f64,
        t_end: f64,
    },
    /// Snapshot spacing too coarse for the requested radius.
    TimeResolution {
        dt_save: f64,
        limit: f64,
    },
    MissingPressure,
    /// Spectral content would be pushed past the Nyquist band or off the lattice.
    Unresolvable(String),
    /// Time step violates a stability bound.
    Cfl {
        dt: f64,
        limit: f64,
        reason: &'static str,
    },
    /// Iteration parameters violate `2 c theta^{1/2} <= 1`.
    Inadmissible {
        theta: f64,
        c_iter: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGridSize(n) => {
                write!(f, "grid size {n} must be a power of two and at least 8")
            }
            Error::InvalidBoxLength(l) => write!(f, "box length {l} must be positive and finite"),
            Error::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} samples, found {found}")
            }
            Error::GridMismatch => write!(f, "fields live on different grids"),
            Error::NonFinite => write!(f, "field contains non-finite samples"),
            Error::BallTooLarge { radius, box_length } => write!(
                f,
                "ball of radius {radius} does not fit in periodic box of length {box_length} (need 2r < L/2)"
            ),
            Error::InvalidRadius(r) => write!(f, "radius {r} must be positive and finite"),
            Error::EmptyBall => write!(f, "ball contains no grid samples"),
            Error::NegativeTime(t) => write!(f, "time {t} must be non-negative"),
            Error::NotSolenoidal { max_divergence } => {
                write!(f, "velocity is not divergence-free (max |div v| = {max_divergence:e})")
            }
            Error::NonZeroMean { mean } => write!(
                f,
                "field has non-negligible mean {mean:e}; the homogeneous norm needs zero mean (allow it explicitly to remove the mean)"
            ),
            Error::InvalidTimeRange { t_min, t_max } => {
                write!(f, "invalid time range [{t_min}, {t_max}]")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::SupportTooLarge { extent, limit } => write!(
                f,
                "cutoff support extends to radius {extent}, must stay below {limit}"
            ),
            Error::InvalidRecord(msg) => write!(f, "invalid space-time record: {msg}"),
            Error::InvalidCylinder(msg) => write!(f, "invalid parabolic cylinder: {msg}"),
            Error::EmptyTimeWindow { t_start, t_end } => write!(
                f,
                "fewer than two snapshots in time window [{t_start}, {t_end}]"
            ),
            Error::TimeResolution { dt_save, limit } => write!(
                f,
                "snapshot spacing {dt_save} exceeds r^2/8 = {limit}"
            ),
            Error::MissingPressure => write!(f, "record has no stored pressure"),
            Error::Unresolvable(msg) => write!(f, "unresolvable on this grid: {msg}"),
            Error::Cfl { dt, limit, reason } => {
                write!(f, "time step {dt} exceeds {reason} limit {limit}")
            }
            Error::Inadmissible { theta, c_iter } => write!(
                f,
                "iteration parameters theta = {theta}, c = {c_iter} violate 2 c theta^(1/2) <= 1"
            ),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

impl core::error::Error for Error {}
