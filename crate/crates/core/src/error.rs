use thiserror::Error;

/// Errors produced by the encode/decode chain and the sweep harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Gate drive at or below threshold; the square-law model has no current.
    #[error("device off: vgs = {vgs} V is not above vth = {vth} V")]
    DeviceOff { vgs: f64, vth: f64 },

    /// Vds cannot be recovered from a current when lambda is zero.
    #[error("vds inversion undefined for lambda = 0")]
    InversionUndefined,

    #[error("invalid device parameters: {0}")]
    InvalidParams(String),

    /// Quantization step not realizable by the four-stage precircuit.
    #[error("unsupported circuit phi = {0} V (expected 1, 0.5, 0.25 or 0.125)")]
    UnsupportedPhi(f64),

    #[error("value {value} out of range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    /// Two equal currents give no slope.
    #[error("degenerate pair: ids1 == ids2 = {0} A")]
    DegeneratePair(f64),

    #[error("non-positive current {0} A")]
    NonPositiveCurrent(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// A stage received a residual outside its half-open input range.
    #[error("stage {stage} invariant violated: residual {residual} V not in [0, {limit})")]
    StageInvariant { stage: u8, residual: f64, limit: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
