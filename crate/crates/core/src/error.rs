use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A channel with no spin loading and no loss, driven exactly at its
    /// resonance, has a vanishing denominator.
    #[error("channel {index} is singular at nu = {nu}")]
    SingularChannel { index: i32, nu: f64 },

    #[error("transfer function has a pole at nu = {nu} (F = -1)")]
    Pole { nu: f64 },

    #[error("pulse spectrum is not normalized: integral = {norm}")]
    UnnormalizedPulse { norm: f64 },

    #[error("pulse is truncated by the time grid: boundary amplitude {boundary:.3e} of peak")]
    TruncatedPulse { boundary: f64 },

    #[error("step size dt = {dt:.3e} is too large (use dt <= {suggested:.3e}): {reason}")]
    StepSize {
        dt: f64,
        suggested: f64,
        reason: String,
    },

    #[error(
        "simulation window too short: cavity modes still hold {residual:.3e} of the input energy \
         (try t_end >= {suggested_span:.3})"
    )]
    WindowTooShort { residual: f64, suggested_span: f64 },

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
