use std::fmt;
use std::path::Path;

/// Process exit codes. Clap's own usage errors also exit with 2.
pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_OPTIMIZE: u8 = 4;
pub const EXIT_WINDOW: u8 = 5;

/// A failed run: the message for stderr and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self::new(EXIT_SCHEMA, message)
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self::new(EXIT_IO, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<mrqm::Error> for Failure {
    fn from(err: mrqm::Error) -> Self {
        use mrqm::Error::*;
        let code = match &err {
            OptimizationFailed(_) => EXIT_OPTIMIZE,
            StepSize { .. } | WindowTooShort { .. } | TruncatedPulse { .. } => EXIT_WINDOW,
            InvalidArgument(_) | SingularChannel { .. } | Pole { .. } | UnnormalizedPulse { .. } => EXIT_SCHEMA,
        };
        let message = match &err {
            WindowTooShort { residual, suggested_span } => format!(
                "window too short: {residual:.3e} of the input energy is still in the device; \
                 rerun with simulation.t_end >= {suggested_span}"
            ),
            TruncatedPulse { boundary } => format!(
                "window too short: the pulse is still {boundary:.3e} at the window edge; \
                 move simulation.pulse.center_time or extend simulation.t_end"
            ),
            StepSize { dt, suggested, reason } => format!("dt = {dt} too large ({reason}); use dt <= {suggested}"),
            _ => err.to_string(),
        };
        Self::new(code, message)
    }
}
