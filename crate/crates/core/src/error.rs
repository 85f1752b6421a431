use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormationError {
    #[error("at least three agents required, got {0}")]
    TooFewAgents(usize),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("angle is undefined at index {0}: zero-length relative position")]
    UndefinedAngle(usize),

    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),

    #[error("integration diverged at t = {time}")]
    Diverged { time: f64 },

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("control law mode `{mode}` does not support {operation}")]
    UnsupportedMode {
        mode: &'static str,
        operation: &'static str,
    },
}

impl FormationError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        FormationError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> crate::Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(FormationError::Dimension {
                what,
                expected,
                got,
            })
        }
    }
}
