//! File formats and command implementations behind the `hydrocar` binary.

pub mod commands;
pub mod formats;

/// Process exit codes: 0 success, 2 input/validation failure, 3 numerical
/// failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Validation,
    Numerical,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        match self {
            ExitKind::Validation => 2,
            ExitKind::Numerical => 3,
        }
    }
}

/// A command failure carrying its exit classification.
#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn validation(err: impl std::fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Validation,
            message: err.to_string(),
        }
    }

    pub fn numerical(err: impl std::fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Numerical,
            message: err.to_string(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<hydrocar_core::inference::InferenceError> for CliError {
    fn from(err: hydrocar_core::inference::InferenceError) -> Self {
        use hydrocar_core::inference::InferenceError as E;
        match &err {
            E::Model(_) | E::Precision(_) | E::ThetaDimension { .. } | E::TooFewDraws(_) => {
                CliError::validation(err)
            }
            E::Gmrf(_) | E::NonConvergence { .. } | E::ObjectiveNotFinite => {
                CliError::numerical(err)
            }
        }
    }
}
