use std::fmt;
use std::process::ExitCode;

use serde::Serialize;

/// Why a command stopped early; each kind has its own exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Exit 1.
    Solver(String),
    /// Exit 2.
    Config(String),
    /// Exit 3: a hypothesis of the theorems could not be certified.
    Hypothesis { reason: String, witness: Option<f64> },
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Solver(_) => 1,
            Failure::Config(_) => 2,
            Failure::Hypothesis { .. } => 3,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn reason(&self) -> Reason {
        match self {
            Failure::Solver(m) => Reason {
                kind: "solver_failure",
                message: m.clone(),
                witness: None,
            },
            Failure::Config(m) => Reason {
                kind: "config_error",
                message: m.clone(),
                witness: None,
            },
            Failure::Hypothesis { reason, witness } => Reason {
                kind: "hypothesis_failure",
                message: reason.clone(),
                witness: *witness,
            },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.reason();
        write!(f, "{}: {}", r.kind.replace('_', " "), r.message)?;
        if let Some(w) = r.witness {
            write!(f, " (witness x = {w})")?;
        }
        Ok(())
    }
}

/// Machine-readable failure record for the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Reason {
    pub kind: &'static str,
    pub message: String,
    pub witness: Option<f64>,
}

impl From<cmc_core::Error> for Failure {
    fn from(e: cmc_core::Error) -> Self {
        use cmc_core::Error as E;
        match e {
            E::Uncertified { reason, witness } => Failure::Hypothesis { reason, witness },
            E::NotConvex { x0, x1, x2 } => Failure::Hypothesis {
                reason: format!("boundary datum is not convex on ({x0}, {x1}, {x2})"),
                witness: Some(x1),
            },
            E::InvalidParameter { .. } | E::InfeasibleWidth { .. } | E::Grid(_) | E::OutOfRange { .. } | E::Path(_) => {
                Failure::Config(e.to_string())
            }
            E::QuadratureFailed { .. }
            | E::OutsideHull { .. }
            | E::Diverged { .. }
            | E::NotPositiveDefinite { .. }
            | E::Io(_) => Failure::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Solver(format!("i/o error: {e}"))
    }
}
