use thiserror::Error;

/// Errors raised by the model-risk routines.
///
/// Variants split into two families: input validation (bad shapes, labels,
/// parameters) and numerical infeasibility (a worst case that does not exist
/// or cannot be represented on the chosen grid). [`Error::is_numerical`]
/// tells them apart.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("label sets differ: {0}")]
    LabelMismatch(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("exponent is not integrable: {0}")]
    NonIntegrable(String),

    #[error(
        "{fraction:.4} of the mass sits in the outer grid cells at the {edge} edge; \
         widen the grid or check integrability"
    )]
    BoundaryMass { edge: &'static str, fraction: f64 },

    #[error("infeasible: {what} is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { what: &'static str, eigenvalue: f64 },

    #[error("near-singular {what}: condition number {condition:e}")]
    NearSingular { what: &'static str, condition: f64 },

    #[error("singular {what}: {hint}")]
    Singular {
        what: &'static str,
        hint: &'static str,
    },

    #[error("multiplier too large: scaling coefficient {coefficient} is not positive (max safe value {max_safe:e})")]
    BudgetTooLarge { coefficient: f64, max_safe: f64 },
}

impl Error {
    /// True for failures of the mathematics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonIntegrable(_)
                | Error::BoundaryMass { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::NearSingular { .. }
                | Error::Singular { .. }
                | Error::BudgetTooLarge { .. }
        )
    }

    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
