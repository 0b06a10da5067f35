use thiserror::Error;

/// Errors raised by model evaluation, numerics and the analyzers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EahmError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{lo}, {hi}]: error estimate {error:e} after {evaluations} evaluations")]
    Quadrature {
        lo: f64,
        hi: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("root is not bracketed: f({lo}) = {f_lo:e}, f({hi}) = {f_hi:e}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("conditional survival at z = {z} stays above u = {u} up to x = {horizon}; the conditional lifetime looks improper")]
    Sampling { z: f64, u: f64, horizon: f64 },

    #[error("underflow: {quantity} = {value:e} at x = {x} is below the floor {floor:e}")]
    Underflow {
        quantity: &'static str,
        x: f64,
        value: f64,
        floor: f64,
    },

    #[error("grid needs at least {required} points, got {actual}")]
    GridSize { required: usize, actual: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("nonpositive value {value:e} at index {index}")]
    NonPositive { index: usize, value: f64 },

    #[error("curve shape error: {0}")]
    Shape(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{quantity} at x = {x}: {source}")]
    AtPoint {
        quantity: &'static str,
        x: f64,
        source: Box<EahmError>,
    },
}

impl EahmError {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        EahmError::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// Failures caused by the numerics rather than by the inputs.
    pub fn is_numeric(&self) -> bool {
        if let EahmError::AtPoint { source, .. } = self {
            return source.is_numeric();
        }
        matches!(
            self,
            EahmError::Quadrature { .. }
                | EahmError::NoBracket { .. }
                | EahmError::Sampling { .. }
                | EahmError::Underflow { .. }
        )
    }
}

pub(crate) trait AtPoint<T> {
    fn at(self, quantity: &'static str, x: f64) -> Result<T>;
}

impl<T> AtPoint<T> for Result<T> {
    fn at(self, quantity: &'static str, x: f64) -> Result<T> {
        self.map_err(|e| match e {
            e @ EahmError::AtPoint { .. } => e,
            e => EahmError::AtPoint {
                quantity,
                x,
                source: Box::new(e),
            },
        })
    }
}

pub type Result<T> = std::result::Result<T, EahmError>;
