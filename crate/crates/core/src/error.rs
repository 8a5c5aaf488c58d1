use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("special-function domain error: {0}")]
    Domain(String),

    #[error("order cutoff {cutoff} too small: dropped amplitude {dropped:.3e} exceeds tolerance")]
    CutoffTooSmall { cutoff: usize, dropped: f64 },

    #[error("grid resolution insufficient: {0}")]
    Resolution(String),

    #[error("closed form is degenerate at this point: {0}")]
    Degenerate(String),

    #[error("integrator failure at (x, x') = ({x:.6}, {xp:.6}): {reason}")]
    Integrator { x: f64, xp: f64, reason: String },

    #[error("parameter regime violated: {0}")]
    Regime(String),

    #[error("visibility undefined: {0}")]
    UndefinedVisibility(String),

    #[error("signal has imaginary residue {0:.3e}")]
    NonRealSignal(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by a numerical regime (truncation, resolution,
    /// integrator) rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidInput(_))
    }
}
