use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input data: {0}")]
    Data(String),
    #[error("outside the admissible domain: {0}")]
    Domain(String),
    #[error("non-finite value produced in {0}")]
    NumericalOverflow(&'static str),
    #[error("CFL number {cfl:.3} exceeds the limit; try dt <= {suggested_dt:.3e}")]
    Cfl { cfl: f64, suggested_dt: f64 },
    #[error("blow-up at t = {t:.6e}: {reason}")]
    BlowUp { t: f64, reason: String },
    #[error("vorticity lower bound violated: min w<y>^sigma = {min:.6e} < {required:.6e}")]
    Degeneracy { min: f64, required: f64 },
    #[error("inconsistent usage: {0}")]
    Usage(String),
    #[error("step failed: {0}")]
    Step(String),
    #[error("Picard iteration diverged at theta = {theta:.3e}, k = {k} (ratio {ratio:.3})")]
    IterationDivergence { theta: f64, k: usize, ratio: f64 },
    #[error("inadmissible parameters: {0}")]
    Parameter(String),
    #[error("constructed data misses its bound: achieved {achieved:.6e}, required {required:.6e}")]
    Construction { achieved: f64, required: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
