use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A model parameter is outside of its admissible range.
    #[error("parameter `{name}` = {value} is out of range: {constraint}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        constraint: String,
    },
    #[error("kernel truncation tail mass {tail_mass:.3e} exceeds tolerance {tolerance:.3e}; a window of at least {required_window:.6e} is required")]
    Truncation {
        tail_mass: f64,
        tolerance: f64,
        required_window: f64,
    },
    #[error("function returned a non-finite value {value} at x = {x}")]
    InputDomain { x: f64, value: f64 },
    #[error("linear system is ill-conditioned (condition number {condition:.3e} > {limit:.3e})")]
    Conditioning { condition: f64, limit: f64 },
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("complexity guard exceeded: {0}")]
    Complexity(String),
    #[error("under-resolved input: {0}")]
    Resolution(String),
    #[error("path does not cover the required range: {0}")]
    Coverage(String),
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn range(name: &'static str, value: f64, constraint: impl Into<String>) -> Self {
        Error::ParameterOutOfRange {
            name,
            value,
            constraint: constraint.into(),
        }
    }
}
