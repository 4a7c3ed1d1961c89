use thiserror::Error;

/// Errors raised while validating parameters or evaluating the model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("effort {0} outside the domain [0, 1)")]
    EffortOutOfDomain(f64),
    #[error("theft amount {0} must be nonnegative")]
    NegativeTheft(f64),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("invalid forecast rule: {0}")]
    InvalidForecast(String),
    #[error("invalid sweep specification: {0}")]
    InvalidSweep(String),
    #[error("positive-effort condition fails: c'(0) = {marginal_cost_at_zero} >= P(yH - yL) = {output_gain}")]
    NoPositiveEffort {
        marginal_cost_at_zero: f64,
        output_gain: f64,
    },
    #[error("numerical overflow: {0}")]
    Overflow(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Io(String),
    #[error("oracle optimum sits on the wage grid ceiling w_max = {0}; enlarge the grid")]
    UnreachableOptimum(f64),
}

impl Error {
    /// Short machine-readable code, used in sweep error rows.
    pub fn code(&self) -> String {
        match self {
            Error::InvalidParameter { name, .. } => format!("invalid_parameter:{name}"),
            Error::EffortOutOfDomain(_) => "effort_out_of_domain".into(),
            Error::NegativeTheft(_) => "negative_theft".into(),
            Error::InvalidStrategy(_) => "invalid_strategy".into(),
            Error::InvalidForecast(_) => "invalid_forecast".into(),
            Error::InvalidSweep(_) => "invalid_sweep".into(),
            Error::NoPositiveEffort { .. } => "no_positive_effort".into(),
            Error::Overflow(_) => "overflow".into(),
            Error::InvalidConfig(_) => "invalid_config".into(),
            Error::Io(_) => "io".into(),
            Error::UnreachableOptimum(_) => "unreachable_optimum".into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_param(
    name: &'static str,
    value: f64,
    ok: bool,
    reason: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
