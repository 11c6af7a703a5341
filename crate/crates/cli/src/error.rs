use std::fmt;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(torus_shape::Error),
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Acceptance(_) => 4,
        }
    }

    /// Argument and surface-validity errors count as configuration problems.
    pub fn from_library(e: torus_shape::Error) -> Self {
        use torus_shape::Error as E;
        match e {
            E::InvalidGrid { .. }
            | E::InvalidArgument(_)
            | E::NonFiniteCoefficient { .. }
            | E::ImmersionFailure { .. }
            | E::AxisIntersection { .. } => Self::Config(e.to_string()),
            other => Self::Numerical(other),
        }
    }
}

impl From<torus_shape::Error> for CliError {
    fn from(e: torus_shape::Error) -> Self {
        Self::from_library(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Config(format!("output: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Config(format!("csv output: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Numerical(e) => write!(f, "numerical error: {e}"),
            Self::Acceptance(m) => write!(f, "acceptance failure: {m}"),
        }
    }
}
