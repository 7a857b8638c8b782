use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] apdkit::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for data and file problems, 4 for
    /// violated invariants.
    pub fn exit_code(&self) -> i32 {
        use apdkit::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidConfig(_) | E::InvalidArchitecture(_) | E::TrainingDiverged(_) => 2,
                E::Invariant(_) | E::InvalidSplit(_) | E::EpochOrder { .. } => 4,
                E::Shape(_)
                | E::Index(_)
                | E::Empty(_)
                | E::Format { .. }
                | E::Pairing(_)
                | E::InvalidQuery(_)
                | E::Stale { .. }
                | E::Unknown { .. }
                | E::Io { .. }
                | E::Json(_) => 3,
            },
        }
    }
}
