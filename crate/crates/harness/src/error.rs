use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] bicolor_core::Error),

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("every gamma in the grid diverged:\n{0}")]
    AllDiverged(String),

    #[error("nothing to emit: the trace set is empty")]
    EmptyTraceSet,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
