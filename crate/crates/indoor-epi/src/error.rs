use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid scenario/experiment configuration (bad geometry, counts, margins).
    #[error("configuration error: {0}")]
    Config(String),

    /// Scene layouts grouped for crowding classification do not form a valid group.
    #[error("grouping error: {0}")]
    Grouping(String),

    /// A function argument is outside its documented domain.
    #[error("argument error: {0}")]
    Argument(String),

    /// Non-finite state or a stuck agent detected inside the simulation loop.
    #[error("simulation integrity error at step {step}, agent {agent}: {message}")]
    Integrity {
        agent: usize,
        step: u64,
        message: String,
    },

    /// Statistical estimation failed (rank deficiency, degenerate resamples).
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A column could not be min-max scaled because it is constant.
    #[error("scaling error: column '{0}' is constant")]
    ConstantColumn(String),

    /// Average requested over zero susceptible individuals.
    #[error("average exposure undefined: no susceptible individuals")]
    UndefinedAverage,

    /// Personal-space sample requested for an empty room.
    #[error("empty sample: no occupants at requested time")]
    EmptySample,

    /// No sample tick had at least two occupants.
    #[error("space indicator undefined: no tick with at least 2 occupants")]
    IndicatorUndefined,

    #[error("table error: {0}")]
    Table(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
