use thiserror::Error;

/// Errors surfaced by parameter validation, interval queries and the
/// analytic/scheduling operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid interval [{start_m}, {end_m}) on a road of length {road_m} m")]
    InvalidInterval {
        start_m: f64,
        end_m: f64,
        road_m: f64,
    },

    /// An operation was evaluated outside its mathematical domain
    /// (e.g. a helper-gap quantity at `voi_fraction = 1`, where no
    /// helpers exist).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("exhaustive pair search is limited to {limit} helpers, instance has {helpers}")]
    InstanceTooLarge { helpers: usize, limit: usize },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
