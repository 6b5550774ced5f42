use thiserror::Error;

/// Errors produced by instance construction and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("detection target p_D,th = {p_detect} does not exceed false-alarm rate {p_false_alarm}")]
    DegenerateThreshold { p_false_alarm: f64, p_detect: f64 },

    #[error("zero distance between {what}")]
    ZeroDistance { what: String },

    #[error("problem is infeasible: P_max * sum(b) = {capacity} < eta_D = {threshold}")]
    Infeasible { capacity: f64, threshold: f64 },

    #[error("instance is not boundary-feasible (slack {slack})")]
    NotBoundaryFeasible { slack: f64 },

    #[error("all channel gains are zero")]
    NoChannel,

    #[error("device {k} has zero channel gain")]
    ZeroChannel { k: usize },

    #[error("device {k} has x = 0, which no optimum admits")]
    ZeroPower { k: usize },

    #[error("lambda = {lambda} reaches the pole of inactive device {k}")]
    Pole { k: usize, lambda: f64 },

    #[error("gradient spread is zero; cannot normalize")]
    ZeroSpread,

    #[error("no candidate (n, i) satisfied the optimality conditions; closest was {near_miss}")]
    NoCandidate { near_miss: String },

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
