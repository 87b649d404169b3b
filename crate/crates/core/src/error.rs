use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown graph family `{0}`")]
    UnknownFamily(String),

    #[error("invalid graph specification `{spec}`: {reason}")]
    InvalidSpec { spec: String, reason: String },

    #[error("explicit adjacency is not symmetric: edge {from}-{to} listed with conflicting conductances")]
    Asymmetric { from: String, to: String },

    #[error("self-loop at vertex {0}")]
    SelfLoop(String),

    #[error("conductance of edge {from}-{to} must be positive, got {value}")]
    NonPositiveConductance { from: String, to: String, value: String },

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("vertex {0} is isolated; the walk kernel needs degree >= 1 everywhere")]
    IsolatedVertex(String),

    #[error("materialized region too small: vertex {0} has neighbours outside it")]
    RegionTooSmall(String),

    #[error("probability {0} outside the admissible range")]
    InvalidProbability(String),

    #[error("cannot parse number `{0}`")]
    InvalidNumber(String),

    #[error("budget exceeded: {what} needs {requested}, limit is {limit}")]
    Budget {
        what: String,
        requested: String,
        limit: String,
    },

    #[error("matrix is not symmetric: max deviation {deviation:e} exceeds {tol:e}")]
    NotSymmetric { deviation: f64, tol: f64 },

    #[error("window must contain every site of A and dA; missing {0}")]
    WindowTooSmall(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn budget(what: impl Into<String>, requested: impl ToString, limit: impl ToString) -> Self {
        Error::Budget {
            what: what.into(),
            requested: requested.to_string(),
            limit: limit.to_string(),
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}
