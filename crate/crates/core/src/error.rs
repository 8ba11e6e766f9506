use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),

    #[error("mesh is not watertight: {0}")]
    NotWatertight(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{origin}: {msg}")]
    Parse { origin: String, msg: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(origin: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            origin: origin.into(),
            msg: msg.into(),
        }
    }
}
