use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter lies outside the domain the construction is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },

    #[error("draw {draw}: {source}")]
    Draw { draw: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_draw(self, draw: usize) -> Error {
        Error::Draw {
            draw,
            source: Box::new(self),
        }
    }
}
