use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Rasterization covered no pixel at all.
    #[error("render produced no valid pixel")]
    EmptyRender,

    /// VSD evaluation over two empty visibility masks.
    #[error("both visibility masks are empty")]
    EmptyUnion,

    /// Point-to-point solve on a rank-deficient correspondence set.
    #[error("correspondence cross-covariance has rank < 2")]
    DegenerateConfiguration,

    /// Point-to-plane normal equations carry no constraint at all.
    #[error("point-to-plane system is singular")]
    SingularSystem,

    /// Summed information matrix of a fusion problem is not invertible.
    #[error("summed information matrix is singular")]
    SingularInformation,

    /// Query on an empty pose estimate log.
    #[error("pose estimate log is empty")]
    EmptyLog,

    /// Object does not fit the requested camera placement.
    #[error("object diameter {diameter} m exceeds the maximum distance {max} m")]
    DiameterTooLarge { diameter: f64, max: f64 },

    /// Mesh file could not be parsed.
    #[error("mesh load failed: {0}")]
    MeshLoad(String),

    /// Precondition violated by a caller-supplied value.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
