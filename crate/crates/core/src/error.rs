use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("dividing line y = {0} does not coincide with a mesh line")]
    Alignment(f64),

    #[error("edge {edge} is not incident to element {element}")]
    Topology { element: usize, edge: usize },

    #[error("invalid quadrature order {0}")]
    InvalidOrder(usize),

    #[error("duplicate column block {0}")]
    Layout(String),

    #[error("non-finite entry in least-squares input at {0}")]
    NumericInput(String),

    #[error("local velocity elimination is rank deficient on element {element} (rank {rank} of {cols})")]
    Elimination { element: usize, rank: usize, cols: usize },

    #[error("boundary trace projection is rank deficient on edge {edge} (rank {rank} of {cols})")]
    Projection { edge: usize, rank: usize, cols: usize },

    #[error("point ({x}, {y}) lies outside element {element}")]
    PointOutside { element: usize, x: f64, y: f64 },

    #[error("interface sampling point ({x}, {y}) is not on an interface edge")]
    Placement { x: f64, y: f64 },

    #[error("exact field has zero norm; relative error undefined")]
    Normalization,

    #[error("invalid problem data: {0}")]
    Problem(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
