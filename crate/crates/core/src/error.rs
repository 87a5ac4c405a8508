use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown point {0}")]
    UnknownPoint(String),

    #[error("points {0} and {1} lie in different components")]
    DifferentComponents(String, String),

    #[error("point {0} lies inside the open ball B_{radius}({center})", radius = .1, center = .2)]
    InsideBall(String, u64, String),

    #[error("apices {0} and {1} are at distance {2}, below the separation {3}")]
    Separation(String, String, u64, u64),

    #[error("radius {radius} outside [{lo}, {hi}] for delta {delta} and separation {rho}")]
    RadiusOutOfRange {
        radius: u64,
        lo: u64,
        hi: i64,
        delta: u64,
        rho: u64,
    },

    #[error("invalid parameters: {0}")]
    Parameters(String),

    #[error("projection distance d_{0}({1}, {2}) needs three distinct-from-center apices")]
    DegenerateProjection(String, String, String),

    #[error("index {0} out of range for a path of length {1}")]
    IndexOutOfRange(usize, usize),

    #[error("projection data index sets differ")]
    IndexMismatch,

    #[error("axiom precondition failed: {0}")]
    AxiomPrecondition(String),

    #[error("standard path order is not a strict total order: {0}")]
    OrderNotTotal(String),

    #[error("standard path {0} -> {1} has non-adjacent consecutive vertices {2}, {3}")]
    PathNotAdjacent(String, String, String, String),

    #[error("invalid group data: {0}")]
    Group(String),

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("windmill: {0}")]
    Windmill(String),

    #[error("canoe construction failed: {0}")]
    Canoe(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
