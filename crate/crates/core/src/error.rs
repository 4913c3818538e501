use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("masks have different grid dimensions")]
    DimMismatch,
    #[error("set distance from an empty mask is undefined")]
    EmptyMask,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("obstacle has no primitives")]
    EmptyObstacle,
    #[error("grid box does not cover the enlarged obstacle (needs [{need_lo:?}, {need_hi:?}])")]
    GridCoverage {
        need_lo: [f64; 3],
        need_hi: [f64; 3],
    },
    #[error("time step {dt} violates the stability bound {bound} (h = {h})")]
    CflViolation { dt: f64, bound: f64, h: f64 },
    #[error("concentric strategy needs a start distinct from the center")]
    DegenerateCenter,
    #[error("start position is not on the segment (distance {dist})")]
    OffSegment { dist: f64 },
    #[error("segment complex is not polygonally connected ({pieces} pieces)")]
    DisconnectedComplex { pieces: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("config invariant violated: {0}")]
    ConfigInvariant(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("toml: {0}")]
    Toml(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
