use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("STL parse error at byte {offset}: {message}")]
    StlParse { offset: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("empty geometry: {0}")]
    EmptyGeometry(&'static str),

    #[error("unknown {kind} id {id}")]
    UnknownEntity { kind: &'static str, id: usize },

    #[error("{op} refused: measured size {measured} is not below eps {eps}")]
    EpsViolation { op: &'static str, measured: f64, eps: f64 },

    #[error("{op} refused: {reason}")]
    Refused { op: &'static str, reason: String },

    #[error("flaw script step {step} failed: {source}")]
    ScriptStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("point {0:?} lies outside the domain box")]
    OutsideDomain([f64; 3]),

    #[error("seed leaf {0} is cut and cannot start a flood fill")]
    CutSeed(usize),

    #[error("no interior detectable up to depth {cap}")]
    NoInterior { cap: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("Dirichlet plane {axis}={value} is not aligned with the cell grid; use penalty enforcement")]
    UnalignedPlane { axis: usize, value: f64 },

    #[error("system is singular or not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("CG did not converge after {iterations} iterations (relative residual {residual:e})")]
    CgNotConverged {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("dense solver limited to {limit} unknowns, got {n}")]
    TooLarge { n: usize, limit: usize },

    #[error("{policy} run failed: {source}")]
    PolicyRun {
        policy: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
