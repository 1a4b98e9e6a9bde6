use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("tessellation error: {0}")]
    Tessellation(String),

    #[error("degenerate bounds: bounding box has zero extent")]
    DegenerateBounds,

    #[error("mesh is not watertight: {0}")]
    NonWatertight(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("shape mismatch in {op}: {shapes}")]
    ShapeMismatch { op: &'static str, shapes: String },

    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("Fourier locality requested without a frequency map")]
    MissingFrequencyMap,

    #[error("graph error: {0}")]
    Graph(String),

    #[error("sample set {0} is empty")]
    EmptySampleSet(usize),

    #[error(
        "non-finite loss at iteration {iteration} (geometries {geometry_ids:?}, max |prediction| {max_abs_prediction})"
    )]
    NonFiniteLoss {
        iteration: u64,
        geometry_ids: Vec<usize>,
        max_abs_prediction: f64,
    },

    #[error("degenerate targets: {0}")]
    DegenerateTargets(String),

    #[error("no zero crossing found in the sampled field")]
    EmptySurface,

    #[error("at least 2 shots are required, got {0}")]
    InsufficientShots(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
