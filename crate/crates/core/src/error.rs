use thiserror::Error;

/// Failure modes shared by every operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),
    #[error("columns are linearly dependent (smallest singular value {sigma_min:e})")]
    RankDeficient { sigma_min: f64 },
    #[error("spectral gap {gap:e} between retained and discarded eigenvalues is too small")]
    GapTooSmall { gap: f64 },
    #[error("subspace is outside the chart (smallest singular value {sigma_min:e})")]
    OutsideChart { sigma_min: f64 },
    #[error("matrix is not a tangent vector at the base point (defect {defect:e})")]
    NotTangent { defect: f64 },
    #[error("matrix is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("matrix is not anti-Hermitian (defect {defect:e})")]
    NotAntiHermitian { defect: f64 },
    #[error("matrix is not a projector of rank {rank} (defect {defect:e})")]
    NotAProjector { rank: usize, defect: f64 },
    #[error("matrix is not an isometric frame (defect {defect:e})")]
    NotAFrame { defect: f64 },
    #[error("frame tangent is not horizontal (vertical part {defect:e})")]
    NotHorizontal { defect: f64 },
    #[error("base point mismatch (distance {distance:e})")]
    BaseMismatch { distance: f64 },
    #[error("ambient dimension {n} is too small for rank {m}")]
    DimensionTooSmall { n: usize, m: usize },
    #[error("section leaves its fiber at node {node} (defect {defect:e})")]
    SectionNotInFiber { node: usize, defect: f64 },
    #[error("path is not closed (residual {residual:e})")]
    NotClosed { residual: f64 },
    #[error("path is too rough at node {node} (step {step:e} exceeds bound {bound:e})")]
    PathTooRough { node: usize, step: f64, bound: f64 },
    #[error("consecutive fibers are nearly orthogonal at sample {sample} (smallest singular value {sigma_min:e})")]
    DegenerateStep { sample: usize, sigma_min: f64 },
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
