use thiserror::Error;

/// Crate-wide error type. Every fallible operation returns one of these;
/// tolerance *assertions* (inequalities that are supposed to hold) are
/// reported through diagnostics instead, so callers can distinguish
/// "bad input" from "bound violated".
#[derive(Debug, Error)]
pub enum Error {
    #[error("region is empty where a nonempty region is required")]
    EmptyRegion,
    #[error("region covers the full lattice; its complement is empty")]
    FullVolume,
    #[error("observable support {support:?} is not contained in the target volume")]
    SupportNotContained { support: Vec<usize> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bipartition cut must be a nonempty proper subregion of the volume")]
    DegenerateCut,
    #[error("ground state not gapped: gap {gap:.3e} <= tolerance {tol:.3e}")]
    NotGapped { gap: f64, tol: f64 },
    #[error("matrix is not self-adjoint: max deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("volume dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("unknown model preset '{0}'")]
    UnknownModel(String),
    #[error("bad coupling: {0}")]
    BadCoupling(String),
    #[error("geometry overflow: {0}")]
    GeometryOverflow(String),
    #[error("range violation: separation {separation} must exceed the interaction range {range}")]
    RangeViolation { separation: f64, range: f64 },
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error("quadrature unstable: {0}")]
    QuadratureUnstable(String),
    #[error("defect {0:.3e} >= 1; positivization undefined")]
    DefectTooLarge(f64),
    #[error("trace of the candidate density matrix is below 1e-14")]
    ZeroTrace,
    #[error("q-distribution vanishes at index {index} where the spectrum is positive")]
    SupportMismatch { index: usize },
    #[error("bad constants: {0}")]
    BadConstants(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("eigensolver failed: LAPACK info = {0}")]
    EigSolver(i32),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
