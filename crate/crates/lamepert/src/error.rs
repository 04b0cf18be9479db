use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("perturbation too large: eps*max|kappa*h| = {risk:.3} (must be < {guard})")]
    SelfIntersectionRisk { risk: f64, guard: f64 },

    #[error("kernel evaluated at the origin (|x| = {0:e})")]
    OriginEvaluation(f64),

    #[error("node count must be even and >= 16, got {0}")]
    OddNodeCount(usize),

    #[error("evaluation point {index} is {distance:.3e} from the boundary (need >= {required:.3e})")]
    TooCloseToBoundary {
        index: usize,
        distance: f64,
        required: f64,
    },

    #[error("plus/minus assemblies disagree by {0:.3e}")]
    SideMismatch(f64),

    #[error("linear system is singular or ill-conditioned (condition estimate {0:.3e})")]
    SingularSystem(f64),

    #[error("observation curve does not enclose the inclusion")]
    CurveDoesNotEncloseInclusion,

    #[error("strain is not symmetric (asymmetry {0:.3e})")]
    AsymmetricStrain(f64),

    #[error("invalid Lame parameters: {0}")]
    InvalidLame(String),

    #[error("polynomial field does not solve the Lame system (max residual coefficient {0:.3e})")]
    NotLameSolution(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;
