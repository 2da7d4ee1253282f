use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("Zhukovsky condition C1 = A1 + A2 violated (C1 = {c1}, A1 + A2 = {sum})")]
    ZhukovskyViolated { c1: f64, sum: f64 },

    #[error("gyrostatic momentum k is zero; the elliptic reduction degenerates")]
    ZeroGyroMomentum,

    #[error("coordinate pole: {0}")]
    PoleProximity(String),

    #[error("argument within {distance:e} of a lattice point")]
    LatticePole { distance: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no real motion: {0}")]
    NoRealMotion(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),

    #[error("constraint violation {violation:e} above projection threshold")]
    ConstraintViolation { violation: f64 },

    #[error("insufficient sampling: residual {residual:e} is at the differentiation noise floor {noise_floor:e}")]
    InsufficientSampling { residual: f64, noise_floor: f64 },

    #[error("inadmissible variation: {0}")]
    InadmissibleVariation(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
