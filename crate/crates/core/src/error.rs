use crate::symtensor::Charge;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("block key {key:?} violates the fusion rule (net flux {flux})")]
    FusionViolation { key: Vec<Charge>, flux: i64 },
    #[error("block {key:?} has shape {got:?}, sectors require {expected:?}")]
    ShapeMismatch {
        key: Vec<Charge>,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("charge {charge} is not a sector of leg {leg}")]
    UnknownCharge { leg: usize, charge: Charge },
    #[error("invalid leg: {0}")]
    InvalidLeg(String),
    #[error("contracted legs ({0}, {1}) must have opposite directions")]
    DirectionMismatch(usize, usize),
    #[error("contracted legs ({0}, {1}) disagree on the dimension of charge {2}")]
    SectorMismatch(usize, usize, Charge),
    #[error("fuse group {0} mixes incoming and outgoing legs")]
    MixedDirectionGroup(usize),
    #[error("leg structure mismatch: {0}")]
    LegMismatch(String),
    #[error("tensor has no nonzero blocks")]
    EmptyTensor,
    #[error("empty chain")]
    EmptyChain,
    #[error("chain lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("physical sectors differ at site {0}")]
    PhysicalSectorMismatch(usize),
    #[error("site {site} out of range for chain of length {len}")]
    SiteOutOfRange { site: usize, len: usize },
    #[error("term {0} changes the total charge; it must go through the asymmetric path")]
    NonConservingTerm(usize),
    #[error("asymmetric term {0} acts on more than one site")]
    NonLocalAsymmetricTerm(usize),
    #[error("operator on site {0} has no definite charge shift")]
    IndefiniteShift(usize),
    #[error("initial state has zero norm")]
    ZeroNormInitial,
    #[error("cumulative discarded weight {weight:e} exceeds bound {bound:e}")]
    TruncationBlowup { weight: f64, bound: f64 },
    #[error("dense dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
