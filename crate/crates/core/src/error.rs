use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin: 2J must be a positive integer, got J = {0}")]
    InvalidSpin(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("eigen-decomposition did not converge")]
    ConvergenceFailure,

    #[error("operator does not commute with parity: off-block norm {off_block:.3e}")]
    ParityViolation { off_block: f64 },

    #[error("eigenvalue off the unit circle: ||lambda| - 1| = {deviation:.3e}")]
    NonUnitary { deviation: f64 },

    #[error("eigenvectors were not requested for this spectrum")]
    MissingVectors,

    #[error("sweep failed at hbar_eta = {hbar_eta}: {source}")]
    SweepPoint {
        hbar_eta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("grid is not symmetric about 2pi: {0} has no mirror partner")]
    GridNotSymmetric(f64),

    #[error(
        "ambiguous level matching between hbar_eta = {from} and {to} (best overlap {overlap:.3})"
    )]
    AmbiguousMatching { from: f64, to: f64, overlap: f64 },

    #[error("root refinement stalled at bracket width {width:.3e}")]
    RefinementStall { width: f64 },

    #[error("crossing counts did not stabilize after {doublings} grid doublings")]
    NonStabilized { doublings: usize },

    #[error("power-law fit needs at least 3 points, got {0}")]
    InsufficientData(usize),

    #[error("power-law fit received a zero count at J = {0}")]
    ZeroCount(f64),

    #[error("bin width {0} does not divide 2pi into an integer number of bins")]
    BadScale(f64),

    #[error("fractal-dimension fit needs at least 3 scales, got {0}")]
    DegenerateFit(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
