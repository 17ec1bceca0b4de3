use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AngleError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse angle {0:?}; expected \"num/den\"")]
    Parse(String),
    #[error("angle {0} is not co-periodic")]
    NotCoperiodic(String),
    #[error("angle {angle} does not have period or co-period {q}")]
    PeriodMismatch { angle: String, q: u32 },
    #[error("angles do not have denominators dividing 3(3^{0}-1)")]
    DenominatorMismatch(u32),
    #[error("no period found within the bound of {0} tripling steps")]
    PeriodBound(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PortraitError {
    #[error(transparent)]
    Angle(#[from] AngleError),
    #[error("portraits have different periods ({0} vs {1})")]
    PeriodMismatch(u32, u32),
    #[error("angle {0} does not have period {1}")]
    NotPeriodic(String, u32),
    #[error("classes of a portrait overlap")]
    Overlapping,
    #[error("parameter angles must be distinct")]
    Degenerate,
    #[error("grand orbit hypothesis violated: {0}")]
    GrandOrbitClash(String),
    #[error("no shift k satisfies the four-ray identities")]
    NoShift,
    #[error("no adjacency condition holds")]
    NoCondition,
    #[error("model consistency check failed: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error("p = {0} is outside the escape-region table (1..=9)")]
    OutOfTable(u32),
    #[error("inconsistent Euler bookkeeping: {0}")]
    Inconsistent(String),
    #[error("argument must be positive")]
    NonPositive,
}

/// Failures of floating-point procedures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("orbit did not escape within {0} iterations")]
    IterationBudgetExceeded(usize),
    #[error("Böttcher continuation passes too close to a critical value")]
    TooDeep,
    #[error("free critical orbit does not escape")]
    NotEscaping,
    #[error("root finding failed: {0}")]
    RootFindingFailure(String),
    #[error("Newton iteration diverged at potential {potential:e}")]
    NewtonDivergence { potential: f64 },
    #[error("parameter ray left its escape region")]
    RegionEscape,
    #[error("landing verification failed: {0}")]
    VerificationFailed(String),
    #[error("dynamic ray of angle {0} crashed into a (pre)critical point")]
    RayCrashed(String),
    #[error("landing points within the ambiguous band [{0:e}, {1:e})")]
    ClusterAmbiguous(f64, f64),
    #[error("wall construction failed: {0}")]
    WallTraceFailed(String),
    #[error("numerical continuation lost its branch")]
    ContinuationLost,
    #[error("map is not a center (critical orbits not periodic)")]
    NotACenter,
    #[error("polynomial degree {0} too large for this solver")]
    DegreeTooLarge(usize),
    #[error("escape regions of multiplicity {0} are not supported")]
    Multiplicity(u32),
    #[error("parameter is zero")]
    ZeroParameter,
    #[error("tessellation build failed: {0}")]
    TraceFailure(String),
    #[error("face sample lies on an edge")]
    SampleOnEdge,
    #[error("face portraits disagree between samples: {0}")]
    PortraitMismatch(String),
    #[error("no explicit chart for S_{0}")]
    ChartUnavailable(u32),
}

/// Crate-wide error; the CLI maps domain errors to exit code 2 and numeric
/// failures to exit code 3.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Angle(#[from] AngleError),
    #[error(transparent)]
    Portrait(#[from] PortraitError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

impl Error {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
