use num_complex::Complex64;
use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by the zero polynomial")]
    DivisionByZeroPolynomial,

    #[error("root finding did not converge after {iterations} iterations")]
    RootNonConvergence { iterations: usize },

    #[error("root list is inconsistent with the denominator: {0}")]
    InconsistentRoots(String),

    #[error("poles {a} and {b} are closer than the separation threshold {threshold:e}")]
    PoleClustering {
        a: Complex64,
        b: Complex64,
        threshold: f64,
    },

    #[error("simple pole at {pole} integrates to a logarithm")]
    LogTerm { pole: Complex64 },

    #[error("not a solution: relative remainder {relative_remainder:e} exceeds {tolerance:e}")]
    NotASolution {
        relative_remainder: f64,
        tolerance: f64,
    },

    #[error("Van Vleck degree {degree} exceeds the bound {bound}")]
    DegreeViolation { degree: usize, bound: i64 },

    #[error("no scalar multiplier makes the division exact (relative remainder {relative_remainder:e})")]
    NoConsistentRho { relative_remainder: f64 },

    #[error("point {point} hits a pole of the constraint")]
    PoleHit { point: Complex64 },

    #[error("configuration lies on the arrangement: {0}")]
    ArrangementHit(String),

    #[error("Newton step cannot avoid the arrangement")]
    StepIntoArrangement,

    #[error("equilibrium solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("problem is not on the real axis with positive charges")]
    NotRealAxisProblem,

    #[error("classification needs real positions and real strengths")]
    ComplexDataUnsupported,

    #[error("configuration is not critical (residual {residual:e})")]
    NotCritical { residual: f64 },

    #[error("operator has Fuchs index {0}, expected 0")]
    NotFuchs0(i64),

    #[error("recurrence breaks down at coefficient {index}")]
    RecurrenceBreakdown { index: usize },

    #[error("binomial count exceeds the cap of {cap}")]
    CountOverflow { cap: u64 },

    #[error("Pochhammer symbol ({b})_{j} vanishes in the denominator")]
    PochhammerPole { b: f64, j: usize },

    #[error("constraint is not a single monomial")]
    NonMonomialConstraint,

    #[error("current constraint level is zero; no finite scale reaches the target")]
    ZeroLevel,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
