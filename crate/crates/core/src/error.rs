use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("component {index}: left endpoint {left} is not below right endpoint {right}")]
    EmptyComponent { index: usize, left: f64, right: f64 },
    #[error("components {first} and {second} overlap or are out of order")]
    OverlappingComponents { first: usize, second: usize },
    #[error("component {index}: exponent {value} outside (-1, 1)")]
    ExponentOutOfRange { index: usize, value: f64 },
    #[error("component {index}: modulation polynomial is not positive at x = {at}")]
    NonPositiveModulation { index: usize, at: f64 },
    #[error("component {index}: weight {weight} must be positive")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("atom at {location}: mass {mass} must lie in (0, 1)")]
    InvalidAtomMass { location: f64, mass: f64 },
    #[error("atom at {location} sits on a component endpoint")]
    AtomOnEndpoint { location: f64 },
    #[error("atoms at {0} coincide")]
    DuplicateAtom(f64),
    #[error("non-finite value in measure description")]
    NonFinite,
    #[error("total mass {total} differs from 1")]
    MassMismatch { total: f64 },
    #[error("measure is a single point mass")]
    DegenerateMeasure,
    #[error("measure has atoms; the pair path needs absolutely continuous inputs")]
    AtomsOnPairPath,
    #[error("measure is not centered (first moment {mean})")]
    NotCentered { mean: f64 },
    #[error("measure has no absolutely continuous part (use the atomic relaxation)")]
    NoContinuousPart,
    #[error("probability level {0} outside (0, 1)")]
    InvalidProbability(f64),
    #[error("moment order {0} exceeds 8")]
    MomentOrder(u32),
    #[error("evaluation point {re} + {im}i lies in the lower half-plane or is not finite")]
    InvalidPoint { re: f64, im: f64 },
    #[error("real evaluation point {0} lies on the support")]
    OnSupport(f64),
    #[error("evaluation point {0} is an atom")]
    OnAtom(f64),
    #[error("evaluation point is a zero of the Cauchy transform")]
    ZeroOfTransform,
    #[error("quadrature failed to converge at {re} + {im}i")]
    QuadratureNonConvergent { re: f64, im: f64 },
    #[error("semigroup parameter t = {0} must exceed 1")]
    InvalidTime(f64),
    #[error("point {0} is the image of an atom of mass at least 1 - 1/t")]
    AtomImage(f64),
    #[error("fixed-point iteration did not converge after {iterations} steps (residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },
    #[error("continuation ladder broke at eta = {eta:e} (last good eta {last_good:e})")]
    LadderBreak { eta: f64, last_good: f64 },
    #[error("ladder failed at {failed} of {total} grid points")]
    LadderFailureRate { failed: usize, total: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("support threshold is ambiguous over {0} grid points")]
    ThresholdAmbiguity(usize),
    #[error("bounds mismatch: {0}")]
    BoundsMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("eigenvalue solver failed")]
    EigenSolver,
    #[error("empirical spectrum [{lo}, {hi}] escapes the density window")]
    SpectrumOutsideWindow { lo: f64, hi: f64 },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNonConvergent { .. }
                | Error::IterationLimit { .. }
                | Error::LadderBreak { .. }
                | Error::LadderFailureRate { .. }
                | Error::ThresholdAmbiguity(_)
                | Error::EigenSolver
                | Error::ZeroOfTransform
                | Error::SpectrumOutsideWindow { .. }
        )
    }
}
