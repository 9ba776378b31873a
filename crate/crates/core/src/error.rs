use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants are grouped by the module that raises them; the CLI maps
/// convergence failures to exit code 3 and everything else to 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // graph
    #[error("graph is disconnected: vertex {0} is unreachable from the root")]
    DisconnectedGraph(usize),
    #[error("edge ({x}, {y}) has non-positive weight {b}")]
    NonpositiveWeight { x: usize, y: usize, b: f64 },
    #[error("vertex {vertex} has non-positive measure {m}")]
    NonpositiveMeasure { vertex: usize, m: f64 },
    #[error("self loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("vertex id {0} is out of range")]
    VertexOutOfRange(usize),
    #[error("radius {radius} exceeds graph depth {depth}")]
    RadiusExceedsGraph { radius: usize, depth: usize },
    #[error("graph is not an exact ball of radius {radius}: it reaches depth {depth}")]
    NotExactBall { radius: usize, depth: usize },
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("function has length {got}, graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at vertex {0}")]
    NonFiniteValue(usize),

    // operator
    #[error("exponent must be positive, got {0}")]
    NonpositiveExponent(f64),
    #[error("p must lie in (1, inf), got {0}")]
    InvalidP(f64),
    #[error("vertex {0} lies on the truncation boundary")]
    BoundaryVertex(usize),
    #[error("function support touches the boundary at vertex {0}")]
    SupportTouchesBoundary(usize),
    #[error("ground function must be strictly positive, vertex {0} violates this")]
    NonpositiveGroundFunction(usize),

    // model graphs
    #[error("invalid model graph spec: {0}")]
    InvalidSpec(String),
    #[error("radius {radius} out of range 0..{limit}")]
    RadiusOutOfRange { radius: usize, limit: usize },
    #[error("Green series diverges: the model graph is not subcritical for p = {0}")]
    SeriesDivergent(f64),
    #[error("no asymptotic law declared and the growth heuristic is inconclusive")]
    UnknownAsymptotics,
    #[error("initial value must be positive, got {0}")]
    NonpositiveInitial(f64),

    // solvers
    #[error("no convergence after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("no root of the scalar vertex equation at vertex {0}")]
    NoScalarRoot(usize),
    #[error("exhaustion diverges: value at the root reached {value:e} at radius {radius}")]
    DivergentExhaustion { radius: usize, value: f64 },
    #[error("no sign change bracketing the root")]
    NoRootBracket,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    // criticality
    #[error("Green function must be positive on the interior, vertex {0} violates this")]
    NonpositiveGreen(usize),
    #[error("operators are defined over different measures (vertex {0})")]
    MeasureMismatch(usize),
    #[error("reference function must be strictly positive, vertex {0} violates this")]
    NonpositiveReference(usize),

    // landis
    #[error("annulus at radius {0} is empty")]
    EmptyAnnulus(usize),
    #[error("potential bound violated at vertex {vertex}: V = {value} > {bound}")]
    PotentialBoundViolated { vertex: usize, value: f64, bound: f64 },
    #[error("function is not harmonic: |H[u]| = {residual:e} at vertex {vertex}")]
    NotHarmonic { vertex: usize, residual: f64 },
    #[error("function is not subharmonic: H[u] = {value:e} at vertex {vertex}")]
    NotSubharmonic { vertex: usize, value: f64 },
    #[error("model graph is not subcritical for p = {0}")]
    NotSubcritical(f64),
    #[error("degree must be at least 2, got {0}")]
    InvalidDegree(usize),
    #[error("p must not exceed 2 in the recurrent regime, got {0}")]
    ExponentOutOfRange(f64),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
}

impl Error {
    /// True for failures of an iterative method, as opposed to bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::NoScalarRoot(_) | Error::DivergentExhaustion { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
