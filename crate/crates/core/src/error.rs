use thiserror::Error;

/// Errors raised by the geometric and numerical routines of this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point ({0}, {1}) lies outside the chart")]
    OutsideChart(f64, f64),
    #[error("metric is degenerate at ({0}, {1})")]
    DegenerateMetric(f64, f64),
    #[error("curvature requested at C^{{1,1}} joint t = {0} without a one-sided flag")]
    JointEvaluation(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("expression error: {0}")]
    Expression(String),
    #[error("step size underflow at t = {time} (h = {step})")]
    StepUnderflow { time: f64, step: f64 },
    #[error("start state points strictly outward at the boundary")]
    OutwardStart,
    #[error("orbit left the surface at t = {0} before the requested time")]
    EarlyExit(f64),
    #[error("no bracket found for class {class} (scanned windings {min_winding}..={max_winding})")]
    NoBracket {
        class: String,
        min_winding: i64,
        max_winding: i64,
    },
    #[error("boundary metrics differ by {0:e}; refusing comparison")]
    BoundaryMismatch(f64),
    #[error("Jacobian of the diffeomorphism is singular at ({0}, {1})")]
    SingularJacobian(f64, f64),
    #[error("order {requested} exceeds the resolvable order {max}")]
    OrderTooHigh { requested: usize, max: usize },
    #[error("grid too coarse: {0} interior nodes on an axis (need at least 8)")]
    GridTooCoarse(usize),
    #[error("singular matrix (zero pivot at row {0})")]
    SingularMatrix(usize),
    #[error("eigensolver did not converge (best residual {0:e})")]
    EigenNonConvergence(f64),
    #[error("operator is not LPSC: eigenvalue {0:e} inside the gap")]
    NotLpsc(f64),
    #[error("Newton iteration diverged; residual history {0:?}")]
    NewtonDivergence(Vec<f64>),
    #[error("no perturbation direction with |d lambda| above threshold among {0} candidates")]
    NoSplittingDirection(usize),
    #[error("bump centres violate the separation condition: {0}")]
    Separation(String),
    #[error("no hyperbolic funnel matches: value {value}, derivative {derivative}")]
    TailInfeasible { value: f64, derivative: f64 },
    #[error("convexity lost at t = {at}; maximal admissible delta0 is {max_delta0}")]
    ConvexityLost { at: f64, max_delta0: f64 },
    #[error("mollification neighbourhoods overlap: {0}")]
    Overlap(String),
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
