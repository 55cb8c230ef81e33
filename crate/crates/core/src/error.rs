use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (length {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("element {0} is listed clockwise")]
    ClockwiseElement(usize),
    #[error("element {0} is degenerate")]
    DegenerateElement(usize),
    #[error("edge {start}-{end} is shared by more than two elements or traversed twice in the same direction")]
    NonManifoldEdge { start: usize, end: usize },
    #[error("boundary part {part}: edge {start}->{end} not found among element edges")]
    BoundaryEdgeNotFound {
        part: usize,
        start: usize,
        end: usize,
    },
    #[error("boundary part {part}: edge {start}->{end} listed more than once")]
    DuplicateBoundaryEdge {
        part: usize,
        start: usize,
        end: usize,
    },
    #[error("boundary edge {start}->{end} belongs to no boundary part")]
    UncoveredBoundaryEdge { start: usize, end: usize },
    #[error("unknown boundary part {0}")]
    UnknownBoundaryPart(usize),
    #[error("element {0}: marked edges without marked refinement edge")]
    InconsistentMarks(usize),
    #[error("invalid quadrature order {0}")]
    InvalidOrder(usize),
    #[error("invalid barycentric coordinate {0}")]
    InvalidBarycentric(usize),
    #[error("shape mismatch: expected {expected} components, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("incompatible operand shapes for batched product")]
    IncompatibleShapes,
    #[error("function belongs to mesh generation {stamp}, mesh is at generation {current}")]
    StaleFunction { stamp: u64, current: u64 },
    #[error("{0} has no well-defined trace on edges")]
    NoEdgeTrace(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("prolongation was built for generation {built}, input belongs to generation {found}")]
    StaleProlongation { built: u64, found: u64 },
    #[error("form has no coefficient set")]
    EmptyForm,
    #[error("boundary term set without boundary part selection")]
    MissingBoundaryParts,
    #[error("linear solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverBreakdown { iterations: usize, residual: f64 },
    #[error("matrix is singular or not positive definite")]
    SingularMatrix,
    #[error("Dörfler parameter must lie in (0, 1], got {0}")]
    InvalidTheta(f64),
    #[error("invalid finite element order {0}")]
    InvalidElementOrder(usize),
}
