use thiserror::Error;

/// Errors raised across the toolkit. Variants carry enough context to
/// locate the failing input without re-running.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain has no cells")]
    EmptyDomain,
    #[error("unsupported dimension {0} (expected 2..=4)")]
    BadDimension(usize),
    #[error("cell {cell:?} has {got} coordinates, expected {expected}")]
    BadCell {
        cell: Vec<i64>,
        got: usize,
        expected: usize,
    },
    #[error("domain has no boundary faces")]
    NoBoundary,

    #[error("invalid partition config: {0}")]
    BadConfig(String),
    #[error("no good ball found: {0}")]
    NoGoodBall(String),
    #[error("partition cost {cost} is not below the bound {bound}")]
    CostBoundViolated { cost: f64, bound: f64 },

    #[error("placement {0:?} lies outside the routing ball")]
    PlacementOutsideBall(Vec<f64>),
    #[error("placement {0:?} is not a vertex of the half grid")]
    PlacementOffGrid(Vec<f64>),
    #[error(
        "density violated: {count} points in ball of radius {radius} at {center:?} (limit {limit})"
    )]
    DensityViolation {
        center: Vec<f64>,
        radius: f64,
        count: usize,
        limit: f64,
    },
    #[error("routing infeasible: max-flow {value} < demand {demand}")]
    RoutingInfeasible { value: i64, demand: i64 },
    #[error("flow value {value} does not cover demand {demand}")]
    InfeasibleDecomposition { value: i64, demand: i64 },

    #[error("matching endpoints {a} and {b} are closer than 1")]
    EndpointsTooClose { a: usize, b: usize },
    #[error("matching endpoint {0} appears more than once")]
    DuplicateEndpoint(usize),
    #[error("radius {radius} too small for {edges} matching edges")]
    RadiusTooSmall { radius: f64, edges: usize },
    #[error("congestion {max} above cap {cap} at {center:?} after {rounds} rounds")]
    CongestionUnachievable {
        max: usize,
        cap: usize,
        center: Vec<f64>,
        rounds: usize,
    },

    #[error("ball packing failed: {0}")]
    PackingFailed(String),
    #[error("{count} paths share a grid edge near {at:?}, more than {m} tracks")]
    TrackOverflow {
        count: usize,
        m: usize,
        at: Vec<f64>,
    },
    #[error("stage {stage}: {source}")]
    Stage { stage: String, source: Box<Error> },

    #[error("k = {k} outside 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("point lies on the curve")]
    PointOnCurve,
    #[error("winding sum {0} is not close to an integer")]
    NonIntegralWinding(f64),
    #[error("counterexample spec invalid: {0}")]
    BadCounterexample(String),
    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),
    #[error("boundary vertex {vertex} maps to distance {distance} from the target boundary")]
    NotBoundaryRespecting { vertex: usize, distance: f64 },
    #[error("no regular value found among {0} samples")]
    NoRegularValue(usize),
    #[error("implicit function is positive everywhere on the box")]
    EmptyResult,
    #[error("mesh invalid: {0}")]
    BadMesh(String),
}

impl Error {
    pub fn at_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
