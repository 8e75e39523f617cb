use thiserror::Error;

/// Errors raised by the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown vertex {name}")]
    UnknownVertex { line: usize, name: String },

    #[error("line {line}: edge length must be a positive real, got {value}")]
    NonPositiveLength { line: usize, value: String },

    #[error("graph is disconnected (vertex {vertex} unreachable)")]
    Disconnected { vertex: String },

    #[error("graph violates hypotheses: {0}")]
    Hypothesis(String),

    #[error("origin {0} is not a vertex of the graph")]
    UnknownOrigin(String),

    #[error("choice index {index} out of range ({available} available)")]
    ChoiceOutOfRange { index: usize, available: usize },

    #[error("Poincare series diverges: s = {s} is not above the critical exponent {delta}")]
    Divergent { s: f64, delta: f64 },

    #[error("power iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("extrapolation failed for cylinder {cylinder:?}: spread {spread:e} exceeds {gate:e}")]
    NotExtrapolable {
        cylinder: Vec<i64>,
        spread: f64,
        gate: f64,
    },

    #[error("cylinder classification did not stabilize: unresolved mass {mass:e}")]
    Unstable { mass: f64 },

    #[error("extend prefix: {0}")]
    ExtendPrefix(String),

    #[error("degenerate measure: cylinder {cylinder:?} has mass {mass:e}")]
    DegenerateMeasure { cylinder: Vec<i64>, mass: f64 },

    #[error("symbol needs depth {needed} but the measure only has depth {available}")]
    SymbolTooDeep { needed: usize, available: usize },

    #[error("s = {s} lies outside the convergence region s < -1/3")]
    OutsideConvergence { s: f64 },

    #[error("zeta_1 has a pole at s = {s} for g = {g}")]
    Pole { g: usize, s: f64 },

    #[error("genus is ambiguous: best deviation {best:e}, runner-up {runner_up:e}")]
    AmbiguousGenus { best: f64, runner_up: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph too large for the isomorphism oracle ({vertices} vertices, {edges} edges)")]
    SizeCap { vertices: usize, edges: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
