//! Numerical construction of the rectifying change of coordinates for first
//! order ODE systems x' = v(t, x), together with the symmetry machinery that
//! rides on top of it.
//!
//! The central object is the space-time map Phi(t, x0) = (t, phi(t, x0)),
//! where phi is the flow of the field from a base time. Straightening a field
//! this way turns every solution into a horizontal line, which reduces
//! questions about symmetries of the original equation to symmetries of the
//! trivial equation x' = 0. Those are generated by wreath-product elements
//! (a time warp per point plus a spatial permutation of trajectories), and
//! conjugating them back through the rectification yields symmetries of the
//! original field.
//!
//! Modules:
//! - [`expr`]: closed-form scalar expressions (parse, evaluate, differentiate)
//! - [`domain`]: open intervals, boxes, and deterministic probe grids
//! - [`integrate`]: embedded RK5(4) with dense output, event detection, and
//!   the variational equation for flow Jacobians
//! - [`flow`]: two-time flow queries and their consistency checks
//! - [`rectify`]: the rectifying map, its inverse, and pushforward residuals
//! - [`symmetry`]: wreath elements, conjugation, and symmetry verification
//! - [`diagnostics`]: Lipschitz estimation, invariance and uniqueness probes
//! - [`problem`], [`report`], [`cli`]: file formats and the command line tool

pub mod cli;
pub mod diagnostics;
pub mod domain;
pub mod expr;
pub mod flow;
pub mod integrate;
pub mod interp;
pub mod problem;
pub mod rectify;
pub mod report;
pub mod symmetry;

pub use domain::{Interval, SpatialBox};
pub use expr::{DiffVar, EvalPoint, Expression};
pub use flow::FlowQuery;
pub use integrate::{
    integrate, integrate_with_variational, JacobianCurve, SolutionCurve, Termination, Tolerances,
    VectorFieldSpec,
};
pub use rectify::{Rectification, RectificationReport, SpaceTimeMap};
pub use symmetry::{SymmetryCheckReport, WreathElement};

/// Everything that can go wrong across the crate. Variants are shared by the
/// expression layer, the integrator, and the geometric operations so that
/// callers see one error vocabulary.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("spatial index {index} out of range for dimension {dim} (valid: x1..x{dim})")]
    Dimension { index: usize, dim: usize },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time {t} outside the covered range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("trajectory left the spatial domain at t = {t}")]
    TrajectoryEscaped { t: f64 },

    #[error("trajectory blew up at t = {t}")]
    TrajectoryBlowUp { t: f64 },

    #[error("rectification probe failed: {0}")]
    ProbeFailed(String),

    #[error("missing inverse: {0}")]
    MissingInverse(String),

    #[error("map is not a symmetry of the trivial equation (time-dependence witness {witness:.3e})")]
    NotTrivialForm { witness: f64 },

    #[error("step budget exhausted near t = {t}")]
    StepBudget { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
