//! Shape-restricted additive Cox proportional-hazards regression.
//!
//! Each covariate enters the hazard either linearly or through a
//! shape-restricted component (monotone, convex, concave, or a combination).
//! Shaped components are expanded over step or hinge basis functions anchored
//! at candidate knots, which turns the fit into an ordinary Cox regression with
//! nonnegativity bounds on the basis weights. The bound-constrained partial
//! likelihood is maximized with a primal active-set method whose inner
//! subproblems are unconstrained Newton solves.
//!
//! Modules:
//!
//! - [`survival`]: data model, partial likelihood and derivatives, Newton
//!   solver, Breslow baseline.
//! - [`basis`]: shape taxonomy, knot selection, design expansion, component
//!   reconstruction.
//! - [`active_set`]: the constrained fitting loop.
//! - [`inference`]: profile-likelihood standard errors and prediction.
//! - [`sim`]: Weibull data generator and Monte Carlo harness.

pub mod active_set;
pub mod basis;
mod error;
pub mod inference;
pub mod sim;
pub mod survival;

pub use active_set::{fit, FitOptions, FitResult, IterationTrace, TraceAction, WorkingSet};
pub use basis::{
    expand_design, BasisExpansion, ComponentFunction, KnotSet, KnotStrategy, ModelSpec,
    ShapeType, Term,
};
pub use error::{Error, Result};
pub use inference::{linear_predictor, lr_standard_error, survival_curve, FittedModel, LrInterval};
pub use survival::{
    breslow_baseline, newton_fit, partial_log_likelihood, score, information, BaselineHazard,
    ColumnLabel, DesignMatrix, NewtonOptions, Subject, SurvivalDataset,
};
