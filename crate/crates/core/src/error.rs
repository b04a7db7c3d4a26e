use thiserror::Error;

use crate::active_set::IterationTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("covariate `{0}` has fewer than two distinct values")]
    DegenerateCovariate(String),

    #[error("unknown shape label `{label}`; expected one of: l, in, de, cvx, cvxin, cvxde, ccv, ccvin, ccvde")]
    UnknownShape { label: String },

    #[error("invalid knot strategy `{0}`; expected order_statistics, quantiles:<m> or custom:[v1,v2,...]")]
    InvalidKnotStrategy(String),

    #[error("numerical overflow while evaluating the partial likelihood")]
    NumericalOverflow,

    #[error("Newton solver requires at least one active column")]
    EmptyActiveSet,

    #[error("Newton solver did not converge after {iterations} iterations (max |score| = {score_norm:e})")]
    NewtonNonConvergence {
        iterations: usize,
        score_norm: f64,
        /// Log-likelihood after each accepted iteration.
        loglik_trace: Vec<f64>,
    },

    #[error("active-set subproblem failed after {} recorded actions: {source}", trace.records.len())]
    Subproblem {
        #[source]
        source: Box<Error>,
        trace: IterationTrace,
    },

    #[error("profile refit failed at fixed value {value}: {source}")]
    ProfileRefit {
        value: f64,
        #[source]
        source: Box<Error>,
    },
}
