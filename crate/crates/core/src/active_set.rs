//! Primal active-set maximization of the bound-constrained partial likelihood.
//!
//! The working set holds every column allowed to be nonzero: all
//! unconstrained columns plus the bounded columns currently off their bound.
//! Each pass solves the unconstrained Cox subproblem on the working set
//! (Newton, warm-started), pulls an infeasible solution back to the boundary
//! along the segment from the current iterate and drops the blocking column,
//! and once the subproblem solution is feasible admits the excluded bounded
//! column with the largest positive score. It stops when no excluded column
//! has a score above the KKT tolerance.

use serde::{Deserialize, Serialize};

use crate::basis::{center_component, expand_design, reconstruct_component, BasisExpansion, ModelSpec};
use crate::error::{Error, Result};
use crate::inference::{linear_predictor, FittedModel, LinearCoefficient};
use crate::survival::{
    breslow_baseline, evaluate, newton_solve, BaselineHazard, DesignMatrix, NewtonOptions, Order,
    SurvivalDataset,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Tolerance on score components for the KKT test and column entry.
    pub kkt_tol: f64,
    pub newton: NewtonOptions,
    /// Cap on subproblem solves; `None` means `10 * P`.
    pub max_outer: Option<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-6,
            newton: NewtonOptions::default(),
            max_outer: None,
        }
    }
}

/// Columns currently allowed to be nonzero, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WorkingSet {
    indices: Vec<usize>,
}

impl WorkingSet {
    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, c: usize) -> bool {
        self.indices.binary_search(&c).is_ok()
    }

    /// Returns `false` if `c` was already present.
    pub fn insert(&mut self, c: usize) -> bool {
        match self.indices.binary_search(&c) {
            Ok(_) => false,
            Err(pos) => {
                self.indices.insert(pos, c);
                true
            }
        }
    }

    pub fn remove(&mut self, c: usize) -> bool {
        match self.indices.binary_search(&c) {
            Ok(pos) => {
                self.indices.remove(pos);
                true
            }
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum TraceAction {
    Subproblem { newton_iterations: usize },
    Restore { index: usize, ratio: f64 },
    Add { index: usize, score: f64 },
    Terminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub working_set_size: usize,
    /// Negative partial log-likelihood after the action.
    pub objective: f64,
    #[serde(flatten)]
    pub action: TraceAction,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    fn push(&mut self, working: &WorkingSet, loglik: f64, action: TraceAction) {
        self.records.push(TraceRecord {
            working_set_size: working.len(),
            objective: -loglik,
            action,
        });
    }

    pub fn count(&self, pred: impl Fn(&TraceAction) -> bool) -> usize {
        self.records.iter().filter(|r| pred(&r.action)).count()
    }

    pub fn additions(&self) -> usize {
        self.count(|a| matches!(a, TraceAction::Add { .. }))
    }

    pub fn restorations(&self) -> usize {
        self.count(|a| matches!(a, TraceAction::Restore { .. }))
    }

    pub fn subproblems(&self) -> usize {
        self.count(|a| matches!(a, TraceAction::Subproblem { .. }))
    }

    /// Largest increase of the objective between consecutive records.
    pub fn max_objective_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].objective - w[0].objective)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Starting working set: every unconstrained column.
pub fn initialize_working_set(expansion: &BasisExpansion) -> WorkingSet {
    working_set_from_mask(&expansion.constraint_mask)
}

fn working_set_from_mask(mask: &[bool]) -> WorkingSet {
    WorkingSet::from_indices(
        mask.iter()
            .enumerate()
            .filter(|(_, &bounded)| !bounded)
            .map(|(c, _)| c)
            .collect(),
    )
}

/// Largest `p` in `(0, 1]` keeping `(1-p) current + p candidate` feasible,
/// with the column that reaches its bound first. Only bounded columns where
/// the candidate is negative can block; the ratio for such a column is
/// `current / (current - candidate)`.
pub fn feasibility_ratio(current: &[f64], candidate: &[f64], mask: &[bool]) -> (f64, Option<usize>) {
    let mut p = 1.0;
    let mut blocking = None;
    for c in 0..mask.len() {
        if !mask[c] || candidate[c] >= 0.0 {
            continue;
        }
        let ratio = current[c] / (current[c] - candidate[c]);
        if blocking.is_none() || ratio < p {
            p = ratio;
            blocking = Some(c);
        }
    }
    (p.min(1.0), blocking)
}

/// The excluded bounded column with the largest score above `tol`.
pub fn select_entering_index(
    score: &[f64],
    working: &WorkingSet,
    mask: &[bool],
    tol: f64,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (c, &s) in score.iter().enumerate() {
        if !mask[c] || working.contains(c) || s <= tol {
            continue;
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((c, s));
        }
    }
    best.map(|(c, _)| c)
}

/// Raw output of the constrained solver on an explicit design.
#[derive(Debug, Clone)]
pub struct ConstrainedFit {
    pub beta: Vec<f64>,
    pub loglik: f64,
    pub working_set: WorkingSet,
    pub trace: IterationTrace,
    pub converged: bool,
}

/// Active-set loop on a prepared design.
///
/// `working` must contain every unconstrained column; `init` must be feasible
/// and zero outside `working`. `offset` is added to the linear predictor of
/// every subject (used for profile refits).
pub fn solve_constrained(
    design: &DesignMatrix,
    data: &SurvivalDataset,
    mask: &[bool],
    mut working: WorkingSet,
    init: &[f64],
    offset: Option<&[f64]>,
    options: &FitOptions,
) -> Result<ConstrainedFit> {
    let p_total = design.ncols();
    if mask.len() != p_total || init.len() != p_total {
        return Err(Error::InvalidInput(
            "mask and initial coefficients must match the design width".into(),
        ));
    }
    for (c, &bounded) in mask.iter().enumerate() {
        if !bounded && !working.contains(c) {
            return Err(Error::InvalidInput(format!(
                "unconstrained column {c} missing from the working set"
            )));
        }
    }
    let mut beta = vec![0.0; p_total];
    for &c in working.indices() {
        beta[c] = if mask[c] { init[c].max(0.0) } else { init[c] };
    }
    // Bounded columns starting at zero sit on their bound.
    for c in working.indices().to_vec() {
        if mask[c] && beta[c] == 0.0 {
            working.remove(c);
        }
    }

    let max_outer = options.max_outer.unwrap_or(10 * p_total.max(1));
    let mut trace = IterationTrace::default();
    let mut loglik = evaluate(design, data, &beta, working.indices(), offset, Order::Value)?.loglik;
    let fail = |e: Error, trace: &IterationTrace| Error::Subproblem {
        source: Box::new(e),
        trace: trace.clone(),
    };

    let mut solves = 0usize;
    loop {
        // Step 2: subproblem on the working set, then Step 3 restorations.
        let candidate = loop {
            if solves >= max_outer {
                return Ok(ConstrainedFit {
                    beta,
                    loglik,
                    working_set: working,
                    trace,
                    converged: false,
                });
            }
            solves += 1;
            let (cand, cand_ll, iters) = if working.is_empty() {
                let zero = vec![0.0; p_total];
                let ll = evaluate(design, data, &zero, &[], offset, Order::Value)
                    .map_err(|e| fail(e, &trace))?
                    .loglik;
                (zero, ll, 0)
            } else {
                let nf = newton_solve(design, data, working.indices(), &beta, offset, &options.newton)
                    .map_err(|e| fail(e, &trace))?;
                (nf.beta, nf.loglik, nf.iterations)
            };
            let (p, blocking) = feasibility_ratio(&beta, &cand, mask);
            let Some(_) = blocking else {
                break (cand, cand_ll, iters);
            };
            let mut next: Vec<f64> = beta
                .iter()
                .zip(&cand)
                .map(|(b, c)| (1.0 - p) * b + p * c)
                .collect();
            let mut removed = Vec::new();
            for &c in working.indices() {
                if mask[c] && (next[c] <= 0.0 || Some(c) == blocking) {
                    next[c] = 0.0;
                    removed.push(c);
                }
            }
            for &c in &removed {
                working.remove(c);
            }
            beta = next;
            loglik = evaluate(design, data, &beta, working.indices(), offset, Order::Value)
                .map_err(|e| fail(e, &trace))?
                .loglik;
            for &c in &removed {
                trace.push(&working, loglik, TraceAction::Restore { index: c, ratio: p });
            }
        };
        let (cand, cand_ll, iters) = candidate;
        beta = cand;
        loglik = cand_ll;
        trace.push(
            &working,
            loglik,
            TraceAction::Subproblem {
                newton_iterations: iters,
            },
        );

        // Step 4: admit the most promising excluded column.
        let all: Vec<usize> = (0..p_total).collect();
        let score = evaluate(design, data, &beta, &all, offset, Order::Gradient)
            .map_err(|e| fail(e, &trace))?
            .score;
        let score: Vec<f64> = score.iter().copied().collect();
        match select_entering_index(&score, &working, mask, options.kkt_tol) {
            Some(c) => {
                working.insert(c);
                trace.push(&working, loglik, TraceAction::Add { index: c, score: score[c] });
            }
            None => {
                trace.push(&working, loglik, TraceAction::Terminate);
                return Ok(ConstrainedFit {
                    beta,
                    loglik,
                    working_set: working,
                    trace,
                    converged: true,
                });
            }
        }
    }
}

/// Everything produced by a shape-restricted fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Full coefficient vector in design order (linear block, then basis blocks).
    pub coefficients: Vec<f64>,
    pub log_likelihood: f64,
    pub working_set: WorkingSet,
    pub expansion: BasisExpansion,
    pub trace: IterationTrace,
    pub converged: bool,
    /// Linear predictor of each training subject (uncentered components).
    pub linear_predictors: Vec<f64>,
    /// Prediction-ready model: linear terms, centered components, baseline.
    pub model: FittedModel,
}

impl FitResult {
    pub fn baseline(&self) -> &BaselineHazard {
        &self.model.baseline
    }

    pub fn components(&self) -> &[crate::basis::ComponentFunction] {
        &self.model.components
    }

    /// Coefficient of the linear term called `name`.
    pub fn linear_coefficient(&self, name: &str) -> Option<f64> {
        self.model
            .linear
            .iter()
            .find(|l| l.name == name)
            .map(|l| l.coefficient)
    }
}

/// Fits a shape-restricted Cox model.
pub fn fit(data: &SurvivalDataset, spec: &ModelSpec, options: &FitOptions) -> Result<FitResult> {
    let (design, expansion) = expand_design(data, spec)?;
    fit_expanded(data, &design, expansion, options)
}

/// [`fit`] on a design already produced by [`expand_design`].
pub fn fit_expanded(
    data: &SurvivalDataset,
    design: &DesignMatrix,
    expansion: BasisExpansion,
    options: &FitOptions,
) -> Result<FitResult> {
    let working = initialize_working_set(&expansion);
    let init = vec![0.0; design.ncols()];
    let solved = solve_constrained(
        design,
        data,
        &expansion.constraint_mask,
        working,
        &init,
        None,
        options,
    )?;
    assemble(data, expansion, solved)
}

pub(crate) fn assemble(
    data: &SurvivalDataset,
    expansion: BasisExpansion,
    solved: ConstrainedFit,
) -> Result<FitResult> {
    let mut components = Vec::with_capacity(expansion.blocks.len());
    for (i, block) in expansion.blocks.iter().enumerate() {
        let raw = reconstruct_component(i, &solved.beta, &expansion)?;
        components.push(center_component(&raw, &data.covariate(block.column)));
    }
    let linear = expansion
        .linear
        .iter()
        .enumerate()
        .map(|(c, (name, column))| LinearCoefficient {
            name: name.clone(),
            column: *column,
            coefficient: solved.beta[c],
        })
        .collect();
    let mut model = FittedModel {
        covariate_names: data.covariate_names().to_vec(),
        linear,
        components,
        baseline: BaselineHazard {
            jump_times: Vec::new(),
            cumulative_values: Vec::new(),
        },
    };
    // Same code path as prediction, so reported predictors reproduce exactly.
    let eta = data
        .subjects()
        .iter()
        .map(|s| linear_predictor(&model, &s.covariates))
        .collect::<Result<Vec<f64>>>()?;
    model.baseline = breslow_baseline(data, &eta)?;
    Ok(FitResult {
        coefficients: solved.beta,
        log_likelihood: solved.loglik,
        working_set: solved.working_set,
        expansion,
        trace: solved.trace,
        converged: solved.converged,
        linear_predictors: eta,
        model,
    })
}
