//! Prediction from a fitted model and likelihood-ratio standard errors for
//! linear coefficients.

use serde::{Deserialize, Serialize};

use crate::active_set::{solve_constrained, FitOptions, FitResult, WorkingSet};
use crate::basis::{expand_design, ComponentFunction, ModelSpec};
use crate::error::{Error, Result};
use crate::survival::{evaluate, solve_spd, BaselineHazard, ColumnLabel, Order, SurvivalDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCoefficient {
    pub name: String,
    /// Index into the covariate vector.
    pub column: usize,
    pub coefficient: f64,
}

/// Self-contained fitted model: enough to compute linear predictors and
/// survival curves for new covariate vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    /// Covariate vector layout expected by [`linear_predictor`].
    pub covariate_names: Vec<String>,
    pub linear: Vec<LinearCoefficient>,
    pub components: Vec<ComponentFunction>,
    /// Breslow baseline computed from the uncentered linear predictor.
    pub baseline: BaselineHazard,
}

impl FittedModel {
    pub fn component(&self, name: &str) -> Option<&ComponentFunction> {
        self.components.iter().find(|c| c.name == name)
    }
}

/// `z b + sum_i r_i(x_i)` with uncentered components, matching the scale of
/// the stored baseline.
pub fn linear_predictor(model: &FittedModel, covariates: &[f64]) -> Result<f64> {
    if covariates.len() != model.covariate_names.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} covariates, got {}",
            model.covariate_names.len(),
            covariates.len()
        )));
    }
    let linear: f64 = model
        .linear
        .iter()
        .map(|l| l.coefficient * covariates[l.column])
        .sum();
    let shaped: f64 = model
        .components
        .iter()
        .map(|c| c.raw(covariates[c.column]))
        .sum();
    Ok(linear + shaped)
}

/// Predicted survival `S(t) = exp(-Lambda(t) exp(eta))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    baseline: BaselineHazard,
    relative_risk: f64,
}

impl SurvivalCurve {
    pub fn at(&self, t: f64) -> f64 {
        (-self.baseline.cumulative_at(t) * self.relative_risk).exp()
    }

    pub fn relative_risk(&self) -> f64 {
        self.relative_risk
    }

    /// `(time, S(time))` at each baseline jump.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        self.baseline
            .jump_times
            .iter()
            .map(|&t| (t, self.at(t)))
            .collect()
    }
}

pub fn survival_curve(model: &FittedModel, covariates: &[f64]) -> Result<SurvivalCurve> {
    let eta = linear_predictor(model, covariates)?;
    Ok(survival_curve_for_eta(model, eta))
}

pub fn survival_curve_for_eta(model: &FittedModel, eta: f64) -> SurvivalCurve {
    SurvivalCurve {
        baseline: model.baseline.clone(),
        relative_risk: eta.exp(),
    }
}

/// Deviance-one profile interval for one linear coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrInterval {
    /// Design column of the coefficient.
    pub index: usize,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Half the interval width.
    pub se: f64,
}

/// Bisection tolerance on the deviance at the interval ends.
pub const DEVIANCE_TOL: f64 = 1e-4;

/// Solves `2 (max_loglik - profile(c)) = 1` on both sides of `estimate`.
///
/// The search starts at `estimate +- initial_halfwidth` and doubles outward
/// until the deviance exceeds one.
pub fn deviance_interval<F>(
    estimate: f64,
    max_loglik: f64,
    initial_halfwidth: f64,
    profile: F,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let deviance = |c: f64| profile(c).map(|ll| 2.0 * (max_loglik - ll));
    let side = |dir: f64| -> Result<f64> {
        let mut width = initial_halfwidth.abs().max(1e-8);
        let mut inner = estimate;
        let mut outer = estimate + dir * width;
        let mut expansions = 0;
        loop {
            let d = deviance(outer)?;
            if (d - 1.0).abs() <= DEVIANCE_TOL {
                return Ok(outer);
            }
            if d > 1.0 {
                break;
            }
            expansions += 1;
            if expansions > 60 {
                return Err(Error::InvalidInput(format!(
                    "profile deviance never reaches 1 (at {outer} it is {d})"
                )));
            }
            inner = outer;
            width *= 2.0;
            outer = estimate + dir * width;
        }
        for _ in 0..200 {
            let mid = 0.5 * (inner + outer);
            let d = deviance(mid)?;
            if (d - 1.0).abs() <= DEVIANCE_TOL || (outer - inner).abs() <= 1e-14 * (1.0 + mid.abs()) {
                return Ok(mid);
            }
            if d > 1.0 {
                outer = mid;
            } else {
                inner = mid;
            }
        }
        Ok(0.5 * (inner + outer))
    };
    let (lower, upper) = rayon::join(|| side(-1.0), || side(1.0));
    Ok((lower?, upper?))
}

/// Likelihood-ratio standard error for linear coefficient `target` (a design
/// column index). Every other parameter, including the shaped components, is
/// re-optimized under its constraints at each fixed value.
pub fn lr_standard_error(
    data: &SurvivalDataset,
    spec: &ModelSpec,
    fit: &FitResult,
    target: usize,
    options: &FitOptions,
) -> Result<LrInterval> {
    let (design, expansion) = expand_design(data, spec)?;
    if expansion != fit.expansion {
        return Err(Error::InvalidInput(
            "fit was not produced from this dataset and model spec".into(),
        ));
    }
    match design.labels().get(target) {
        Some(ColumnLabel::Linear { .. }) => {}
        _ => {
            return Err(Error::InvalidInput(format!(
                "column {target} is not a linear coefficient"
            )))
        }
    }
    let estimate = fit.coefficients[target];

    // Wald scale from the information restricted to the final working set.
    let ws = fit.working_set.indices();
    let ev = evaluate(&design, data, &fit.coefficients, ws, None, Order::Hessian)?;
    let pos = ws.iter().position(|&c| c == target).ok_or_else(|| {
        Error::InvalidInput(format!("column {target} is not in the working set"))
    })?;
    let mut unit = nalgebra::DVector::zeros(ws.len());
    unit[pos] = 1.0;
    let (col, _) = solve_spd(&ev.information, &unit);
    let wald_se = col[pos].max(0.0).sqrt();

    let reduced = design.without_column(target);
    let mut mask = expansion.constraint_mask.clone();
    mask.remove(target);
    let shift = |c: usize| if c > target { c - 1 } else { c };
    let working = WorkingSet::from_indices(
        ws.iter().filter(|&&c| c != target).map(|&c| shift(c)).collect(),
    );
    let mut init = fit.coefficients.clone();
    init.remove(target);
    let target_column = design.column(target);

    let profile = |value: f64| -> Result<f64> {
        let offset: Vec<f64> = target_column.iter().map(|w| value * w).collect();
        solve_constrained(&reduced, data, &mask, working.clone(), &init, Some(&offset), options)
            .and_then(|f| {
                if f.converged {
                    Ok(f.loglik)
                } else {
                    Err(Error::InvalidInput("profile refit hit the iteration cap".into()))
                }
            })
            .map_err(|e| Error::ProfileRefit {
                value,
                source: Box::new(e),
            })
    };
    let (lower, upper) = deviance_interval(estimate, fit.log_likelihood, 4.0 * wald_se, profile)?;
    Ok(LrInterval {
        index: target,
        estimate,
        lower,
        upper,
        se: 0.5 * (upper - lower),
    })
}
