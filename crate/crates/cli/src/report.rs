//! The fit report: one JSON document holding everything `predict` and
//! `curves` need.

use serde::{Deserialize, Serialize};
use srcox::sim::{export_component_curve, linspace, CurvePoint};
use srcox::{ColumnLabel, FitResult, FittedModel, LrInterval, ShapeType};

use crate::spec_file::ModelSpecFile;

/// Rows per component curve table.
pub const CURVE_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub rows_used: usize,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub label: String,
    pub covariate: String,
    /// Knot location for basis columns.
    pub knot: Option<f64>,
    pub value: f64,
    pub constrained: bool,
    /// Linear coefficients are always used; basis weights when nonzero.
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEntry {
    pub name: String,
    pub interval: Option<LrInterval>,
    /// Set when the profile search failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotEntry {
    pub covariate: String,
    pub shape: ShapeType,
    pub candidates: Vec<f64>,
    pub used: Vec<f64>,
    pub dropped: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub subproblems: usize,
    pub additions: usize,
    pub restorations: usize,
    pub final_working_set: usize,
    /// `None` when the trace has a single record.
    pub max_objective_increase: Option<f64>,
    pub records: srcox::IterationTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub covariate: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub spec: ModelSpecFile,
    pub data: DataSummary,
    pub converged: bool,
    pub log_likelihood: f64,
    pub coefficients: Vec<CoefficientEntry>,
    pub lr_intervals: Vec<IntervalEntry>,
    pub knots: Vec<KnotEntry>,
    pub trace: TraceSummary,
    pub model: FittedModel,
    pub linear_predictors: Vec<f64>,
    pub curves: Vec<CurveTable>,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn build(
        spec: ModelSpecFile,
        data: DataSummary,
        fit: &FitResult,
        lr_intervals: Vec<IntervalEntry>,
    ) -> Self {
        let exp = &fit.expansion;
        let coefficients = exp
            .labels
            .iter()
            .zip(&fit.coefficients)
            .zip(&exp.constraint_mask)
            .map(|((label, &value), &constrained)| match label {
                ColumnLabel::Linear { name } => CoefficientEntry {
                    label: name.clone(),
                    covariate: name.clone(),
                    knot: None,
                    value,
                    constrained,
                    used: true,
                },
                ColumnLabel::Basis { name, location, .. } => CoefficientEntry {
                    label: format!("{name}@{location}"),
                    covariate: name.clone(),
                    knot: Some(*location),
                    value,
                    constrained,
                    used: value != 0.0,
                },
            })
            .collect();
        let knots = exp
            .blocks
            .iter()
            .zip(fit.components())
            .map(|(block, comp)| KnotEntry {
                covariate: block.name.clone(),
                shape: block.shape,
                candidates: block.knots.knots.clone(),
                used: comp.used_knots(),
                dropped: exp
                    .dropped_knots
                    .iter()
                    .filter(|(n, _)| *n == block.name)
                    .map(|&(_, k)| k)
                    .collect(),
            })
            .collect();
        let curves = fit
            .components()
            .iter()
            .map(|c| CurveTable {
                covariate: c.name.clone(),
                points: export_component_curve(c, &linspace(c.support.0, c.support.1, CURVE_POINTS)),
            })
            .collect();
        let increase = fit.trace.max_objective_increase();
        FitReport {
            spec,
            data,
            converged: fit.converged,
            log_likelihood: fit.log_likelihood,
            coefficients,
            lr_intervals,
            knots,
            trace: TraceSummary {
                subproblems: fit.trace.subproblems(),
                additions: fit.trace.additions(),
                restorations: fit.trace.restorations(),
                final_working_set: fit.working_set.len(),
                max_objective_increase: increase.is_finite().then_some(increase),
                records: fit.trace.clone(),
            },
            model: fit.model.clone(),
            linear_predictors: fit.linear_predictors.clone(),
            curves,
            warnings: exp.warnings.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String, String> {
        serde_json::to_string_pretty(self).map_err(|e| e.to_string())
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("not a fit report: {e}"))
    }
}
