//! Shape taxonomy, candidate knots, basis functions and design expansion.
//!
//! A shaped covariate `x` with knots `X_1 <= ... <= X_K` is represented as
//! `r(x) = sum_j w_j g_j(x)` where each `g_j` is a step (monotone shapes) or a
//! hinge (convex/concave shapes) anchored at `X_j`. Nonnegative weights make
//! every such sum satisfy the declared shape; for `cvx` and `ccv` the first
//! weight is left free so the linear part can take either sign.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survival::{ColumnLabel, DesignMatrix, SurvivalDataset};

/// The nine supported shape constraints, numbered 1..=9 in label order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeType {
    Linear,
    Increasing,
    Decreasing,
    Convex,
    ConvexIncreasing,
    ConvexDecreasing,
    Concave,
    ConcaveIncreasing,
    ConcaveDecreasing,
}

impl ShapeType {
    pub const ALL: [ShapeType; 9] = [
        ShapeType::Linear,
        ShapeType::Increasing,
        ShapeType::Decreasing,
        ShapeType::Convex,
        ShapeType::ConvexIncreasing,
        ShapeType::ConvexDecreasing,
        ShapeType::Concave,
        ShapeType::ConcaveIncreasing,
        ShapeType::ConcaveDecreasing,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ShapeType::Linear => "l",
            ShapeType::Increasing => "in",
            ShapeType::Decreasing => "de",
            ShapeType::Convex => "cvx",
            ShapeType::ConvexIncreasing => "cvxin",
            ShapeType::ConvexDecreasing => "cvxde",
            ShapeType::Concave => "ccv",
            ShapeType::ConcaveIncreasing => "ccvin",
            ShapeType::ConcaveDecreasing => "ccvde",
        }
    }

    pub fn number(self) -> u8 {
        Self::ALL.iter().position(|&s| s == self).unwrap() as u8 + 1
    }

    pub fn from_number(q: u8) -> Option<Self> {
        Self::ALL.get(usize::from(q).checked_sub(1)?).copied()
    }

    /// Step-function bases (`in`, `de`).
    pub fn is_step(self) -> bool {
        matches!(self, ShapeType::Increasing | ShapeType::Decreasing)
    }

    /// The first basis weight is unconstrained (`cvx`, `ccv`).
    pub fn has_free_first_weight(self) -> bool {
        matches!(self, ShapeType::Convex | ShapeType::Concave)
    }

    pub fn is_convex(self) -> bool {
        matches!(
            self,
            ShapeType::Convex | ShapeType::ConvexIncreasing | ShapeType::ConvexDecreasing
        )
    }

    pub fn is_concave(self) -> bool {
        matches!(
            self,
            ShapeType::Concave | ShapeType::ConcaveIncreasing | ShapeType::ConcaveDecreasing
        )
    }

    pub fn is_increasing(self) -> bool {
        matches!(
            self,
            ShapeType::Increasing | ShapeType::ConvexIncreasing | ShapeType::ConcaveIncreasing
        )
    }

    pub fn is_decreasing(self) -> bool {
        matches!(
            self,
            ShapeType::Decreasing | ShapeType::ConvexDecreasing | ShapeType::ConcaveDecreasing
        )
    }
}

impl fmt::Display for ShapeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ShapeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|shape| shape.label() == s)
            .ok_or_else(|| Error::UnknownShape {
                label: s.to_string(),
            })
    }
}

impl Serialize for ShapeType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for ShapeType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How candidate knots are chosen for a shaped covariate.
#[derive(Debug, Clone, PartialEq)]
pub enum KnotStrategy {
    /// Every distinct observed value.
    OrderStatistics,
    /// Empirical quantiles at levels `0, 1/m, ..., 1`.
    Quantiles(usize),
    /// User-supplied, strictly ascending.
    Custom(Vec<f64>),
}

impl Default for KnotStrategy {
    fn default() -> Self {
        KnotStrategy::Quantiles(10)
    }
}

impl fmt::Display for KnotStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnotStrategy::OrderStatistics => f.write_str("order_statistics"),
            KnotStrategy::Quantiles(m) => write!(f, "quantiles:{m}"),
            KnotStrategy::Custom(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "custom:[{}]", parts.join(","))
            }
        }
    }
}

impl FromStr for KnotStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidKnotStrategy(s.to_string());
        let s = s.trim();
        if s == "order_statistics" {
            return Ok(KnotStrategy::OrderStatistics);
        }
        if let Some(m) = s.strip_prefix("quantiles:") {
            let m: usize = m.trim().parse().map_err(|_| bad())?;
            if m < 2 {
                return Err(bad());
            }
            return Ok(KnotStrategy::Quantiles(m));
        }
        if let Some(list) = s.strip_prefix("custom:") {
            let inner = list
                .trim()
                .strip_prefix('[')
                .and_then(|l| l.strip_suffix(']'))
                .ok_or_else(bad)?;
            let values = inner
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            if values.is_empty() || !values.windows(2).all(|w| w[0] < w[1]) {
                return Err(bad());
            }
            return Ok(KnotStrategy::Custom(values));
        }
        Err(bad())
    }
}

impl Serialize for KnotStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for KnotStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Candidate knots for one shaped covariate, strictly ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotSet {
    pub covariate_index: usize,
    pub knots: Vec<f64>,
}

impl KnotSet {
    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }
}

fn sorted_unique(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Lower empirical quantile: the minimum for `p = 0`, otherwise the order
/// statistic of rank `ceil(p n)`. Levels are `k / m` so the rank is computed
/// in integer arithmetic.
fn lower_quantile(sorted: &[f64], k: usize, m: usize) -> f64 {
    let n = sorted.len();
    if k == 0 {
        return sorted[0];
    }
    let rank = (k * n).div_ceil(m);
    sorted[rank.clamp(1, n) - 1]
}

/// Chooses the candidate knots for covariate `covariate_index`.
pub fn select_knots(
    covariate_index: usize,
    values: &[f64],
    strategy: &KnotStrategy,
) -> Result<KnotSet> {
    let name = || format!("#{covariate_index}");
    if values.is_empty() {
        return Err(Error::InvalidInput(format!(
            "covariate {} has no values",
            name()
        )));
    }
    let unique = sorted_unique(values);
    if unique.len() < 2 {
        return Err(Error::DegenerateCovariate(name()));
    }
    let knots = match strategy {
        KnotStrategy::OrderStatistics => unique,
        KnotStrategy::Quantiles(m) => {
            if *m < 2 {
                return Err(Error::InvalidKnotStrategy(strategy.to_string()));
            }
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            let mut knots: Vec<f64> = (0..=*m).map(|k| lower_quantile(&sorted, k, *m)).collect();
            knots.dedup();
            knots
        }
        KnotStrategy::Custom(v) => {
            if v.is_empty() || !v.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidKnotStrategy(strategy.to_string()));
            }
            v.clone()
        }
    };
    Ok(KnotSet {
        covariate_index,
        knots,
    })
}

/// Basis function `g(x)` anchored at `knot` for a non-linear shape.
pub fn basis_value(shape: ShapeType, knot: f64, x: f64) -> f64 {
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    match shape {
        ShapeType::Increasing => ind(knot <= x),
        ShapeType::Decreasing => ind(x < knot),
        ShapeType::Convex | ShapeType::ConvexIncreasing => (x - knot) * ind(knot <= x),
        ShapeType::ConvexDecreasing => (knot - x) * ind(x <= knot),
        ShapeType::Concave | ShapeType::ConcaveDecreasing => (knot - x) * ind(knot <= x),
        ShapeType::ConcaveIncreasing => (x - knot) * ind(x <= knot),
        // Linear covariates are never expanded; treat as identity for totality.
        ShapeType::Linear => x,
    }
}

/// One covariate's role in the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    /// Index into the dataset's covariate vector.
    pub column: usize,
    pub shape: ShapeType,
    #[serde(default)]
    pub knots: KnotStrategy,
}

impl Term {
    pub fn linear(name: impl Into<String>, column: usize) -> Self {
        Self {
            name: name.into(),
            column,
            shape: ShapeType::Linear,
            knots: KnotStrategy::default(),
        }
    }

    pub fn shaped(
        name: impl Into<String>,
        column: usize,
        shape: ShapeType,
        knots: KnotStrategy,
    ) -> Self {
        Self {
            name: name.into(),
            column,
            shape,
            knots,
        }
    }
}

/// Per-covariate shapes and knot strategies.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelSpec {
    pub terms: Vec<Term>,
}

impl ModelSpec {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn linear_terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter().filter(|t| t.shape == ShapeType::Linear)
    }

    pub fn shaped_terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter().filter(|t| t.shape != ShapeType::Linear)
    }
}

/// Expanded layout of one shaped covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapedBlock {
    pub name: String,
    pub column: usize,
    pub shape: ShapeType,
    pub knots: KnotSet,
    /// First design column of this block.
    pub offset: usize,
    /// Observed range of the covariate in the training sample.
    pub support: (f64, f64),
}

impl ShapedBlock {
    pub fn columns(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.knots.len()
    }
}

/// Column layout of the expanded design and its nonnegativity mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisExpansion {
    /// `(name, dataset column)` of each linear term, in design order.
    pub linear: Vec<(String, usize)>,
    pub blocks: Vec<ShapedBlock>,
    pub labels: Vec<ColumnLabel>,
    /// `true` where the coefficient is bounded below by zero.
    pub constraint_mask: Vec<bool>,
    /// Knots dropped because their basis column vanishes on the sample.
    pub dropped_knots: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

impl BasisExpansion {
    pub fn n_columns(&self) -> usize {
        self.constraint_mask.len()
    }

    pub fn n_linear(&self) -> usize {
        self.linear.len()
    }

    pub fn knot_sets(&self) -> Vec<&KnotSet> {
        self.blocks.iter().map(|b| &b.knots).collect()
    }

    pub fn shapes(&self) -> Vec<ShapeType> {
        self.blocks.iter().map(|b| b.shape).collect()
    }

    /// Design row for one covariate vector (dataset layout).
    pub fn design_row(&self, covariates: &[f64]) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.n_columns());
        row.extend(self.linear.iter().map(|(_, c)| covariates[*c]));
        for block in &self.blocks {
            let x = covariates[block.column];
            row.extend(block.knots.knots.iter().map(|&k| basis_value(block.shape, k, x)));
        }
        row
    }
}

/// Builds the expanded design: linear columns in spec order, then each shaped
/// covariate's basis columns in knot order.
///
/// Candidate knots whose basis column is identically zero on the sample
/// (e.g. a convex hinge at the sample maximum) carry no information and are
/// dropped before the layout is fixed.
pub fn expand_design(
    data: &SurvivalDataset,
    spec: &ModelSpec,
) -> Result<(DesignMatrix, BasisExpansion)> {
    let n_cov = data.covariate_names().len();
    for term in &spec.terms {
        if term.column >= n_cov {
            return Err(Error::InvalidInput(format!(
                "term `{}` refers to covariate column {} but the dataset has {n_cov}",
                term.name, term.column
            )));
        }
    }
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut mask = Vec::new();
    let mut linear = Vec::new();
    let mut warnings = Vec::new();
    let mut dropped_knots = Vec::new();

    for term in spec.linear_terms() {
        let values = data.covariate(term.column);
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateCovariate(term.name.clone()));
        }
        columns.push(values);
        labels.push(ColumnLabel::Linear {
            name: term.name.clone(),
        });
        mask.push(false);
        linear.push((term.name.clone(), term.column));
    }

    let mut blocks = Vec::new();
    for (i, term) in spec.shaped_terms().enumerate() {
        let values = data.covariate(term.column);
        let candidates = select_knots(i, &values, &term.knots)
            .map_err(|e| rename_degenerate(e, &term.name))?;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if let KnotStrategy::Custom(v) = &term.knots {
            if v.iter().any(|&k| k < lo || k > hi) {
                warnings.push(format!(
                    "custom knots for `{}` extend outside the observed range [{lo}, {hi}]",
                    term.name
                ));
            }
        }
        let mut kept = Vec::new();
        for &knot in &candidates.knots {
            let col: Vec<f64> = values
                .iter()
                .map(|&x| basis_value(term.shape, knot, x))
                .collect();
            if col.iter().all(|&v| v == 0.0) {
                dropped_knots.push((term.name.clone(), knot));
                continue;
            }
            kept.push((knot, col));
        }
        if kept.is_empty() {
            return Err(Error::InvalidInput(format!(
                "no usable knots remain for `{}`",
                term.name
            )));
        }
        let offset = columns.len();
        let mut knots = Vec::with_capacity(kept.len());
        for (j, (knot, col)) in kept.into_iter().enumerate() {
            columns.push(col);
            labels.push(ColumnLabel::Basis {
                name: term.name.clone(),
                covariate: i,
                knot: j,
                location: knot,
            });
            mask.push(!(term.shape.has_free_first_weight() && j == 0));
            knots.push(knot);
        }
        blocks.push(ShapedBlock {
            name: term.name.clone(),
            column: term.column,
            shape: term.shape,
            knots: KnotSet {
                covariate_index: i,
                knots,
            },
            offset,
            support: (lo, hi),
        });
    }

    if columns.is_empty() {
        return Err(Error::InvalidInput("model has no terms".into()));
    }
    let n = data.len();
    let values = DMatrix::from_fn(n, columns.len(), |r, c| columns[c][r]);
    let design = DesignMatrix::new(values, labels.clone())?;
    Ok((
        design,
        BasisExpansion {
            linear,
            blocks,
            labels,
            constraint_mask: mask,
            dropped_knots,
            warnings,
        },
    ))
}

fn rename_degenerate(e: Error, name: &str) -> Error {
    match e {
        Error::DegenerateCovariate(_) => Error::DegenerateCovariate(name.to_string()),
        other => other,
    }
}

/// A fitted shaped component `r(x) = sum_j w_j g_j(x) - centering_constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFunction {
    pub covariate_index: usize,
    pub name: String,
    /// Dataset column the component reads.
    pub column: usize,
    pub shape: ShapeType,
    pub knots: Vec<f64>,
    pub weights: Vec<f64>,
    pub centering_constant: f64,
    /// Observed training range; values outside are extrapolations.
    pub support: (f64, f64),
}

impl ComponentFunction {
    /// Uncentered value; this is what enters the linear predictor.
    pub fn raw(&self, x: f64) -> f64 {
        self.knots
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w != 0.0)
            .map(|(&k, &w)| w * basis_value(self.shape, k, x))
            .sum()
    }

    /// Centered value for reporting.
    pub fn value(&self, x: f64) -> f64 {
        self.raw(x) - self.centering_constant
    }

    /// Knots carrying a strictly positive weight. For `cvx`/`ccv` the free
    /// first weight counts when nonzero.
    pub fn used_knots(&self) -> Vec<f64> {
        self.knots
            .iter()
            .zip(&self.weights)
            .enumerate()
            .filter(|(j, (_, &w))| {
                if *j == 0 && self.shape.has_free_first_weight() {
                    w != 0.0
                } else {
                    w > 0.0
                }
            })
            .map(|(_, (&k, _))| k)
            .collect()
    }

    pub fn is_extrapolated(&self, x: f64) -> bool {
        x < self.support.0 || x > self.support.1
    }
}

/// Collects the weights of shaped covariate `i` into a component function.
pub fn reconstruct_component(
    i: usize,
    coefficients: &[f64],
    expansion: &BasisExpansion,
) -> Result<ComponentFunction> {
    let block = expansion.blocks.get(i).ok_or_else(|| {
        Error::InvalidInput(format!(
            "no shaped covariate {i}; the model has {}",
            expansion.blocks.len()
        ))
    })?;
    if coefficients.len() != expansion.n_columns() {
        return Err(Error::InvalidInput(format!(
            "expected {} coefficients, got {}",
            expansion.n_columns(),
            coefficients.len()
        )));
    }
    Ok(ComponentFunction {
        covariate_index: i,
        name: block.name.clone(),
        column: block.column,
        shape: block.shape,
        knots: block.knots.knots.clone(),
        weights: coefficients[block.columns()].to_vec(),
        centering_constant: 0.0,
        support: block.support,
    })
}

/// Sets the centering constant so the component has mean zero over `sample`.
pub fn center_component(component: &ComponentFunction, sample: &[f64]) -> ComponentFunction {
    let mut out = component.clone();
    out.centering_constant = if sample.is_empty() {
        0.0
    } else {
        sample.iter().map(|&x| component.raw(x)).sum::<f64>() / sample.len() as f64
    };
    out
}
