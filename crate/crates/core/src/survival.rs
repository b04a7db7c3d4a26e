//! Right-censored survival data, the Cox partial likelihood and its
//! derivatives, a Newton solver for unconstrained subproblems and the
//! Breslow baseline cumulative hazard.
//!
//! Ties use the Breslow convention: every subject with `t_j >= t_i` is in the
//! risk set of an event at `t_i`, so tied events share one denominator.

use std::cmp::Ordering;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observation: follow-up time, failure indicator and covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub time: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
}

impl Subject {
    pub fn new(time: f64, event: bool, covariates: Vec<f64>) -> Self {
        Self {
            time,
            event,
            covariates,
        }
    }
}

/// A validated right-censored sample with a cached descending-time ordering.
#[derive(Debug, Clone)]
pub struct SurvivalDataset {
    subjects: Vec<Subject>,
    covariate_names: Vec<String>,
    /// Subject indices ordered by descending time.
    sort_index: Vec<usize>,
    /// Ranges into `sort_index`, one per distinct time, in descending time order.
    tie_groups: Vec<Range<usize>>,
}

impl SurvivalDataset {
    pub fn new(subjects: Vec<Subject>, covariate_names: Vec<String>) -> Result<Self> {
        if subjects.is_empty() {
            return Err(Error::InvalidInput("dataset has no subjects".into()));
        }
        let width = covariate_names.len();
        for (row, s) in subjects.iter().enumerate() {
            if !(s.time.is_finite() && s.time > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "subject {row}: time must be positive and finite, got {}",
                    s.time
                )));
            }
            if s.covariates.len() != width {
                return Err(Error::InvalidInput(format!(
                    "subject {row}: expected {width} covariates, got {}",
                    s.covariates.len()
                )));
            }
            if let Some(v) = s.covariates.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "subject {row}: non-finite covariate value {v}"
                )));
            }
        }
        if !subjects.iter().any(|s| s.event) {
            return Err(Error::InvalidInput(
                "dataset has no observed events; the partial likelihood is empty".into(),
            ));
        }
        let (sort_index, tie_groups) = risk_order(subjects.iter().map(|s| s.time));
        Ok(Self {
            subjects,
            covariate_names,
            sort_index,
            tie_groups,
        })
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariate_names.iter().position(|n| n == name)
    }

    /// Subject indices ordered by descending time.
    pub fn sort_index(&self) -> &[usize] {
        &self.sort_index
    }

    pub fn times(&self) -> Vec<f64> {
        self.subjects.iter().map(|s| s.time).collect()
    }

    pub fn events(&self) -> Vec<bool> {
        self.subjects.iter().map(|s| s.event).collect()
    }

    pub fn event_count(&self) -> usize {
        self.subjects.iter().filter(|s| s.event).count()
    }

    pub fn covariate(&self, column: usize) -> Vec<f64> {
        self.subjects.iter().map(|s| s.covariates[column]).collect()
    }

    pub(crate) fn tie_groups(&self) -> &[Range<usize>] {
        &self.tie_groups
    }
}

fn risk_order(times: impl Iterator<Item = f64>) -> (Vec<usize>, Vec<Range<usize>>) {
    let times: Vec<f64> = times.collect();
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| {
        times[b]
            .partial_cmp(&times[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut groups = Vec::new();
    let mut start = 0;
    for k in 1..=order.len() {
        if k == order.len() || times[order[k]] != times[order[start]] {
            groups.push(start..k);
            start = k;
        }
    }
    (order, groups)
}

/// Where a design column came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnLabel {
    /// Raw covariate entering linearly.
    Linear { name: String },
    /// Basis function of shaped covariate `covariate` at knot `knot` (both 0-based).
    Basis {
        name: String,
        covariate: usize,
        knot: usize,
        location: f64,
    },
}

impl ColumnLabel {
    pub fn name(&self) -> &str {
        match self {
            ColumnLabel::Linear { name } | ColumnLabel::Basis { name, .. } => name,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, ColumnLabel::Linear { .. })
    }
}

impl std::fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnLabel::Linear { name } => write!(f, "{name}"),
            ColumnLabel::Basis {
                name,
                knot,
                location,
                ..
            } => write!(f, "{name}[{knot}@{location}]"),
        }
    }
}

/// Row-per-subject design, columns ordered as the coefficient vector.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
    labels: Vec<ColumnLabel>,
}

impl DesignMatrix {
    pub fn new(values: DMatrix<f64>, labels: Vec<ColumnLabel>) -> Result<Self> {
        if values.ncols() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "design has {} columns but {} labels",
                values.ncols(),
                labels.len()
            )));
        }
        Ok(Self { values, labels })
    }

    /// Builds a design from column vectors, labelling every column as linear.
    pub fn from_columns(columns: &[Vec<f64>], names: &[&str]) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidInput("design columns differ in length".into()));
        }
        let values = DMatrix::from_fn(n, columns.len(), |r, c| columns[c][r]);
        let labels = names
            .iter()
            .map(|n| ColumnLabel::Linear {
                name: n.to_string(),
            })
            .collect();
        Self::new(values, labels)
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[ColumnLabel] {
        &self.labels
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.values.column(c).iter().copied().collect()
    }

    /// Copy without column `c`.
    pub fn without_column(&self, c: usize) -> Self {
        let mut labels = self.labels.clone();
        labels.remove(c);
        Self {
            values: self.values.clone().remove_column(c),
            labels,
        }
    }

    /// Linear predictor `W beta`, optionally shifted by an offset.
    pub fn linear_predictor(&self, beta: &[f64], offset: Option<&[f64]>) -> Vec<f64> {
        let mut eta = offset.map_or_else(|| vec![0.0; self.nrows()], <[f64]>::to_vec);
        for (c, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (e, w) in eta.iter_mut().zip(self.values.column(c).iter()) {
                    *e += b * w;
                }
            }
        }
        eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Order {
    Value,
    Gradient,
    Hessian,
}

/// Partial likelihood and derivatives restricted to a subset of columns.
#[derive(Debug, Clone)]
pub(crate) struct CoxEvaluation {
    pub loglik: f64,
    pub score: DVector<f64>,
    pub information: DMatrix<f64>,
}

/// Evaluates the Breslow partial log-likelihood at `beta` (full length) and,
/// depending on `order`, its gradient and negative Hessian with respect to
/// the coefficients listed in `cols`.
///
/// Only the columns in `cols` contribute to the linear predictor; `beta` must
/// be zero elsewhere.
pub(crate) fn evaluate(
    design: &DesignMatrix,
    data: &SurvivalDataset,
    beta: &[f64],
    cols: &[usize],
    offset: Option<&[f64]>,
    order: Order,
) -> Result<CoxEvaluation> {
    let n = data.len();
    let k = cols.len();
    let w = design.values();
    debug_assert_eq!(w.nrows(), n);

    let mut eta = offset.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    for &c in cols {
        let b = beta[c];
        if b != 0.0 {
            for (e, x) in eta.iter_mut().zip(w.column(c).iter()) {
                *e += b * x;
            }
        }
    }
    if eta.iter().any(|e| !e.is_finite()) {
        return Err(Error::NumericalOverflow);
    }
    // Risk-set sums are kept relative to exp(center), where center is the
    // largest predictor seen so far; they are rescaled whenever it grows.
    let mut center = f64::NEG_INFINITY;

    let mut loglik = 0.0;
    let mut score: DVector<f64> = DVector::zeros(if order >= Order::Gradient { k } else { 0 });
    let mut information = DMatrix::zeros(
        if order >= Order::Hessian { k } else { 0 },
        if order >= Order::Hessian { k } else { 0 },
    );
    let mut s0 = 0.0;
    let mut s1 = vec![0.0; score.len()];
    let mut s2 = DMatrix::<f64>::zeros(information.nrows(), information.ncols());
    let mut row = vec![0.0; k];
    let mut event_sum = vec![0.0; score.len()];

    let sort_index = data.sort_index();
    for group in data.tie_groups() {
        let mut events = 0usize;
        event_sum.iter_mut().for_each(|v| *v = 0.0);
        let group_max = sort_index[group.clone()]
            .iter()
            .map(|&i| eta[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if group_max > center {
            let factor = (center - group_max).exp();
            s0 *= factor;
            s1.iter_mut().for_each(|v| *v *= factor);
            s2.iter_mut().for_each(|v| *v *= factor);
            center = group_max;
        }
        for &i in &sort_index[group.clone()] {
            let r = (eta[i] - center).exp();
            s0 += r;
            if order >= Order::Gradient {
                for (slot, &c) in row.iter_mut().zip(cols) {
                    *slot = w[(i, c)];
                }
                for a in 0..k {
                    s1[a] += r * row[a];
                }
                if order >= Order::Hessian {
                    for b in 0..k {
                        let rb = r * row[b];
                        for a in b..k {
                            s2[(a, b)] += rb * row[a];
                        }
                    }
                }
            }
            if data.subjects()[i].event {
                events += 1;
                loglik += eta[i] - center;
                if order >= Order::Gradient {
                    for a in 0..k {
                        event_sum[a] += row[a];
                    }
                }
            }
        }
        if events == 0 {
            continue;
        }
        let d = events as f64;
        loglik -= d * s0.ln();
        if order >= Order::Gradient {
            for a in 0..k {
                score[a] += event_sum[a] - d * s1[a] / s0;
            }
        }
        if order >= Order::Hessian {
            for b in 0..k {
                let mb = s1[b] / s0;
                for a in b..k {
                    information[(a, b)] += d * (s2[(a, b)] / s0 - (s1[a] / s0) * mb);
                }
            }
        }
    }
    if order >= Order::Hessian {
        information.fill_upper_triangle_with_lower_triangle();
    }
    if !loglik.is_finite() || score.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalOverflow);
    }
    Ok(CoxEvaluation {
        loglik,
        score,
        information,
    })
}

fn check_dims(design: &DesignMatrix, beta: &[f64], data: &SurvivalDataset) -> Result<()> {
    if design.ncols() != beta.len() {
        return Err(Error::InvalidInput(format!(
            "beta has length {} but the design has {} columns",
            beta.len(),
            design.ncols()
        )));
    }
    if design.nrows() != data.len() {
        return Err(Error::InvalidInput(format!(
            "design has {} rows but the dataset has {} subjects",
            design.nrows(),
            data.len()
        )));
    }
    Ok(())
}

fn all_columns(design: &DesignMatrix) -> Vec<usize> {
    (0..design.ncols()).collect()
}

/// Breslow partial log-likelihood `sum_i d_i { w_i b - log sum_{t_j >= t_i} exp(w_j b) }`.
pub fn partial_log_likelihood(
    design: &DesignMatrix,
    beta: &[f64],
    data: &SurvivalDataset,
) -> Result<f64> {
    check_dims(design, beta, data)?;
    Ok(evaluate(design, data, beta, &all_columns(design), None, Order::Value)?.loglik)
}

/// Gradient of [`partial_log_likelihood`].
pub fn score(design: &DesignMatrix, beta: &[f64], data: &SurvivalDataset) -> Result<Vec<f64>> {
    check_dims(design, beta, data)?;
    let ev = evaluate(design, data, beta, &all_columns(design), None, Order::Gradient)?;
    Ok(ev.score.iter().copied().collect())
}

/// Negative Hessian of [`partial_log_likelihood`].
pub fn information(
    design: &DesignMatrix,
    beta: &[f64],
    data: &SurvivalDataset,
) -> Result<DMatrix<f64>> {
    check_dims(design, beta, data)?;
    Ok(evaluate(design, data, beta, &all_columns(design), None, Order::Hessian)?.information)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Convergence threshold on the max-norm of the restricted score.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            max_halvings: 30,
        }
    }
}

/// Result of an unconstrained Newton solve over a column subset.
#[derive(Debug, Clone)]
pub struct NewtonFit {
    /// Full-length coefficients; zero outside the active columns.
    pub beta: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub score_norm: f64,
    /// Set when the information matrix needed a ridge to factorize.
    pub ridged: bool,
}

// Rounding slack when comparing log-likelihoods between Newton iterates.
const LOGLIK_SLACK: f64 = 1e-11;

/// Maximizes the partial likelihood over the listed columns, holding every
/// other coefficient at zero. Components may go negative.
pub fn newton_fit(
    design: &DesignMatrix,
    data: &SurvivalDataset,
    active_columns: &[usize],
    init: &[f64],
    tol: f64,
) -> Result<NewtonFit> {
    check_dims(design, init, data)?;
    let opts = NewtonOptions {
        tol,
        ..NewtonOptions::default()
    };
    newton_solve(design, data, active_columns, init, None, &opts)
}

pub(crate) fn newton_solve(
    design: &DesignMatrix,
    data: &SurvivalDataset,
    cols: &[usize],
    init: &[f64],
    offset: Option<&[f64]>,
    opts: &NewtonOptions,
) -> Result<NewtonFit> {
    if cols.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let mut beta = vec![0.0; design.ncols()];
    for &c in cols {
        beta[c] = init[c];
    }
    let mut ev = evaluate(design, data, &beta, cols, offset, Order::Hessian)?;
    let mut ridged = false;
    let mut trace = vec![ev.loglik];
    for iteration in 0..=opts.max_iter {
        let score_norm = ev.score.amax();
        if score_norm <= opts.tol {
            return Ok(NewtonFit {
                beta,
                loglik: ev.loglik,
                iterations: iteration,
                score_norm,
                ridged,
            });
        }
        if iteration == opts.max_iter {
            break;
        }
        let (delta, used_ridge) = solve_spd(&ev.information, &ev.score);
        ridged |= used_ridge;

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut candidate = beta.clone();
            for (a, &c) in cols.iter().enumerate() {
                candidate[c] += step * delta[a];
            }
            match evaluate(design, data, &candidate, cols, offset, Order::Value) {
                Ok(trial) if trial.loglik >= ev.loglik - LOGLIK_SLACK => {
                    accepted = Some(candidate);
                    break;
                }
                Ok(_) | Err(Error::NumericalOverflow) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some(candidate) = accepted else {
            break;
        };
        beta = candidate;
        ev = evaluate(design, data, &beta, cols, offset, Order::Hessian)?;
        trace.push(ev.loglik);
    }
    Err(Error::NewtonNonConvergence {
        iterations: trace.len() - 1,
        score_norm: ev.score.amax(),
        loglik_trace: trace,
    })
}

/// Solves `info * x = rhs` for a symmetric positive semidefinite `info`,
/// adding a ridge of `1e-8 * trace / k` (escalated tenfold as needed) when the
/// Cholesky factorization fails.
pub(crate) fn solve_spd(info: &DMatrix<f64>, rhs: &DVector<f64>) -> (DVector<f64>, bool) {
    if let Some(chol) = info.clone().cholesky() {
        let x = chol.solve(rhs);
        if x.iter().all(|v| v.is_finite()) {
            return (x, false);
        }
    }
    let k = info.nrows().max(1) as f64;
    let trace = info.trace();
    let mut ridge = if trace > 0.0 { 1e-8 * trace / k } else { 1e-8 };
    loop {
        let mut m = info.clone();
        for d in 0..m.nrows() {
            m[(d, d)] += ridge;
        }
        if let Some(chol) = m.cholesky() {
            let x = chol.solve(rhs);
            if x.iter().all(|v| v.is_finite()) {
                return (x, true);
            }
        }
        ridge *= 10.0;
    }
}

/// Breslow cumulative baseline hazard as a right-continuous step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineHazard {
    pub jump_times: Vec<f64>,
    pub cumulative_values: Vec<f64>,
}

impl BaselineHazard {
    /// `Lambda(t)`: the sum of jumps at times `<= t`.
    pub fn cumulative_at(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative_values[k - 1]
        }
    }

    /// Jump sizes at each jump time.
    pub fn jumps(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative_values
            .iter()
            .map(|&c| {
                let j = c - prev;
                prev = c;
                j
            })
            .collect()
    }
}

/// Breslow estimator: the jump at a distinct event time `t` is
/// `d(t) / sum_{t_j >= t} exp(eta_j)`.
pub fn breslow_baseline(data: &SurvivalDataset, eta: &[f64]) -> Result<BaselineHazard> {
    breslow_from_parts(&data.times(), &data.events(), eta)
}

/// [`breslow_baseline`] on raw vectors; accepts samples without events.
pub fn breslow_from_parts(times: &[f64], events: &[bool], eta: &[f64]) -> Result<BaselineHazard> {
    if times.len() != events.len() || times.len() != eta.len() {
        return Err(Error::InvalidInput(
            "times, events and eta must have equal length".into(),
        ));
    }
    let (order, groups) = risk_order(times.iter().copied());
    let mut center = f64::NEG_INFINITY;
    let mut s0 = 0.0;
    let mut jumps = Vec::new();
    for group in groups {
        let group_max = order[group.clone()]
            .iter()
            .map(|&i| eta[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if group_max > center {
            s0 *= (center - group_max).exp();
            center = group_max;
        }
        let mut d = 0usize;
        for &i in &order[group.clone()] {
            s0 += (eta[i] - center).exp();
            d += usize::from(events[i]);
        }
        if d > 0 {
            let jump = d as f64 * (-center - s0.ln()).exp();
            if !jump.is_finite() {
                return Err(Error::NumericalOverflow);
            }
            jumps.push((times[order[group.start]], jump));
        }
    }
    jumps.reverse();
    let mut total = 0.0;
    let (jump_times, cumulative_values) = jumps
        .into_iter()
        .map(|(t, j)| {
            total += j;
            (t, total)
        })
        .unzip();
    Ok(BaselineHazard {
        jump_times,
        cumulative_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(times: &[f64], events: &[bool], cols: &[&[f64]]) -> SurvivalDataset {
        let subjects = times
            .iter()
            .zip(events)
            .enumerate()
            .map(|(r, (&t, &e))| Subject::new(t, e, cols.iter().map(|c| c[r]).collect()))
            .collect();
        let names = (0..cols.len()).map(|c| format!("x{c}")).collect();
        SurvivalDataset::new(subjects, names).unwrap()
    }

    fn design(cols: &[&[f64]]) -> DesignMatrix {
        let owned: Vec<Vec<f64>> = cols.iter().map(|c| c.to_vec()).collect();
        let names: Vec<String> = (0..cols.len()).map(|c| format!("x{c}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        DesignMatrix::from_columns(&owned, &refs).unwrap()
    }

    #[test]
    fn two_subjects_at_zero() {
        let w: &[f64] = &[0.0, 0.0];
        let data = dataset(&[1.0, 2.0], &[true, true], &[w]);
        let ll = partial_log_likelihood(&design(&[w]), &[0.0], &data).unwrap();
        assert!((ll + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn three_subjects_hand_value() {
        let w: &[f64] = &[1.0, 0.0, -1.0];
        let data = dataset(&[1.0, 2.0, 3.0], &[true, false, true], &[w]);
        let ll = partial_log_likelihood(&design(&[w]), &[1.0], &data).unwrap();
        let e = std::f64::consts::E;
        let expected = 1.0 - (e + 1.0 + 1.0 / e).ln();
        assert!((ll - expected).abs() < 1e-14, "{ll} vs {expected}");
    }

    #[test]
    fn zero_beta_counts_risk_sets_with_ties() {
        let w: &[f64] = &[0.3, -1.0, 2.0, 0.5, 0.1];
        let times = [2.0, 2.0, 1.0, 3.0, 2.0];
        let events = [true, true, false, true, false];
        let data = dataset(&times, &events, &[w]);
        let ll = partial_log_likelihood(&design(&[w]), &[0.0], &data).unwrap();
        // Risk sets: t=2 -> {0,1,3,4} for both tied events, t=3 -> {3}.
        let expected = -(2.0 * 4f64.ln() + 1f64.ln());
        assert!((ll - expected).abs() < 1e-14);
    }

    #[test]
    fn score_hand_value_and_constant_column() {
        let w: &[f64] = &[1.0, 0.0];
        let c: &[f64] = &[3.0, 3.0];
        let data = dataset(&[1.0, 2.0], &[true, true], &[w, c]);
        let s = score(&design(&[w, c]), &[0.0, 0.0], &data).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert!(s[1].abs() < 1e-15);
        let s = score(&design(&[w, c]), &[0.7, -2.0], &data).unwrap();
        assert!(s[1].abs() < 1e-14);
    }

    #[test]
    fn zero_column_information_is_zero() {
        let w: &[f64] = &[0.0, 0.0, 0.0];
        let data = dataset(&[1.0, 2.0, 3.0], &[true, true, false], &[w]);
        let info = information(&design(&[w]), &[0.0], &data).unwrap();
        assert_eq!(info.shape(), (1, 1));
        assert_eq!(info[(0, 0)], 0.0);
    }

    #[test]
    fn huge_predictors_do_not_overflow() {
        let w: &[f64] = &[400.0, 0.0, -400.0];
        let data = dataset(&[1.0, 2.0, 3.0], &[true, true, true], &[w]);
        let ll = partial_log_likelihood(&design(&[w]), &[2.0], &data).unwrap();
        assert!(ll.is_finite());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let w: &[f64] = &[1.0, 0.0];
        let data = dataset(&[1.0, 2.0], &[true, true], &[w]);
        assert!(partial_log_likelihood(&design(&[w]), &[0.0, 1.0], &data).is_err());
    }

    #[test]
    fn newton_rejects_empty_active_set() {
        let w: &[f64] = &[1.0, 0.0];
        let data = dataset(&[1.0, 2.0], &[true, true], &[w]);
        let err = newton_fit(&design(&[w]), &data, &[], &[0.0], 1e-8).unwrap_err();
        assert!(matches!(err, Error::EmptyActiveSet));
    }

    #[test]
    fn newton_keeps_inactive_columns_at_zero() {
        let a: &[f64] = &[0.5, -1.0, 2.0, 0.0, 1.0, -0.3];
        let b: &[f64] = &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let data = dataset(
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            &[true, false, true, true, true, false],
            &[a, b],
        );
        let fit = newton_fit(&design(&[a, b]), &data, &[0], &[0.0, 0.0], 1e-10).unwrap();
        assert_eq!(fit.beta[1], 0.0);
        assert!(fit.score_norm <= 1e-10);
    }

    #[test]
    fn empty_dataset_and_no_events_rejected() {
        assert!(SurvivalDataset::new(vec![], vec![]).is_err());
        let s = vec![Subject::new(1.0, false, vec![]), Subject::new(2.0, false, vec![])];
        assert!(SurvivalDataset::new(s, vec![]).is_err());
        let s = vec![Subject::new(0.0, true, vec![])];
        assert!(SurvivalDataset::new(s, vec![]).is_err());
    }

    #[test]
    fn breslow_two_subjects() {
        let data = dataset(&[1.0, 2.0], &[true, true], &[]);
        let base = breslow_baseline(&data, &[0.0, 0.0]).unwrap();
        assert_eq!(base.jump_times, vec![1.0, 2.0]);
        assert!((base.cumulative_values[0] - 0.5).abs() < 1e-15);
        assert!((base.cumulative_values[1] - 1.5).abs() < 1e-15);
        assert_eq!(base.cumulative_at(0.5), 0.0);
        assert_eq!(base.cumulative_at(1.0), 0.5);
        assert_eq!(base.cumulative_at(7.0), 1.5);
    }

    #[test]
    fn breslow_without_events_is_zero() {
        let base = breslow_from_parts(&[1.0, 2.0], &[false, false], &[0.0, 0.0]).unwrap();
        assert!(base.jump_times.is_empty());
        assert_eq!(base.cumulative_at(10.0), 0.0);
    }

    #[test]
    fn breslow_shift_scales_by_exp_minus_c() {
        let times = [1.0, 2.0, 2.0, 3.5, 4.0];
        let events = [true, true, false, true, false];
        let eta = [0.2, -0.4, 1.0, 0.0, 0.3];
        let c = 1.7;
        let shifted: Vec<f64> = eta.iter().map(|e| e + c).collect();
        let a = breslow_from_parts(&times, &events, &eta).unwrap();
        let b = breslow_from_parts(&times, &events, &shifted).unwrap();
        for (x, y) in a.cumulative_values.iter().zip(&b.cumulative_values) {
            assert!((y - x * (-c).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn breslow_tied_events_share_denominator() {
        let base = breslow_from_parts(&[1.0, 1.0, 2.0], &[true, true, true], &[0.0; 3]).unwrap();
        assert_eq!(base.jump_times, vec![1.0, 2.0]);
        assert!((base.cumulative_values[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((base.jumps()[1] - 1.0).abs() < 1e-15);
    }
}
