//! JSON model specification read by `srcox fit`.

use serde::{Deserialize, Serialize};
use srcox::{FitOptions, KnotStrategy, NewtonOptions, ShapeType};

fn default_knots() -> KnotStrategy {
    KnotStrategy::OrderStatistics
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateSpec {
    pub name: String,
    pub shape: ShapeType,
    /// Ignored for linear covariates.
    #[serde(default = "default_knots")]
    pub knots: KnotStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub kkt_tol: f64,
    pub newton_tol: f64,
    pub max_newton_iter: usize,
    pub max_outer: Option<usize>,
    pub lr_intervals: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let fit = FitOptions::default();
        Self {
            kkt_tol: fit.kkt_tol,
            newton_tol: fit.newton.tol,
            max_newton_iter: fit.newton.max_iter,
            max_outer: None,
            lr_intervals: true,
        }
    }
}

impl SolverOptions {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            kkt_tol: self.kkt_tol,
            newton: NewtonOptions {
                tol: self.newton_tol,
                max_iter: self.max_newton_iter,
                ..NewtonOptions::default()
            },
            max_outer: self.max_outer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpecFile {
    pub covariates: Vec<CovariateSpec>,
    #[serde(default)]
    pub options: SolverOptions,
}

impl ModelSpecFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let spec: ModelSpecFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if spec.covariates.is_empty() {
            return Err("spec declares no covariates".into());
        }
        let mut seen = std::collections::HashSet::new();
        for c in &spec.covariates {
            if !seen.insert(c.name.as_str()) {
                return Err(format!("covariate `{}` declared twice", c.name));
            }
        }
        Ok(spec)
    }

    pub fn names(&self) -> Vec<&str> {
        self.covariates.iter().map(|c| c.name.as_str()).collect()
    }

    /// Core model spec over a dataset whose covariates are laid out in
    /// declaration order.
    pub fn model_spec(&self) -> srcox::ModelSpec {
        srcox::ModelSpec::new(
            self.covariates
                .iter()
                .enumerate()
                .map(|(col, c)| {
                    if c.shape == ShapeType::Linear {
                        srcox::Term::linear(c.name.clone(), col)
                    } else {
                        srcox::Term::shaped(c.name.clone(), col, c.shape, c.knots.clone())
                    }
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_spec() {
        let s = ModelSpecFile::parse(
            r#"{"covariates":[{"name":"age","shape":"l"},{"name":"bili","shape":"ccvin","knots":"quantiles:10"}]}"#,
        )
        .unwrap();
        assert_eq!(s.covariates[1].knots, KnotStrategy::Quantiles(10));
        assert_eq!(s.covariates[0].knots, KnotStrategy::OrderStatistics);
        assert!(s.options.lr_intervals);
        let m = s.model_spec();
        assert_eq!(m.terms[1].column, 1);
    }

    #[test]
    fn rejects_unknown_label_with_hint() {
        let err = ModelSpecFile::parse(r#"{"covariates":[{"name":"x","shape":"convex"}]}"#)
            .unwrap_err();
        assert!(err.contains("cvx") && err.contains("ccvde"), "{err}");
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(ModelSpecFile::parse(r#"{"covariates":[]}"#).is_err());
        assert!(ModelSpecFile::parse(
            r#"{"covariates":[{"name":"x","shape":"l"},{"name":"x","shape":"in"}]}"#
        )
        .is_err());
    }
}
