//! Weibull proportional-hazards data generator and the Monte Carlo harness
//! comparing the shape-restricted fit with an all-linear Cox fit.
//!
//! Data follow `lambda(t | z, x) = 2t exp(2 z b + 2 r(x))` with `b = -1`,
//! `z ~ N(0, 1)`, right-censored by `C ~ U(0, 5)`. Because the factor 2 is
//! folded into the predictor, the fitted coefficient on `z` estimates
//! `2b = -2` directly and the fitted component estimates `2 r(x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::active_set::{fit, FitOptions, FitResult};
use crate::basis::{ComponentFunction, KnotStrategy, ModelSpec, ShapeType, Term};
use crate::error::{Error, Result};
use crate::survival::{Subject, SurvivalDataset};

/// True coefficient on `z` used by the generator (before doubling).
pub const BETA_Z: f64 = -1.0;
/// Upper end of the uniform censoring distribution.
pub const CENSOR_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateDistribution {
    Exponential,
    StandardNormal,
}

/// The true effect `r(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectFunction {
    /// `-3 log(x)`
    NegThreeLog,
    /// `-x^2`
    NegSquare,
    /// `-|x|`
    NegAbs,
    /// `-x`; the doubled predictor effect is `-2x`.
    NegX,
}

impl EffectFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            EffectFunction::NegThreeLog => -3.0 * x.ln(),
            EffectFunction::NegSquare => -x * x,
            EffectFunction::NegAbs => -x.abs(),
            EffectFunction::NegX => -x,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            EffectFunction::NegThreeLog => "-3log(x)",
            EffectFunction::NegSquare => "-x^2",
            EffectFunction::NegAbs => "-|x|",
            EffectFunction::NegX => "-x",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: u8,
    pub x_distribution: CovariateDistribution,
    pub r_function: EffectFunction,
    /// Shape declared for `x` in the shape-restricted fit.
    pub shape: ShapeType,
    pub knots: KnotStrategy,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// The seven simulation settings (covariate law, true effect, declared shape).
    pub fn experiment(id: u8, n: usize, replications: usize, seed: u64) -> Result<Self> {
        use CovariateDistribution::*;
        use EffectFunction::*;
        let (x_distribution, r_function, shape) = match id {
            1 => (Exponential, NegThreeLog, ShapeType::ConvexDecreasing),
            2 => (Exponential, NegThreeLog, ShapeType::Decreasing),
            3 => (StandardNormal, NegSquare, ShapeType::Concave),
            4 => (StandardNormal, NegSquare, ShapeType::Convex),
            5 => (StandardNormal, NegAbs, ShapeType::Concave),
            6 => (StandardNormal, NegX, ShapeType::Concave),
            7 => (StandardNormal, NegX, ShapeType::Decreasing),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "experiment id must be in 1..=7, got {id}"
                )))
            }
        };
        if n < 2 {
            return Err(Error::InvalidInput("sample size must be at least 2".into()));
        }
        Ok(Self {
            id,
            x_distribution,
            r_function,
            shape,
            knots: KnotStrategy::Quantiles(10),
            n,
            replications,
            seed,
        })
    }

    pub fn with_knots(mut self, knots: KnotStrategy) -> Self {
        self.knots = knots;
        self
    }

    pub fn with_shape(mut self, shape: ShapeType) -> Self {
        self.shape = shape;
        self
    }

    /// Shape-restricted spec: `z` linear, `x` with the declared shape.
    pub fn sr_spec(&self) -> ModelSpec {
        let x_term = if self.shape == ShapeType::Linear {
            Term::linear("x", 1)
        } else {
            Term::shaped("x", 1, self.shape, self.knots.clone())
        };
        ModelSpec::new(vec![Term::linear("z", 0), x_term])
    }

    /// Standard Cox spec: both covariates linear.
    pub fn cox_spec(&self) -> ModelSpec {
        ModelSpec::new(vec![Term::linear("z", 0), Term::linear("x", 1)])
    }
}

/// Per-replication generator: ChaCha8 keyed by the seed, one stream per
/// replication, so replications are reproducible in any execution order.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Failure time by inverse transform under `Lambda_0(t) = t^2`.
pub fn weibull_failure_time(eta: f64, u: f64) -> f64 {
    (-u.ln() / eta.exp()).sqrt()
}

/// One simulated sample with covariates `[z, x]`.
pub fn generate_dataset(config: &ExperimentConfig, replication: u64) -> Result<SurvivalDataset> {
    let mut rng = replication_rng(config.seed, replication);
    let mut subjects = Vec::with_capacity(config.n);
    while subjects.len() < config.n {
        let z: f64 = rng.sample(StandardNormal);
        let x: f64 = match config.x_distribution {
            CovariateDistribution::Exponential => {
                let x: f64 = Exp1.sample(&mut rng);
                if x <= 0.0 {
                    continue;
                }
                x
            }
            CovariateDistribution::StandardNormal => rng.sample(StandardNormal),
        };
        let eta = 2.0 * z * BETA_Z + 2.0 * config.r_function.eval(x);
        // 1 - U lies in (0, 1], keeping the logarithm finite.
        let u = 1.0 - rng.gen::<f64>();
        let failure = weibull_failure_time(eta, u);
        let censor = CENSOR_MAX * rng.gen::<f64>();
        if !(failure > 0.0 && censor > 0.0) {
            continue;
        }
        let event = failure <= censor;
        subjects.push(Subject::new(failure.min(censor), event, vec![z, x]));
    }
    SurvivalDataset::new(subjects, vec!["z".into(), "x".into()])
}

/// Fitted `z` coefficients from one replication; `None` marks a failed fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub replication: u64,
    pub sr_cox: Option<f64>,
    pub cox: Option<f64>,
    pub censored_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub mean: f64,
    pub std: f64,
    pub successes: usize,
    pub failures: usize,
}

impl MethodSummary {
    fn from_estimates(values: impl Iterator<Item = Option<f64>>) -> Self {
        let mut ok = Vec::new();
        let mut failures = 0;
        for v in values {
            match v {
                Some(v) => ok.push(v),
                None => failures += 1,
            }
        }
        let n = ok.len();
        let mean = if n == 0 { f64::NAN } else { ok.iter().sum::<f64>() / n as f64 };
        let std = if n < 2 {
            f64::NAN
        } else {
            (ok.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self {
            mean,
            std,
            successes: n,
            failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub sr_cox: MethodSummary,
    pub cox: MethodSummary,
    pub mean_censored_fraction: f64,
    pub outcomes: Vec<ReplicationOutcome>,
}

impl ExperimentSummary {
    /// Aligned text table, one row per method.
    pub fn to_table(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "experiment {} | x ~ {:?} | r(x) = {} | declared shape {} | knots {} | n = {} | reps = {} | seed = {}\n",
            c.id,
            c.x_distribution,
            c.r_function.describe(),
            c.shape,
            c.knots,
            c.n,
            c.replications,
            c.seed
        );
        out.push_str(&format!(
            "{:<8} {:>10} {:>10} {:>6} {:>8}\n",
            "method", "mean", "std", "ok", "failed"
        ));
        for (name, s) in [("SR-Cox", &self.sr_cox), ("Cox", &self.cox)] {
            out.push_str(&format!(
                "{:<8} {:>10.4} {:>10.4} {:>6} {:>8}\n",
                name, s.mean, s.std, s.successes, s.failures
            ));
        }
        out.push_str(&format!(
            "mean censored fraction {:.4}\n",
            self.mean_censored_fraction
        ));
        out
    }
}

/// Runs every replication, handing each successful shape-restricted fit to
/// `inspect` (used by tests to audit solver certificates).
pub fn run_experiment_with<F>(
    config: &ExperimentConfig,
    options: &FitOptions,
    inspect: F,
) -> Result<ExperimentSummary>
where
    F: Fn(u64, &SurvivalDataset, &FitResult) + Sync,
{
    if config.replications == 0 {
        return Err(Error::InvalidInput("replications must be at least 1".into()));
    }
    let sr_spec = config.sr_spec();
    let cox_spec = config.cox_spec();
    let outcomes: Vec<ReplicationOutcome> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let Ok(data) = generate_dataset(config, rep) else {
                return ReplicationOutcome {
                    replication: rep,
                    sr_cox: None,
                    cox: None,
                    censored_fraction: f64::NAN,
                };
            };
            let censored = 1.0 - data.event_count() as f64 / data.len() as f64;
            let sr_cox = fit(&data, &sr_spec, options).ok().and_then(|f| {
                inspect(rep, &data, &f);
                f.converged.then(|| f.coefficients[0])
            });
            let cox = fit(&data, &cox_spec, options)
                .ok()
                .and_then(|f| f.converged.then(|| f.coefficients[0]));
            ReplicationOutcome {
                replication: rep,
                sr_cox,
                cox,
                censored_fraction: censored,
            }
        })
        .collect();
    let sr_cox = MethodSummary::from_estimates(outcomes.iter().map(|o| o.sr_cox));
    let cox = MethodSummary::from_estimates(outcomes.iter().map(|o| o.cox));
    let fractions: Vec<f64> = outcomes
        .iter()
        .map(|o| o.censored_fraction)
        .filter(|f| f.is_finite())
        .collect();
    Ok(ExperimentSummary {
        config: config.clone(),
        sr_cox,
        cox,
        mean_censored_fraction: fractions.iter().sum::<f64>() / fractions.len().max(1) as f64,
        outcomes,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    run_experiment_with(config, &FitOptions::default(), |_, _, _| {})
}

/// One row of an exported component curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    /// Centered component value.
    pub value: f64,
    /// The row sits at a knot with nonzero weight.
    pub is_knot: bool,
    /// Outside the training range of the covariate.
    pub extrapolated: bool,
}

/// Evaluates the centered component on `grid`, with every used knot inside
/// the grid's range inserted as a flagged row.
pub fn export_component_curve(component: &ComponentFunction, grid: &[f64]) -> Vec<CurvePoint> {
    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mut xs: Vec<(f64, bool)> = grid.iter().map(|&x| (x, false)).collect();
    for k in component.used_knots() {
        if k >= lo && k <= hi {
            match xs.iter_mut().find(|(x, _)| *x == k) {
                Some(slot) => slot.1 = true,
                None => xs.push((k, true)),
            }
        }
    }
    xs.sort_by(|a, b| a.0.total_cmp(&b.0));
    xs.into_iter()
        .map(|(x, is_knot)| CurvePoint {
            x,
            value: component.value(x),
            is_knot,
            extrapolated: component.is_extrapolated(x),
        })
        .collect()
}

/// `points` evenly spaced values on `[min, max]`.
pub fn linspace(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..points)
            .map(|k| min + (max - min) * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_transform_identity() {
        assert!((weibull_failure_time(0.0, (-1.0f64).exp()) - 1.0).abs() < 1e-15);
        // Lambda(T) exp(eta) = -log U
        let t = weibull_failure_time(0.8, 0.3);
        assert!((t * t * 0.8f64.exp() + 0.3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn config_table() {
        let shapes: Vec<&str> = (1..=7)
            .map(|id| ExperimentConfig::experiment(id, 10, 1, 0).unwrap().shape.label())
            .collect();
        assert_eq!(shapes, ["cvxde", "de", "ccv", "cvx", "ccv", "ccv", "de"]);
        assert!(ExperimentConfig::experiment(0, 10, 1, 0).is_err());
        assert!(ExperimentConfig::experiment(8, 10, 1, 0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let c = ExperimentConfig::experiment(3, 200, 1, 42).unwrap();
        let a = generate_dataset(&c, 5).unwrap();
        let b = generate_dataset(&c, 5).unwrap();
        assert_eq!(a.subjects(), b.subjects());
        let other = generate_dataset(&c, 6).unwrap();
        assert_ne!(a.subjects(), other.subjects());
        assert!(a.subjects().iter().all(|s| s.time > 0.0 && s.time <= CENSOR_MAX));
    }

    #[test]
    fn exponential_draws_are_positive() {
        let c = ExperimentConfig::experiment(1, 2000, 1, 9).unwrap();
        let d = generate_dataset(&c, 0).unwrap();
        assert!(d.covariate(1).iter().all(|&x| x > 0.0));
    }

    #[test]
    fn zero_component_exports_zeros() {
        let comp = ComponentFunction {
            covariate_index: 0,
            name: "x".into(),
            column: 1,
            shape: ShapeType::Concave,
            knots: vec![-1.0, 0.0, 1.0],
            weights: vec![0.0; 3],
            centering_constant: 0.0,
            support: (-1.0, 1.0),
        };
        let rows = export_component_curve(&comp, &linspace(-2.0, 2.0, 9));
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().all(|r| r.value == 0.0 && !r.is_knot));
        assert!(rows[0].extrapolated && !rows[4].extrapolated);
    }

    #[test]
    fn knot_rows_sit_on_knots() {
        let comp = ComponentFunction {
            covariate_index: 0,
            name: "x".into(),
            column: 1,
            shape: ShapeType::Concave,
            knots: vec![-1.0, 0.3, 1.0],
            weights: vec![0.5, 1.0, 0.0],
            centering_constant: 0.0,
            support: (-1.0, 1.0),
        };
        let rows = export_component_curve(&comp, &linspace(-2.0, 2.0, 5));
        let flagged: Vec<f64> = rows.iter().filter(|r| r.is_knot).map(|r| r.x).collect();
        assert_eq!(flagged, vec![-1.0, 0.3]);
        assert!(rows.windows(2).all(|w| w[0].x <= w[1].x));
    }

    #[test]
    fn summary_statistics() {
        let s = MethodSummary::from_estimates([Some(1.0), None, Some(3.0)].into_iter());
        assert_eq!(s.mean, 2.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!((s.successes, s.failures), (2, 1));
    }
}
