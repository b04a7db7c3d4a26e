//! Shared helpers for the integration tests: random instances, an
//! independent quadratic-time likelihood, and post-fit audits.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srcox::{
    expand_design, score, ComponentFunction, DesignMatrix, FitResult, ModelSpec, ShapeType,
    Subject, SurvivalDataset,
};

/// Random right-censored data with `p` covariates. Times are rounded to one
/// decimal so tied event times occur.
pub fn random_dataset(seed: u64, n: usize, p: usize) -> SurvivalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let subjects: Vec<Subject> = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let eta = 0.5 * x.iter().sum::<f64>();
                let u: f64 = rng.gen_range(1e-6..1.0);
                let t = (-u.ln() / eta.exp()).sqrt();
                let c = rng.gen_range(0.0..3.0);
                let time = ((t.min(c) * 10.0).round() / 10.0).max(0.1);
                Subject::new(time, t <= c, x)
            })
            .collect();
        let names = (0..p).map(|j| format!("x{j}")).collect();
        if let Ok(d) = SurvivalDataset::new(subjects, names) {
            if d.event_count() >= 2 {
                return d;
            }
        }
    }
}

/// Design whose columns are the raw covariates.
pub fn raw_design(data: &SurvivalDataset) -> DesignMatrix {
    let cols: Vec<Vec<f64>> = (0..data.covariate_names().len())
        .map(|c| data.covariate(c))
        .collect();
    let names: Vec<&str> = data.covariate_names().iter().map(String::as_str).collect();
    DesignMatrix::from_columns(&cols, &names).unwrap()
}

pub fn design_rows(design: &DesignMatrix) -> Vec<Vec<f64>> {
    (0..design.nrows())
        .map(|i| (0..design.ncols()).map(|c| design.values()[(i, c)]).collect())
        .collect()
}

/// Breslow partial log-likelihood and gradient by direct double sums.
pub fn naive_loglik_grad(rows: &[Vec<f64>], data: &SurvivalDataset, beta: &[f64]) -> (f64, Vec<f64>) {
    let subjects = data.subjects();
    let eta: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(beta).map(|(a, b)| a * b).sum())
        .collect();
    let mut ll = 0.0;
    let mut grad = vec![0.0; beta.len()];
    for (i, si) in subjects.iter().enumerate() {
        if !si.event {
            continue;
        }
        let risk: Vec<usize> = (0..subjects.len())
            .filter(|&j| subjects[j].time >= si.time)
            .collect();
        let m = risk.iter().map(|&j| eta[j]).fold(f64::NEG_INFINITY, f64::max);
        let s0: f64 = risk.iter().map(|&j| (eta[j] - m).exp()).sum();
        ll += eta[i] - m - s0.ln();
        for (c, g) in grad.iter_mut().enumerate() {
            let s1: f64 = risk.iter().map(|&j| rows[j][c] * (eta[j] - m).exp()).sum();
            *g += rows[i][c] - s1 / s0;
        }
    }
    (ll, grad)
}

/// Bound-constrained maximizer by spectral projected gradient ascent
/// (Barzilai-Borwein steps, nonmonotone Armijo test over the last 10
/// values). Returns `(beta, loglik, projected gradient norm)`.
pub fn projected_gradient_max(
    rows: &[Vec<f64>],
    data: &SurvivalDataset,
    mask: &[bool],
    max_iter: usize,
) -> (Vec<f64>, f64, f64) {
    let project = |b: &mut Vec<f64>| {
        for (v, &m) in b.iter_mut().zip(mask) {
            if m && *v < 0.0 {
                *v = 0.0;
            }
        }
    };
    let pg_norm = |b: &[f64], g: &[f64]| {
        b.iter()
            .zip(g)
            .zip(mask)
            .map(|((&v, &gi), &m)| if m && v <= 0.0 { gi.max(0.0) } else { gi.abs() })
            .fold(0.0, f64::max)
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut beta = vec![0.0; mask.len()];
    let (mut ll, mut grad) = naive_loglik_grad(rows, data, &beta);
    let mut history = vec![ll];
    let mut bb = 1.0;
    for _ in 0..max_iter {
        if pg_norm(&beta, &grad) < 1e-10 {
            break;
        }
        let mut dir: Vec<f64> = beta.iter().zip(&grad).map(|(b, g)| b + bb * g).collect();
        project(&mut dir);
        for (d, b) in dir.iter_mut().zip(&beta) {
            *d -= b;
        }
        let reference = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let slope = dot(&grad, &dir);
        let mut t = 1.0;
        let (cand, cl, cg) = loop {
            let cand: Vec<f64> = beta.iter().zip(&dir).map(|(b, d)| b + t * d).collect();
            let (cl, cg) = naive_loglik_grad(rows, data, &cand);
            if cl >= reference + 1e-4 * t * slope || t < 1e-12 {
                break (cand, cl, cg);
            }
            t *= 0.5;
        };
        let s: Vec<f64> = cand.iter().zip(&beta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad.iter().zip(&cg).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        bb = if sy > 0.0 { (dot(&s, &s) / sy).clamp(1e-10, 1e10) } else { 1e10 };
        beta = cand;
        ll = cl;
        grad = cg;
        history.push(ll);
        if history.len() > 10 {
            history.remove(0);
        }
    }
    let norm = pg_norm(&beta, &grad);
    (beta, ll, norm)
}

/// Checks the optimality certificate of a converged fit: zero score on the
/// working set, nonpositive score and zero weight on excluded bounded
/// columns, feasibility everywhere.
pub fn check_kkt(data: &SurvivalDataset, spec: &ModelSpec, fit: &FitResult) -> Result<(), String> {
    let (design, expansion) = expand_design(data, spec).map_err(|e| e.to_string())?;
    let g = score(&design, &fit.coefficients, data).map_err(|e| e.to_string())?;
    let scale = 1.0 + g.iter().fold(0.0f64, |a, v| a.max(v.abs())) * 1e-6;
    for (c, (&b, &gc)) in fit.coefficients.iter().zip(&g).enumerate() {
        let bounded = expansion.constraint_mask[c];
        if bounded && b < 0.0 {
            return Err(format!("column {c}: negative bounded weight {b}"));
        }
        if fit.working_set.contains(c) {
            if gc.abs() > 1e-6 * scale {
                return Err(format!("column {c} in working set has score {gc}"));
            }
        } else {
            if !bounded {
                return Err(format!("unbounded column {c} left the working set"));
            }
            if b != 0.0 {
                return Err(format!("excluded column {c} has weight {b}"));
            }
            if gc > 1e-6 * scale {
                return Err(format!("excluded column {c} has positive score {gc}"));
            }
        }
    }
    Ok(())
}

pub fn check_descent(fit: &FitResult) -> Result<(), String> {
    let rise = fit.trace.max_objective_increase();
    if rise > 1e-10 {
        Err(format!("objective rose by {rise}"))
    } else {
        Ok(())
    }
}

/// Declared-shape compliance on a 1000-point grid over the training range.
pub fn check_shape(c: &ComponentFunction) -> Result<(), String> {
    let (lo, hi) = c.support;
    let xs: Vec<f64> = (0..1000).map(|i| lo + (hi - lo) * i as f64 / 999.0).collect();
    let v: Vec<f64> = xs.iter().map(|&x| c.value(x)).collect();
    let tol = 1e-9 * (1.0 + v.iter().fold(0.0f64, |a, y| a.max(y.abs())));
    let d1: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let d2: Vec<f64> = d1.windows(2).map(|w| w[1] - w[0]).collect();
    let fail = |what: &str| Err(format!("{} ({}) is not {what}", c.name, c.shape));
    if c.shape.is_increasing() && d1.iter().any(|&d| d < -tol) {
        return fail("nondecreasing");
    }
    if c.shape.is_decreasing() && d1.iter().any(|&d| d > tol) {
        return fail("nonincreasing");
    }
    // Second differences straddling a kink on a uniform grid still carry the
    // sign of the slope change.
    if c.shape.is_convex() && d2.iter().any(|&d| d < -tol) {
        return fail("convex");
    }
    if c.shape.is_concave() && d2.iter().any(|&d| d > tol) {
        return fail("concave");
    }
    if c.shape.is_step() {
        // Piecewise constant: value changes only across knots.
        for (w, x) in v.windows(2).zip(xs.windows(2)) {
            if (w[1] - w[0]).abs() > tol && !c.knots.iter().any(|&k| k > x[0] && k <= x[1]) {
                return fail("piecewise constant between knots");
            }
        }
    }
    Ok(())
}

/// Every certificate a fit in the test suite must carry.
pub fn audit(data: &SurvivalDataset, spec: &ModelSpec, fit: &FitResult) -> Result<(), String> {
    check_descent(fit)?;
    if fit.converged {
        check_kkt(data, spec, fit)?;
    }
    for c in fit.components() {
        check_shape(c)?;
    }
    Ok(())
}

/// Spec with `x0` linear and every other covariate shaped.
pub fn mixed_spec(p: usize, shapes: &[ShapeType], knots: srcox::KnotStrategy) -> ModelSpec {
    let mut terms = vec![srcox::Term::linear("x0", 0)];
    for c in 1..p {
        terms.push(srcox::Term::shaped(
            format!("x{c}"),
            c,
            shapes[(c - 1) % shapes.len()],
            knots.clone(),
        ));
    }
    ModelSpec::new(terms)
}

/// Compares the active-set optimum against [`projected_gradient_max`] on
/// `count` random instances (n <= 40, P <= 8). Returns the largest
/// log-likelihood gap.
pub fn oracle_equivalence(count: usize) -> Result<f64, String> {
    use srcox::{fit, FitOptions, KnotStrategy};
    let shapes = [
        ShapeType::Increasing,
        ShapeType::Decreasing,
        ShapeType::Convex,
        ShapeType::ConcaveIncreasing,
        ShapeType::ConvexDecreasing,
        ShapeType::Concave,
        ShapeType::ConvexIncreasing,
        ShapeType::ConcaveDecreasing,
    ];
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut seed = 0u64;
    while checked < count {
        seed += 1;
        if seed > 10 * count as u64 {
            return Err(format!("only {checked} usable instances"));
        }
        let n = 25 + (seed as usize * 7) % 16;
        let data = random_dataset(1000 + seed, n, 2);
        let spec = mixed_spec(2, &[shapes[seed as usize % shapes.len()]], KnotStrategy::Quantiles(6));
        let (design, expansion) = expand_design(&data, &spec).map_err(|e| e.to_string())?;
        if design.ncols() > 8 {
            continue;
        }
        let fitted = fit(&data, &spec, &FitOptions::default()).map_err(|e| e.to_string())?;
        // Instances whose supremum is approached only at infinity have no
        // optimum to compare.
        if !fitted.converged || fitted.coefficients.iter().any(|b| b.abs() > 10.0) {
            continue;
        }
        audit(&data, &spec, &fitted).map_err(|e| format!("seed {seed}: {e}"))?;
        let rows = design_rows(&design);
        let (beta, ll, pg) = projected_gradient_max(&rows, &data, &expansion.constraint_mask, 20_000);
        if pg > 1e-6 {
            continue;
        }
        let gap = (ll - fitted.log_likelihood).abs();
        if gap >= 1e-5 || ll > fitted.log_likelihood + 1e-7 {
            return Err(format!(
                "seed {seed}: oracle {ll} vs active set {}",
                fitted.log_likelihood
            ));
        }
        let eta_a = design.linear_predictor(&fitted.coefficients, None);
        let eta_b = design.linear_predictor(&beta, None);
        let spread = eta_a.iter().zip(&eta_b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if spread >= 1e-2 {
            return Err(format!("seed {seed}: predictors differ by {spread}"));
        }
        worst = worst.max(gap);
        checked += 1;
    }
    Ok(worst)
}

/// All-linear spec against a plain Newton fit of the raw design; returns the
/// largest coefficient difference.
pub fn all_linear_gap(seed: u64) -> Result<f64, String> {
    use srcox::{fit, newton_fit, FitOptions, Term};
    let data = random_dataset(seed, 120, 3);
    let spec = ModelSpec::new((0..3).map(|c| Term::linear(format!("x{c}"), c)).collect());
    let fitted = fit(&data, &spec, &FitOptions::default()).map_err(|e| e.to_string())?;
    audit(&data, &spec, &fitted)?;
    let cox = newton_fit(&raw_design(&data), &data, &[0, 1, 2], &[0.0; 3], 1e-8)
        .map_err(|e| e.to_string())?;
    let coef = (0..3)
        .map(|c| (fitted.coefficients[c] - cox.beta[c]).abs())
        .fold(0.0, f64::max);
    Ok(coef.max((fitted.log_likelihood - cox.loglik).abs()))
}

/// Largest relative error of the analytic score against central differences.
pub fn score_fd_error(seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let data = random_dataset(seed, rng.gen_range(5..60), 3);
    let design = raw_design(&data);
    let beta: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let g = score(&design, &beta, &data).unwrap();
    let h = 1e-5;
    (0..3)
        .map(|c| {
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[c] += h;
            dn[c] -= h;
            let fd = (srcox::partial_log_likelihood(&design, &up, &data).unwrap()
                - srcox::partial_log_likelihood(&design, &dn, &data).unwrap())
                / (2.0 * h);
            (g[c] - fd).abs() / g[c].abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Midpoint concavity slack `ll(mid) - mean(ll(a), ll(b))`, scaled; must be
/// nonnegative up to rounding.
pub fn concavity_slack(seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0ca);
    let data = random_dataset(seed, rng.gen_range(5..60), 3);
    let design = raw_design(&data);
    let mut draw = || -> Vec<f64> { (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect() };
    let (a, b) = (draw(), draw());
    let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
    let ll = |v: &[f64]| srcox::partial_log_likelihood(&design, v, &data).unwrap();
    let (la, lb) = (ll(&a), ll(&b));
    (ll(&mid) - 0.5 * (la + lb)) / (la.abs() + lb.abs() + 1.0)
}
