//! `srcox`: fit shape-restricted Cox models from CSV, run the simulation
//! experiments, predict, and export component curves.
//!
//! Exit status: 0 success, 1 input or usage error, 2 solver did not converge.

mod data;
mod report;
mod spec_file;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srcox::sim::{export_component_curve, linspace, run_experiment, ExperimentConfig};
use srcox::{fit, lr_standard_error, KnotStrategy};

use data::{load_covariates_csv, load_survival_csv};
use report::{DataSummary, FitReport, IntervalEntry};
use spec_file::ModelSpecFile;

#[derive(Parser)]
#[command(name = "srcox", version, about = "Shape-restricted additive Cox regression")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV file and write a JSON report.
    Fit(FitArgs),
    /// Run one of the seven simulation experiments.
    Simulate(SimulateArgs),
    /// Linear predictors and survival probabilities from a fit report.
    Predict(PredictArgs),
    /// Tab-separated table of one fitted component.
    Curves(CurvesArgs),
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// JSON model specification.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Newton tolerance on the score sup-norm (overrides the spec).
    #[arg(long)]
    tol: Option<f64>,
    /// Newton iteration limit per subproblem (overrides the spec).
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment id, 1 to 7.
    id: u8,
    /// Sample size per replication.
    n: usize,
    replications: usize,
    seed: Option<u64>,
    #[arg(long = "seed", conflicts_with = "seed")]
    seed_flag: Option<u64>,
    /// Knot strategy for the shaped covariate.
    #[arg(long, default_value = "quantiles:10")]
    knots: KnotStrategy,
    /// JSON summary; an aligned table is written next to it with a `.txt` extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Fit report written by `srcox fit`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated times at which to report survival. Rows missing a
    /// covariate get empty fields.
    #[arg(long, value_delimiter = ',')]
    times: Vec<f64>,
}

#[derive(Args)]
struct CurvesArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    covariate: String,
    /// Defaults to the training minimum.
    #[arg(long, allow_negative_numbers = true)]
    grid_min: Option<f64>,
    /// Defaults to the training maximum.
    #[arg(long, allow_negative_numbers = true)]
    grid_max: Option<f64>,
    #[arg(long, default_value_t = 101)]
    grid_points: usize,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Input(String),
    NotConverged(String),
}

impl From<String> for Failure {
    fn from(msg: String) -> Self {
        Failure::Input(msg)
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_fit(args: FitArgs) -> CmdResult {
    let spec = ModelSpecFile::parse(&read(&args.spec)?)
        .map_err(|e| format!("{}: {e}", args.spec.display()))?;
    let mut solver = spec.options;
    if let Some(tol) = args.tol {
        solver.newton_tol = tol;
    }
    if let Some(m) = args.max_iter {
        solver.max_newton_iter = m;
    }
    let options = solver.fit_options();

    let loaded = load_survival_csv(&args.data, &spec.names())?;
    if loaded.rows_dropped > 0 {
        eprintln!(
            "dropped {} of {} rows with missing values",
            loaded.rows_dropped, loaded.rows_read
        );
    }
    let data = &loaded.dataset;
    let model_spec = spec.model_spec();
    let result = fit(data, &model_spec, &options).map_err(|e| e.to_string())?;
    for w in &result.expansion.warnings {
        eprintln!("warning: {w}");
    }

    let mut intervals = Vec::new();
    if solver.lr_intervals && result.converged {
        for (c, (name, _)) in result.expansion.linear.iter().enumerate() {
            let entry = match lr_standard_error(data, &model_spec, &result, c, &options) {
                Ok(iv) => IntervalEntry {
                    name: name.clone(),
                    interval: Some(iv),
                    error: None,
                },
                Err(e) => IntervalEntry {
                    name: name.clone(),
                    interval: None,
                    error: Some(e.to_string()),
                },
            };
            intervals.push(entry);
        }
    }

    let summary = DataSummary {
        rows_read: loaded.rows_read,
        rows_dropped: loaded.rows_dropped,
        rows_used: data.len(),
        events: data.event_count(),
    };
    let report = FitReport::build(spec.clone(), summary, &result, intervals);
    write(&args.out, &report.to_json()?)?;

    println!("log-likelihood {:.6}", result.log_likelihood);
    for l in &result.model.linear {
        let se = report
            .lr_intervals
            .iter()
            .find(|i| i.name == l.name)
            .and_then(|i| i.interval)
            .map_or_else(|| "-".to_string(), |iv| format!("{:.5}", iv.se));
        println!("{:<16} {:>12.5}  se {}", l.name, l.coefficient, se);
    }
    for k in &report.knots {
        println!(
            "{:<16} {:>6} {} of {} knots used",
            k.covariate,
            k.shape,
            k.used.len(),
            k.candidates.len()
        );
    }
    if !result.converged {
        return Err(Failure::NotConverged(format!(
            "active-set iteration cap reached after {} subproblem solves; report written to {}",
            report.trace.subproblems,
            args.out.display()
        )));
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let seed = args.seed.or(args.seed_flag).unwrap_or(0);
    let config = ExperimentConfig::experiment(args.id, args.n, args.replications, seed)
        .map_err(|e| e.to_string())?
        .with_knots(args.knots);
    let summary = run_experiment(&config).map_err(|e| e.to_string())?;
    let table = summary.to_table();
    print!("{table}");
    if let Some(out) = args.out {
        let json = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
        write(&out, &json)?;
        write(&out.with_extension("txt"), &table)?;
    }
    Ok(())
}

fn load_report(path: &Path) -> Result<FitReport, String> {
    FitReport::from_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_predict(args: PredictArgs) -> CmdResult {
    let report = load_report(&args.model)?;
    let model = &report.model;
    let rows = load_covariates_csv(&args.data, &model.covariate_names)?;
    let mut out = csv::Writer::from_path(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    let mut header = vec!["row".to_string(), "linear_predictor".to_string()];
    header.extend(args.times.iter().map(|t| format!("S({t})")));
    out.write_record(&header).map_err(|e| e.to_string())?;
    for (i, cov) in rows.iter().enumerate() {
        let Some(cov) = cov else {
            let mut rec = vec![(i + 1).to_string(), String::new()];
            rec.extend(args.times.iter().map(|_| String::new()));
            out.write_record(&rec).map_err(|e| e.to_string())?;
            continue;
        };
        let curve = srcox::survival_curve(model, cov).map_err(|e| e.to_string())?;
        let eta = srcox::linear_predictor(model, cov).map_err(|e| e.to_string())?;
        let mut rec = vec![(i + 1).to_string(), eta.to_string()];
        rec.extend(args.times.iter().map(|&t| curve.at(t).to_string()));
        out.write_record(&rec).map_err(|e| e.to_string())?;
    }
    out.flush().map_err(|e| e.to_string())?;
    Ok(())
}

fn cmd_curves(args: CurvesArgs) -> CmdResult {
    let report = load_report(&args.model)?;
    let Some(component) = report.model.component(&args.covariate) else {
        let shaped: Vec<&str> = report.model.components.iter().map(|c| c.name.as_str()).collect();
        let hint = if report.model.linear.iter().any(|l| l.name == args.covariate) {
            format!(
                "`{}` enters linearly; its effect is the coefficient in the report",
                args.covariate
            )
        } else {
            format!("`{}` is not in the model", args.covariate)
        };
        return Err(Failure::Input(format!(
            "{hint}. Shaped covariates: {}",
            if shaped.is_empty() { "none".to_string() } else { shaped.join(", ") }
        )));
    };
    let lo = args.grid_min.unwrap_or(component.support.0);
    let hi = args.grid_max.unwrap_or(component.support.1);
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || args.grid_points == 0 {
        return Err(Failure::Input(format!(
            "invalid grid [{lo}, {hi}] with {} points",
            args.grid_points
        )));
    }
    let mut tsv = String::from("x\tvalue\tis_knot\textrapolated\n");
    for p in export_component_curve(component, &linspace(lo, hi, args.grid_points)) {
        tsv.push_str(&format!("{}\t{}\t{}\t{}\n", p.x, p.value, p.is_knot, p.extrapolated));
    }
    write(&args.out, &tsv)?;
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors share exit status 1 with other input errors.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Curves(a) => cmd_curves(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
