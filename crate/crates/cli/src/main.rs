//! `tlasso` command-line tool. Machine-readable output goes to stdout (JSON)
//! and to files under `--out-dir`; logs go to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tlasso::data::{read_coefficients_csv, write_coefficients_csv};
use tlasso::regpath::PathSpec;
use tlasso::sim::{
    run_classification_drift, run_concept_drift, run_transfer, DriftScenario, ExperimentReport, Method, RunSpec,
    ScenarioKind,
};
use tlasso::theory::verify::{run_suite, Suite, SCHEMA_VERSION};
use tlasso::{
    cd_fit, cross_validate, destandardize, fit_path, load_csv, Coefficients, CvSpec, Dataset, Error, FitConfig, Loss,
    Metric, PenaltySpec, Standardizer,
};

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "tlasso", version, about = "Transfer Lasso: fitting, paths, cross-validation, experiments, verification")]
struct Cli {
    /// Repeat for more log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit at one (lambda, alpha).
    Fit(FitArgs),
    /// Fit a warm-started path from lambda_max down.
    Path(PathArgs),
    /// Select (lambda, alpha) by k-fold cross-validation and refit.
    Cv(CvArgs),
    /// Run a simulation experiment.
    Simulate(SimulateArgs),
    /// Run verification suites; exits 4 if any check fails.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Squared,
    Logistic,
}

impl From<LossArg> for Loss {
    fn from(l: LossArg) -> Loss {
        match l {
            LossArg::Squared => Loss::Squared,
            LossArg::Logistic => Loss::Logistic,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Headered numeric CSV.
    #[arg(long)]
    data: PathBuf,
    /// Column holding the response.
    #[arg(long)]
    response: String,
    /// Initial estimate as a `feature,beta` CSV on the raw scale (default: zeros).
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "squared")]
    loss: LossArg,
    /// Fit on the raw columns instead of standardizing first.
    #[arg(long)]
    no_standardize: bool,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_sweeps: usize,
    /// Directory for output files (created if missing).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    alpha: f64,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 100)]
    n_lambda: usize,
    /// lambda_min / lambda_max.
    #[arg(long, default_value_t = 1e-4)]
    ratio: f64,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Comma-separated alpha grid.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    n_lambda: usize,
    #[arg(long, default_value_t = 1e-4)]
    ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// mse, deviance or auc (default: mse for squared loss, deviance for logistic).
    #[arg(long)]
    metric: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    /// abrupt, gradual, transfer or classification.
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated methods (lasso_all, lasso_single, transfer_lasso).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Transfer rates for the transfer scenario.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    rates: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    n_lambda: usize,
    /// Solver tolerance along the cross-validation paths.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// all, threshold, kkt, unchanging, signs or bounds.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => EXIT_IO,
            Error::NoConvergence(_) => EXIT_NO_CONVERGENCE,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .init();
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Path(a) => cmd_path(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("TLASSO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure {
        code: EXIT_VALIDATION,
        message: format!("TLASSO_THREADS must be a positive integer, got `{raw}`"),
    })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure {
        code: EXIT_VALIDATION,
        message: format!("cannot size the thread pool: {e}"),
    })
}

fn validation(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_VALIDATION,
        message: message.into(),
    }
}

fn emit(v: &Value) {
    use std::io::Write;
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).expect("json serializes"));
}

fn out_file(dir: &Option<PathBuf>, name: &str) -> Result<Option<PathBuf>, Failure> {
    match dir {
        None => Ok(None),
        Some(d) => {
            fs::create_dir_all(d).map_err(|e| io_failure(d, e))?;
            Ok(Some(d.join(name)))
        }
    }
}

fn write_text(dir: &Option<PathBuf>, name: &str, text: &str) -> Result<(), Failure> {
    if let Some(path) = out_file(dir, name)? {
        fs::write(&path, text).map_err(|e| io_failure(&path, e))?;
    }
    Ok(())
}

fn write_coefs(dir: &Option<PathBuf>, name: &str, names: &[String], c: &Coefficients) -> Result<(), Failure> {
    if let Some(path) = out_file(dir, name)? {
        let file = fs::File::create(&path).map_err(|e| io_failure(&path, e))?;
        write_coefficients_csv(file, names, c)?;
    }
    Ok(())
}

/// Loaded data in the fitting coordinates, with the map back to raw scale.
struct Prepared {
    d: Dataset,
    st: Standardizer,
    tilde: Coefficients,
    names: Vec<String>,
    cfg: FitConfig,
}

fn prepare(a: &DataArgs) -> Result<Prepared, Failure> {
    let raw = load_csv(&a.data, &a.response)?;
    let names: Vec<String> = (0..raw.p()).map(|j| raw.column_name(j)).collect();
    let loss: Loss = a.loss.into();
    let (d, st) = if a.no_standardize {
        (raw.clone(), Standardizer::identity(raw.p()))
    } else if loss == Loss::Logistic {
        tlasso::data::standardize_features(&raw)?
    } else {
        tlasso::standardize(&raw)?
    };
    let tilde_raw = match &a.init {
        Some(path) => read_coefficients_csv(path, &names)?,
        None => Coefficients::zeros(raw.p()),
    };
    let tilde = st.to_standardized(&tilde_raw)?;
    let cfg = FitConfig::default()
        .with_loss(loss)
        .with_tol(a.tol)
        .with_max_sweeps(a.max_sweeps);
    cfg.validate()?;
    log::info!("loaded {} rows, {} features from {}", raw.n(), raw.p(), a.data.display());
    Ok(Prepared { d, st, tilde, names, cfg })
}

fn coef_json(names: &[String], c: &Coefficients) -> Value {
    let beta: serde_json::Map<String, Value> = names.iter().zip(c.beta.iter()).map(|(n, b)| (n.clone(), json!(b))).collect();
    json!({ "beta": beta, "intercept": c.intercept })
}

fn cmd_fit(a: FitArgs) -> CliResult {
    let pr = prepare(&a.data)?;
    let pen = PenaltySpec::new(a.lambda, a.alpha)?;
    let fit = cd_fit(&pr.d, pen, &pr.tilde, &pr.cfg)?;
    let raw = destandardize(&fit.coefficients, &pr.st)?;
    write_coefs(&a.data.out_dir, "coefficients.csv", &pr.names, &raw)?;
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": "fit",
        "lambda": a.lambda,
        "alpha": a.alpha,
        "objective": fit.objective,
        "sweeps": fit.sweeps_used,
        "kkt_residual": fit.kkt_residual,
        "converged": fit.converged,
        "coefficients": coef_json(&pr.names, &raw),
    }));
    if !fit.converged {
        log::error!("no convergence after {} sweeps (kkt residual {:.3e})", fit.sweeps_used, fit.kkt_residual);
        return Ok(EXIT_NO_CONVERGENCE);
    }
    Ok(0)
}

fn cmd_path(a: PathArgs) -> CliResult {
    let pr = prepare(&a.data)?;
    let spec = PathSpec {
        n_lambda: a.n_lambda,
        ratio: a.ratio,
        ..PathSpec::new(a.alpha, pr.tilde.clone())
    };
    let res = fit_path(&pr.d, &spec, &pr.cfg)?;
    let mut csv = String::from("lambda");
    for n in &pr.names {
        csv.push(',');
        csv.push_str(n);
    }
    csv.push('\n');
    let mut all_converged = true;
    for (l, f) in res.lambdas.iter().zip(&res.fits) {
        all_converged &= f.converged;
        let raw = destandardize(&f.coefficients, &pr.st)?;
        csv.push_str(&l.to_string());
        for b in raw.beta.iter() {
            csv.push(',');
            csv.push_str(&b.to_string());
        }
        csv.push('\n');
    }
    write_text(&a.data.out_dir, "path.csv", &csv)?;
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": "path",
        "alpha": a.alpha,
        "lambda_max": res.lambda_max,
        "lambdas": res.lambdas,
        "nonzeros": res.fits.iter().map(|f| f.coefficients.support().len()).collect::<Vec<_>>(),
        "kkt_residuals": res.fits.iter().map(|f| f.kkt_residual).collect::<Vec<_>>(),
        "converged": all_converged,
    }));
    Ok(if all_converged { 0 } else { EXIT_NO_CONVERGENCE })
}

fn cmd_cv(a: CvArgs) -> CliResult {
    let pr = prepare(&a.data)?;
    let metric = match &a.metric {
        Some(m) => m.parse::<Metric>()?,
        None => Metric::for_loss(pr.cfg.loss),
    };
    let spec = CvSpec {
        k: a.k,
        alphas: a.alphas.clone(),
        n_lambda: a.n_lambda,
        ratio: a.ratio,
        seed: a.seed,
        metric,
    };
    let res = cross_validate(&pr.d, &spec, &pr.tilde, &pr.cfg)?;
    let raw = destandardize(&res.refit.coefficients, &pr.st)?;
    let mut table = String::from("alpha,lambda,mean,sd\n");
    for c in &res.table {
        table.push_str(&format!("{},{},{},{}\n", c.alpha, c.lambda, c.mean, c.sd));
    }
    write_text(&a.data.out_dir, "cv_table.csv", &table)?;
    write_coefs(&a.data.out_dir, "coefficients.csv", &pr.names, &raw)?;
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": "cv",
        "spec": spec,
        "best_alpha": res.best_alpha,
        "best_lambda": res.best_lambda,
        "best_mean": res.best_cell().mean,
        "lambda_max": res.lambda_max,
        "refit": {
            "objective": res.refit.objective,
            "kkt_residual": res.refit.kkt_residual,
            "converged": res.refit.converged,
        },
        "coefficients": coef_json(&pr.names, &raw),
    }));
    Ok(if res.refit.converged { 0 } else { EXIT_NO_CONVERGENCE })
}

fn report_files(dir: &Option<PathBuf>, stem: &str, r: &ExperimentReport) -> Result<(), Failure> {
    write_text(dir, &format!("{stem}.csv"), &r.to_csv_string()?)?;
    write_text(dir, &format!("{stem}.json"), &r.to_json())
}

fn cmd_simulate(a: SimulateArgs) -> CliResult {
    let kind: ScenarioKind = a.scenario.parse()?;
    let mut run = RunSpec::new(a.trials);
    if let Some(ms) = &a.methods {
        let methods = ms.iter().map(|m| m.parse::<Method>()).collect::<tlasso::Result<Vec<_>>>()?;
        run = run.with_methods(&methods);
    }
    run.cv.k = a.k;
    run.cv.n_lambda = a.n_lambda;
    run.tol = a.tol;
    let scenario = DriftScenario::new(kind, a.seed);
    log::info!("running {} with {} trials", a.scenario, a.trials);
    let out = match kind {
        ScenarioKind::Abrupt | ScenarioKind::Gradual => {
            let r = run_concept_drift(&scenario, &run)?;
            report_files(&a.out_dir, &a.scenario, &r)?;
            serde_json::to_value(&r)
        }
        ScenarioKind::Transfer => {
            if a.rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(validation("transfer rates must lie in [0, 1]"));
            }
            let r = run_transfer(&scenario, &a.rates, &run)?;
            report_files(&a.out_dir, "transfer_l2_error", &r.l2_error)?;
            report_files(&a.out_dir, "transfer_correct_selected", &r.correct_selected)?;
            serde_json::to_value(&r)
        }
        ScenarioKind::ClassificationDrift => {
            let r = run_classification_drift(&scenario, &run)?;
            report_files(&a.out_dir, "classification", &r)?;
            serde_json::to_value(&r)
        }
    }
    .expect("report serializes");
    emit(&json!({ "schema_version": SCHEMA_VERSION, "command": "simulate", "report": out }));
    Ok(0)
}

fn cmd_verify(a: VerifyArgs) -> CliResult {
    let suites: Vec<Suite> = if a.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![a.suite.parse()?]
    };
    let mut checks = Vec::new();
    for s in suites {
        log::info!("running suite {}", s.name());
        checks.extend(run_suite(s, a.seed)?);
    }
    for c in &checks {
        if !c.passed {
            log::warn!("{}/{} failed: {}", c.suite, c.check, c.note);
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "suite": a.suite,
        "seed": a.seed,
        "passed": passed,
        "checks": checks,
    });
    write_text(&a.out_dir, "verify.json", &serde_json::to_string_pretty(&doc).expect("json serializes"))?;
    emit(&doc);
    Ok(if passed { 0 } else { EXIT_VERIFY_FAILED })
}
