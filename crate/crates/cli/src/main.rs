use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mvperf_core::data::fmt_f64;
use mvperf_core::verify::DEFAULT_SEED;
use mvperf_core::{
    evaluate, generate, load_manifest, predict, train, write_dataset, Error, GenSpec, Measure, Model,
    Suite, TrainConfig,
};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DATA: u8 = 4;
const EXIT_DIMENSION: u8 = 5;
const EXIT_SOLVER: u8 = 6;
const EXIT_VERIFY: u8 = 7;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (bad flags, measure, or configuration)
  3  I/O error
  4  malformed data or model file
  5  dimension mismatch between data and model
  6  solver failure
  7  verification suite failure

Set MVPERF_THREADS to cap the number of worker threads (0 or unset: one per core).";

/// Multi-view linear classifiers trained for error rate, F1, PRBEP, or
/// precision/recall at k.
#[derive(Parser)]
#[command(name = "mvperf", version, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a dataset manifest.
    #[command(after_help = EXIT_CODES)]
    Train(TrainArgs),
    /// Write one +1/-1 prediction per line.
    #[command(after_help = EXIT_CODES)]
    Predict(PredictArgs),
    /// Print the contingency table and loss of a model on a dataset.
    #[command(after_help = EXIT_CODES)]
    Eval(EvalArgs),
    /// Run a self-check suite and report pass counts.
    #[command(after_help = EXIT_CODES)]
    Verify(VerifyArgs),
    /// Generate a synthetic multi-view dataset.
    #[command(after_help = EXIT_CODES)]
    Gen(GenArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset manifest (TOML).
    #[arg(long)]
    data: PathBuf,
    /// err, f1, prbep, prec@K or rec@K.
    #[arg(long, default_value = "err")]
    measure: Measure,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 0.1)]
    c2: f64,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long = "qp-tol", default_value_t = 1e-8)]
    qp_tol: f64,
    #[arg(long = "qp-max-iter", default_value_t = 10_000)]
    qp_max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model output path.
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration CSV log; defaults to MODEL.log.csv.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Defaults to the measure the model was trained for.
    #[arg(long)]
    measure: Option<Measure>,
}

#[derive(Args)]
struct VerifyArgs {
    /// constraint-search, prediction, qp, gradient, full-constraint, or all.
    #[arg(long)]
    suite: String,
    /// Number of random cases; each suite has its own default.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    /// Output directory for manifest.toml, labels.txt and view files.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Comma-separated view dimensions.
    #[arg(long, value_delimiter = ',', default_value = "5,5")]
    dims: Vec<usize>,
    /// Fraction of positive labels.
    #[arg(long, default_value_t = 0.5)]
    balance: f64,
    /// One value for every view, or one per view.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    margin: Vec<f64>,
    /// One value for every view, or one per view.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    noise: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    correlation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => EXIT_IO,
            Error::Parse { .. }
            | Error::Manifest { .. }
            | Error::RowCountMismatch { .. }
            | Error::InvalidLabel { .. }
            | Error::NonFinite { .. }
            | Error::DuplicateIndex { .. }
            | Error::InvalidDataset(_)
            | Error::ModelFormat(_)
            | Error::Inadmissible { .. }
            | Error::DegenerateTable { .. } => EXIT_DATA,
            Error::DimensionMismatch(_) | Error::LengthMismatch { .. } => EXIT_DIMENSION,
            Error::EmptyWorkingSet
            | Error::EmptyAdmissibleSet(_)
            | Error::Factorization { .. }
            | Error::QpNonConvergence { .. } => EXIT_SOLVER,
            Error::InvalidMeasure(_) | Error::InvalidConfig(_) | Error::TooLarge { .. } => EXIT_USAGE,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        msg: msg.into(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        code: EXIT_IO,
        msg: format!("{}: {e}", path.display()),
    })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("MVPERF_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| usage(format!("MVPERF_THREADS must be a non-negative integer, got {raw:?}")))?;
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(format!("cannot configure {threads} threads: {e}")))
}

fn run_train(args: TrainArgs) -> Result<(), Failure> {
    let ds = load_manifest(&args.data)?;
    let cfg = TrainConfig {
        c1: args.c1,
        c2: args.c2,
        max_iter: args.max_iter,
        epsilon: args.eps,
        measure: args.measure,
        qp_tol: args.qp_tol,
        qp_max_iter: args.qp_max_iter,
        seed: args.seed,
    };
    let (model, state) = train(&ds, &cfg)?;
    model.save(&args.out)?;

    let log_path = args.log.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".log.csv");
        PathBuf::from(p)
    });
    let mut log = String::from("t,xi,violation,primal\n");
    for r in &state.history {
        let _ = writeln!(log, "{},{},{},{}", r.t, fmt_f64(r.xi), fmt_f64(r.violation), fmt_f64(r.primal));
    }
    write_file(&log_path, &log)?;

    let primal = state.history.last().map_or(f64::NAN, |r| r.primal);
    println!(
        "status {} after {} iterations, {} constraints, xi {}, primal {}",
        model.status,
        state.history.len(),
        model.working_set.len(),
        fmt_f64(state.xi),
        fmt_f64(primal)
    );
    Ok(())
}

fn run_predict(args: PredictArgs) -> Result<(), Failure> {
    let ds = load_manifest(&args.data)?;
    let model = Model::load(&args.model)?;
    let pred = predict(&ds, &model.weights)?;
    let mut out = String::with_capacity(3 * pred.len());
    for y in pred.iter() {
        out.push_str(if y > 0 { "+1\n" } else { "-1\n" });
    }
    write_file(&args.out, &out)
}

fn run_eval(args: EvalArgs) -> Result<(), Failure> {
    let ds = load_manifest(&args.data)?;
    let model = Model::load(&args.model)?;
    let measure = args.measure.unwrap_or(model.measure);
    measure.check_size(ds.n())?;
    let report = evaluate(&ds, &model, measure)?;
    let t = report.table;
    println!("            actual +  actual -");
    println!("predicted + {:>8}  {:>8}", t.tp, t.fp);
    println!("predicted - {:>8}  {:>8}", t.fn_, t.tn);
    println!("measure {measure}");
    println!("loss {}", fmt_f64(report.loss));
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<(), Failure> {
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![args.suite.parse()?]
    };
    let mut failed = false;
    for suite in suites {
        let report = suite.run(args.count.unwrap_or(suite.default_count()), args.seed);
        println!("{report}");
        for f in report.failures.iter().take(10) {
            eprintln!("  {f}");
        }
        failed |= !report.ok();
    }
    if failed {
        return Err(Failure {
            code: EXIT_VERIFY,
            msg: "verification failed".into(),
        });
    }
    Ok(())
}

fn per_view(values: Vec<f64>, m: usize, name: &str) -> Result<Vec<f64>, Failure> {
    match values.len() {
        1 => Ok(vec![values[0]; m]),
        l if l == m => Ok(values),
        l => Err(usage(format!("--{name} needs 1 or {m} values, got {l}"))),
    }
}

fn run_gen(args: GenArgs) -> Result<(), Failure> {
    let m = args.dims.len();
    let spec = GenSpec {
        n: args.n,
        balance: args.balance,
        margins: per_view(args.margin, m, "margin")?,
        noise: per_view(args.noise, m, "noise")?,
        correlation: args.correlation,
        seed: args.seed,
        dims: args.dims,
    };
    let ds = generate(&spec)?;
    let manifest = write_dataset(&ds, &args.out)?;
    println!("{}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Train(a) => run_train(a),
        Command::Predict(a) => run_predict(a),
        Command::Eval(a) => run_eval(a),
        Command::Verify(a) => run_verify(a),
        Command::Gen(a) => run_gen(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mvperf: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
