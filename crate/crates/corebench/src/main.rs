use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use corebench::{m_grid, run, write_csv, Algorithm, BenchError, CsvInput, Experiment, ExperimentSpec, Result};
use coreset_core::embeddings::Model;

#[derive(Parser, Debug)]
#[command(name = "corebench", version, about = "Coreset construction benchmarks with CSV output")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gaussian unknown-mean posterior with size-1 coresets.
    SynthGauss(Args),
    /// Sum of i.i.d. standard normal vectors.
    SynthVectors(Args),
    /// Axis-aligned unit vectors.
    Ortho(Args),
    /// Logistic or Poisson regression in a random-feature Fisher embedding.
    Regress(Args),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModelArg {
    Logistic,
    Poisson,
}

#[derive(clap::Args, Debug)]
struct Args {
    /// Number of data points.
    #[arg(long)]
    n: Option<usize>,
    /// Vector dimension (synth-vectors).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Largest coreset budget; the grid is 1, 2, 5, 10, … up to this value.
    #[arg(long)]
    m_max: Option<usize>,
    /// Comma-separated subset of giga,fw,is,rnd.
    #[arg(long, value_enum, value_delimiter = ',')]
    algs: Option<Vec<Algorithm>>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Regression CSV with a header row.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Label column of --input.
    #[arg(long)]
    label_col: Option<String>,
    /// Standardize --input features to mean 0, variance 1.
    #[arg(long)]
    standardize: bool,
    /// Posterior draws for the projection (default: about 500 coordinates).
    #[arg(long)]
    proj_samples: Option<usize>,
    /// Use the cap-tree search in GIGA.
    #[arg(long)]
    use_captree: bool,
    /// Write 0 for cpu_seconds so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

fn spec_from(experiment: Experiment, args: Args) -> Result<(ExperimentSpec, Option<PathBuf>)> {
    let regress = experiment == Experiment::Regress;
    if !regress
        && (args.model.is_some()
            || args.input.is_some()
            || args.label_col.is_some()
            || args.standardize
            || args.proj_samples.is_some())
    {
        return Err(BenchError::Usage(
            "--model, --input, --label-col, --standardize and --proj-samples apply to regress only".into(),
        ));
    }
    if args.input.is_none() && (args.label_col.is_some() || args.standardize) {
        return Err(BenchError::Usage("--label-col and --standardize need --input".into()));
    }
    if regress && args.input.is_some() && args.n.is_some() {
        return Err(BenchError::Usage("--n cannot be combined with --input".into()));
    }
    let mut spec = ExperimentSpec::new(experiment);
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(dim) = args.dim {
        spec.dim = dim;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(m_max) = args.m_max {
        if m_max == 0 {
            return Err(BenchError::Usage("--m-max must be at least 1".into()));
        }
        spec.m_grid = m_grid(m_max);
    }
    if let Some(mut algs) = args.algs {
        algs.sort();
        algs.dedup();
        spec.algorithms = algs;
    }
    spec.seed = args.seed;
    spec.model = match args.model {
        Some(ModelArg::Poisson) => Model::Poisson,
        _ => Model::Logistic,
    };
    spec.input = args.input.map(|path| CsvInput {
        path,
        label_column: args.label_col.unwrap_or_else(|| "y".into()),
        standardize: args.standardize,
    });
    spec.proj_samples = args.proj_samples;
    spec.use_captree = args.use_captree;
    spec.timing = !args.no_timing;
    spec.validate()?;
    Ok((spec, args.out))
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("COREBENCH_THREADS") {
        let threads: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| BenchError::Usage(format!("COREBENCH_THREADS must be a positive integer, got '{raw}'")))?;
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| BenchError::Usage(format!("thread pool: {e}")))
}

fn execute(cli: Cli) -> Result<()> {
    let (experiment, args) = match cli.command {
        Command::SynthGauss(a) => (Experiment::SynthGauss, a),
        Command::SynthVectors(a) => (Experiment::SynthVectors, a),
        Command::Ortho(a) => (Experiment::Ortho, a),
        Command::Regress(a) => (Experiment::Regress, a),
    };
    let (spec, out) = spec_from(experiment, args)?;
    let rows = thread_pool()?.install(|| run(&spec))?;
    match out {
        Some(path) => {
            let file = std::fs::File::create(&path).map_err(|source| BenchError::Io { path: path.clone(), source })?;
            write_csv(&rows, std::io::BufWriter::new(file))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&rows, &mut lock)?;
            lock.flush().map_err(|source| BenchError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("corebench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
