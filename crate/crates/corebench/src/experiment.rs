//! Experiment specifications and runners.

use std::path::PathBuf;
use std::time::Instant;

use coreset_core::baselines::{is_coreset, rnd_coreset, FrankWolfe};
use coreset_core::embeddings::{
    coreset_posterior_variance, gaussian_embed, laplace, project, GaussianMeanData, Model, ProjectionConfig,
    RegressionData,
};
use coreset_core::giga::{Giga, GigaOptions};
use coreset_core::rng::{stream, Purpose};
use coreset_core::{CoresetProblem, Execution, WeightVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{axis_vectors, gaussian_observations, load_csv, normal_vectors, synthetic_regression};
use crate::error::{BenchError, Result};

/// Embedding dimension targeted by the regression projection.
pub const PROJECTION_DIM: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Giga,
    Fw,
    Is,
    Rnd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Giga, Algorithm::Fw, Algorithm::Is, Algorithm::Rnd];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Giga => "giga",
            Algorithm::Fw => "fw",
            Algorithm::Is => "is",
            Algorithm::Rnd => "rnd",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    SynthGauss,
    SynthVectors,
    Ortho,
    Regress,
}

/// Regression data read from disk instead of generated.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvInput {
    pub path: PathBuf,
    pub label_column: String,
    pub standardize: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub n: usize,
    /// Vector dimension for `synth-vectors`; ignored elsewhere.
    pub dim: usize,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub model: Model,
    pub input: Option<CsvInput>,
    /// Posterior draws for the projection; `None` targets [`PROJECTION_DIM`].
    pub proj_samples: Option<usize>,
    pub use_captree: bool,
    /// When off, `cpu_seconds` is written as 0 so output is reproducible byte for byte.
    pub timing: bool,
}

impl ExperimentSpec {
    /// Desk-scale defaults.
    pub fn new(experiment: Experiment) -> Self {
        let (n, trials, m_max) = match experiment {
            Experiment::SynthGauss => (10, 1000, 1),
            Experiment::SynthVectors => (10_000, 20, 1000),
            Experiment::Ortho => (1000, 1, 1000),
            Experiment::Regress => (2000, 20, 1000),
        };
        ExperimentSpec {
            experiment,
            n,
            dim: 50,
            m_grid: m_grid(m_max),
            trials,
            seed: 1,
            algorithms: Algorithm::ALL.to_vec(),
            model: Model::Logistic,
            input: None,
            proj_samples: None,
            use_captree: false,
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(BenchError::Usage(msg.into()));
        if self.trials == 0 {
            return fail("--trials must be at least 1");
        }
        if self.n == 0 {
            return fail("--n must be at least 1");
        }
        if self.dim == 0 {
            return fail("--dim must be at least 1");
        }
        if self.m_grid.is_empty() || self.m_grid[0] == 0 || self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return fail("M grid must be strictly increasing and start at 1 or more");
        }
        if self.algorithms.is_empty() {
            return fail("--algs must name at least one algorithm");
        }
        if self.proj_samples == Some(0) {
            return fail("--proj-samples must be at least 1");
        }
        if self.experiment == Experiment::Regress && self.model == Model::GaussianMean {
            return fail("--model must be logistic or poisson");
        }
        Ok(())
    }
}

/// `1, 2, 5, 10, 20, 50, …` up to `m_max`, with `m_max` appended.
pub fn m_grid(m_max: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut decade = 1usize;
    'outer: loop {
        for mult in [1, 2, 5] {
            let m = decade * mult;
            if m >= m_max {
                break 'outer;
            }
            grid.push(m);
        }
        decade *= 10;
    }
    if m_max > 0 {
        grid.push(m_max);
    }
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub trial: usize,
    pub algorithm: Algorithm,
    #[serde(rename = "M")]
    pub m: usize,
    pub rel_error: f64,
    pub size: usize,
    pub cpu_seconds: f64,
    /// Posterior-variance relative error (`synth-gauss` only).
    pub extra: Option<f64>,
}

pub const CSV_HEADER: [&str; 7] = ["trial", "algorithm", "M", "rel_error", "size", "cpu_seconds", "extra"];

struct Clock {
    start: Instant,
    enabled: bool,
}

impl Clock {
    fn start(enabled: bool) -> Self {
        Clock { start: Instant::now(), enabled }
    }

    fn seconds(&self) -> f64 {
        if self.enabled {
            self.start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }
}

/// Runs every trial (concurrently on the current rayon pool) and returns
/// rows sorted by trial, algorithm and `M`.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let inner = if spec.trials >= rayon::current_num_threads() { Execution::Sequential } else { Execution::Parallel };
    let mut rows: Vec<ResultRow> = match spec.experiment {
        Experiment::SynthGauss => trials(spec, |trial| {
            let data = gaussian_observations(&mut stream(spec.seed, trial as u64, Purpose::Data), spec.n);
            let problem = gaussian_embed(&data);
            Ok(sweep(spec, &problem, trial, inner, |w| variance_error(&data, w)))
        })?,
        Experiment::SynthVectors => trials(spec, |trial| {
            let problem = normal_vectors(&mut stream(spec.seed, trial as u64, Purpose::Data), spec.n, spec.dim)?;
            Ok(sweep(spec, &problem, trial, inner, |_| None))
        })?,
        Experiment::Ortho => {
            let problem = axis_vectors(spec.n)?;
            trials(spec, |trial| Ok(sweep(spec, &problem, trial, inner, |_| None)))?
        }
        Experiment::Regress => {
            let data = regression_data(spec)?;
            let lap = laplace(spec.model, &data)?;
            let k = data.dim() + 1;
            let samples = spec
                .proj_samples
                .unwrap_or_else(|| ProjectionConfig::for_dimension(k, PROJECTION_DIM, spec.seed, 0).samples);
            trials(spec, |trial| {
                let cfg = ProjectionConfig { samples, seed: spec.seed, trial: trial as u64 };
                let problem = project(spec.model, &data, &lap, &cfg, inner)?;
                Ok(sweep(spec, &problem, trial, inner, |_| None))
            })?
        }
    };
    rows.sort_by_key(|r| (r.trial, r.algorithm, r.m));
    Ok(rows)
}

fn trials<F>(spec: &ExperimentSpec, per_trial: F) -> Result<Vec<ResultRow>>
where
    F: Fn(usize) -> Result<Vec<ResultRow>> + Sync + Send,
{
    let chunks: Vec<Vec<ResultRow>> = (0..spec.trials).into_par_iter().map(&per_trial).collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// The regression dataset: from `--input`, or synthetic from the data stream of trial 0.
pub fn regression_data(spec: &ExperimentSpec) -> Result<RegressionData> {
    match &spec.input {
        Some(csv) => load_csv(&csv.path, &csv.label_column, spec.model, csv.standardize),
        None => Ok(synthetic_regression(&mut stream(spec.seed, 0, Purpose::Data), spec.model, spec.n)?),
    }
}

fn variance_error(data: &GaussianMeanData, w: &WeightVector) -> Option<f64> {
    let exact = data.posterior().1;
    let (_, var) = coreset_posterior_variance(data, w).expect("weights index the data");
    Some((var - exact).abs() / exact)
}

/// Runs each algorithm across the M grid on one problem. The iterative
/// methods run once to the largest M and are read off at every grid point;
/// time is cumulative from the start of construction.
fn sweep(
    spec: &ExperimentSpec,
    problem: &CoresetProblem,
    trial: usize,
    exec: Execution,
    extra: impl Fn(&WeightVector) -> Option<f64>,
) -> Vec<ResultRow> {
    let row = |algorithm, m, w: &WeightVector, cpu_seconds| ResultRow {
        trial,
        algorithm,
        m,
        rel_error: problem.relative_error(w).expect("weights index the problem"),
        size: w.len(),
        cpu_seconds,
        extra: extra(w),
    };
    let mut rows = Vec::with_capacity(spec.algorithms.len() * spec.m_grid.len());
    for &alg in &spec.algorithms {
        match alg {
            Algorithm::Giga => {
                let clock = Clock::start(spec.timing);
                let opts = GigaOptions { exec, use_captree: spec.use_captree, ..GigaOptions::default() };
                let mut giga = Giga::new(problem, opts);
                for &m in &spec.m_grid {
                    giga.run_until(m);
                    let w = giga.finalize();
                    rows.push(row(alg, m, &w, clock.seconds()));
                }
            }
            Algorithm::Fw => {
                let clock = Clock::start(spec.timing);
                let mut fw = FrankWolfe::new(problem, exec);
                for &m in &spec.m_grid {
                    fw.run_until(m);
                    let w = fw.weights();
                    rows.push(row(alg, m, &w, clock.seconds()));
                }
            }
            Algorithm::Is | Algorithm::Rnd => {
                for &m in &spec.m_grid {
                    let clock = Clock::start(spec.timing);
                    let w = if alg == Algorithm::Is {
                        is_coreset(problem, m, spec.seed, trial as u64)
                    } else {
                        rnd_coreset(problem, m, spec.seed, trial as u64)
                    };
                    rows.push(row(alg, m, &w, clock.seconds()));
                }
            }
        }
    }
    rows
}
