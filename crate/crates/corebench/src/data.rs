//! Dataset generation and CSV ingestion.

use std::path::Path;

use coreset_core::embeddings::{sigmoid, softplus, GaussianMeanData, Model, RegressionData};
use coreset_core::{CoresetProblem, Result as CoreResult};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{BenchError, Result};

/// `μ ~ N(0, 1)`, then `y_1..y_n ~ N(μ, 1)`.
pub fn gaussian_observations(rng: &mut impl Rng, n: usize) -> GaussianMeanData {
    let mu: f64 = rng.sample(StandardNormal);
    let ys = (0..n).map(|_| mu + rng.sample::<f64, _>(StandardNormal)).collect();
    GaussianMeanData::new(ys).expect("n ≥ 1 finite draws")
}

/// `n` i.i.d. standard normal vectors in `R^dim`.
pub fn normal_vectors(rng: &mut impl Rng, n: usize, dim: usize) -> CoreResult<CoresetProblem> {
    let data = (0..n * dim).map(|_| rng.sample(StandardNormal)).collect();
    CoresetProblem::from_row_major(data, dim)
}

/// Axis-aligned vectors `L_n = 1_n / n`.
pub fn axis_vectors(n: usize) -> CoreResult<CoresetProblem> {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n + i] = 1.0 / n as f64;
    }
    CoresetProblem::from_row_major(data, n)
}

/// Parameter of the synthetic regression datasets, intercept last.
pub fn synthetic_theta(model: Model) -> Vec<f64> {
    match model {
        Model::Logistic => vec![3.0, 3.0, 0.0],
        Model::Poisson => vec![1.0, 0.0],
        Model::GaussianMean => vec![0.0],
    }
}

/// Features `x_n ~ N(0, I)` and targets drawn from the model at [`synthetic_theta`].
pub fn synthetic_regression(rng: &mut impl Rng, model: Model, n: usize) -> CoreResult<RegressionData> {
    let theta = synthetic_theta(model);
    let d = theta.len() - 1;
    let mut features = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let u = x.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>() + theta[d];
        let y = match model {
            Model::Logistic => {
                if rng.random::<f64>() < sigmoid(u) {
                    1.0
                } else {
                    -1.0
                }
            }
            Model::Poisson => {
                let rate = softplus(u);
                if rate > 0.0 {
                    Poisson::new(rate).expect("positive finite rate").sample(rng)
                } else {
                    0.0
                }
            }
            Model::GaussianMean => u + rng.sample::<f64, _>(StandardNormal),
        };
        features.extend(x);
        targets.push(y);
    }
    RegressionData::new(features, d, targets, model)
}

/// Reads a headed CSV; `label_column` is the target, every other column a
/// feature. Logistic labels in `{0, 1}` map to `{−1, 1}`.
pub fn load_csv(path: &Path, label_column: &str, model: Model, standardize: bool) -> Result<RegressionData> {
    let file = std::fs::File::open(path).map_err(|source| BenchError::Io { path: path.into(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let header = reader.headers().map_err(|e| BenchError::Data(format!("{}: {e}", path.display())))?.clone();
    if header.is_empty() {
        return Err(BenchError::Data(format!("{}: empty file", path.display())));
    }
    let label = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| BenchError::Data(format!("{}: label column '{label_column}' not found", path.display())))?;
    let dim = header.len() - 1;

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| BenchError::Data(format!("{}: row {row}: {e}", path.display())))?;
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                BenchError::Data(format!("{}: row {row}, column '{}': not a number: '{cell}'", path.display(), &header[j]))
            })?;
            if j == label {
                targets.push(value);
            } else {
                features.push(value);
            }
        }
    }
    if targets.is_empty() {
        return Err(BenchError::Data(format!("{}: no data rows", path.display())));
    }

    if model == Model::Logistic {
        let binary = targets.iter().all(|&y| y == 0.0 || y == 1.0);
        let signed = targets.iter().all(|&y| y == -1.0 || y == 1.0);
        if binary {
            targets.iter_mut().for_each(|y| *y = 2.0 * *y - 1.0);
        } else if !signed {
            let row = 1 + targets.iter().position(|&y| y != 0.0 && y != 1.0 && y != -1.0).unwrap_or(0);
            return Err(BenchError::Data(format!(
                "{}: row {row}: logistic labels must be {{0, 1}} or {{-1, 1}}",
                path.display()
            )));
        }
    }
    if let Some(i) = targets.iter().position(|&y| !model.check_target(y)) {
        return Err(BenchError::Data(format!(
            "{}: row {}: invalid {model:?} target {}",
            path.display(),
            i + 1,
            targets[i]
        )));
    }
    if standardize {
        standardize_columns(&mut features, dim);
    }
    Ok(RegressionData::new(features, dim, targets, model)?)
}

/// Centres each column and scales it to unit variance; constant columns are
/// only centred.
pub fn standardize_columns(features: &mut [f64], dim: usize) {
    if dim == 0 || features.is_empty() {
        return;
    }
    let n = (features.len() / dim) as f64;
    for j in 0..dim {
        let mean = features.iter().skip(j).step_by(dim).sum::<f64>() / n;
        let var = features.iter().skip(j).step_by(dim).map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for x in features.iter_mut().skip(j).step_by(dim) {
            *x -= mean;
            if sd > 0.0 {
                *x /= sd;
            }
        }
    }
}
