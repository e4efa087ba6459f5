//! Bayesian models as coreset problems.
//!
//! A datum's log-likelihood `L_n(θ)` is represented by a finite vector whose
//! Euclidean inner products approximate the Fisher-type inner product
//! `E_π̂[∇L_n(θ)ᵀ∇L_m(θ)]`. For the conjugate Gaussian-mean model this is
//! available in closed form; for regression models the expectation is
//! estimated with gradients at `S` draws from a Laplace approximation.
//!
//! All three models are generalized linear: with `z_n = [x_n; 1]` and
//! `u = z_nᵀθ`, `L_n(θ) = f(y_n, u)` and `∇L_n(θ) = f'(y_n, u) z_n`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{CoresetError, Result};
use crate::exec::{fill_chunks, Execution};
use crate::hilbert::{CoresetProblem, WeightVector};
use crate::rng::{stream, Purpose};

pub const NEWTON_GRAD_TOL: f64 = 1e-8;
pub const NEWTON_MAX_ITERS: usize = 100;
const MAX_HALVINGS: usize = 40;
const VALUE_ROUNDING: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    /// `y ~ N(u, 1)`; with no features this is the unknown-mean model.
    GaussianMean,
    /// `y ∈ {−1, 1}`, `P(y | u) = s(y u)`.
    Logistic,
    /// `y ~ Poisson(log(1 + e^u))`.
    Poisson,
}

/// Logistic function, stable for large `|u|`.
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^u)` without overflow.
pub fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn ln_softplus(u: f64) -> f64 {
    if u < -30.0 {
        u - 0.5 * u.exp()
    } else {
        softplus(u).ln()
    }
}

/// `s(u) / log(1 + e^u)`, finite for all `u`.
fn sigmoid_over_softplus(u: f64) -> f64 {
    if u < -30.0 {
        1.0 - 0.5 * u.exp()
    } else {
        sigmoid(u) / softplus(u)
    }
}

impl Model {
    /// `f(y, u)` up to an additive term that depends on `y` only.
    pub fn log_likelihood(self, y: f64, u: f64) -> f64 {
        match self {
            Model::GaussianMean => -0.5 * (y - u) * (y - u),
            Model::Logistic => -softplus(-y * u),
            Model::Poisson => y * ln_softplus(u) - softplus(u),
        }
    }

    /// `∂f/∂u`.
    pub fn dlog_likelihood(self, y: f64, u: f64) -> f64 {
        match self {
            Model::GaussianMean => y - u,
            Model::Logistic => y * sigmoid(-y * u),
            Model::Poisson => y * sigmoid_over_softplus(u) - sigmoid(u),
        }
    }

    /// `∂²f/∂u²`, always `≤ 0` for these models.
    pub fn d2log_likelihood(self, y: f64, u: f64) -> f64 {
        match self {
            Model::GaussianMean => -1.0,
            Model::Logistic => -sigmoid(u) * sigmoid(-u),
            Model::Poisson => {
                let ratio = sigmoid_over_softplus(u);
                let curv = sigmoid(u) * sigmoid(-u);
                y * ratio * (sigmoid(-u) - ratio) - curv
            }
        }
    }

    /// Whether `y` is in the support of the model's likelihood.
    pub fn check_target(self, y: f64) -> bool {
        match self {
            Model::GaussianMean => y.is_finite(),
            Model::Logistic => y == 1.0 || y == -1.0,
            Model::Poisson => y >= 0.0 && y.fract() == 0.0 && y.is_finite(),
        }
    }
}

/// Observations for the unknown-mean model with `N(0, 1)` prior and unit
/// likelihood variance.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMeanData {
    observations: Vec<f64>,
}

impl GaussianMeanData {
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if observations.is_empty() {
            return Err(CoresetError::InvalidData("no observations".into()));
        }
        if observations.iter().any(|y| !y.is_finite()) {
            return Err(CoresetError::InvalidData("non-finite observation".into()));
        }
        Ok(GaussianMeanData { observations })
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Exact posterior `(mean, variance) = (Σy/(N+1), 1/(N+1))`.
    pub fn posterior(&self) -> (f64, f64) {
        let n = self.observations.len() as f64;
        (self.observations.iter().sum::<f64>() / (n + 1.0), 1.0 / (n + 1.0))
    }

    /// The same data as a feature-free regression problem.
    pub fn to_regression(&self) -> RegressionData {
        RegressionData { features: Vec::new(), dim: 0, targets: self.observations.clone() }
    }
}

/// Embeds each datum as `(y_n − μ̂, ŝ)` so that inner products equal
/// `E_π[(y_n − μ)(y_m − μ)]` under the exact posterior `N(μ̂, ŝ²)`.
pub fn gaussian_embed(data: &GaussianMeanData) -> CoresetProblem {
    let (mean, var) = data.posterior();
    let sd = var.sqrt();
    let rows: Vec<f64> = data.observations.iter().flat_map(|y| [y - mean, sd]).collect();
    CoresetProblem::from_row_major(rows, 2).expect("finite observations")
}

/// Posterior `N(Σ w_n y_n / (1 + Σ w_n), 1 / (1 + Σ w_n))` under coreset weights.
pub fn coreset_posterior_variance(data: &GaussianMeanData, w: &WeightVector) -> Result<(f64, f64)> {
    let mut total = 0.0;
    let mut weighted = 0.0;
    for (i, wi) in w.iter() {
        let y = data
            .observations
            .get(i)
            .ok_or(CoresetError::IndexOutOfRange { index: i, len: data.len() })?;
        total += wi;
        weighted += wi * y;
    }
    Ok((weighted / (1.0 + total), 1.0 / (1.0 + total)))
}

/// Features `x_n ∈ R^D` (row-major) and targets `y_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionData {
    features: Vec<f64>,
    dim: usize,
    targets: Vec<f64>,
}

impl RegressionData {
    pub fn new(features: Vec<f64>, dim: usize, targets: Vec<f64>, model: Model) -> Result<Self> {
        if targets.is_empty() {
            return Err(CoresetError::InvalidData("no rows".into()));
        }
        if features.len() != dim * targets.len() {
            return Err(CoresetError::InvalidData(format!(
                "{} feature values for {} rows of dimension {dim}",
                features.len(),
                targets.len()
            )));
        }
        if let Some(pos) = features.iter().position(|x| !x.is_finite()) {
            return Err(CoresetError::InvalidData(format!("non-finite feature in row {}", pos / dim.max(1))));
        }
        if let Some(row) = targets.iter().position(|&y| !model.check_target(y)) {
            return Err(CoresetError::InvalidData(format!(
                "row {row}: target {} invalid for {model:?}",
                targets[row]
            )));
        }
        Ok(RegressionData { features, dim, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Feature dimension `D` (the parameter has `D + 1` entries).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self, n: usize) -> &[f64] {
        &self.features[n * self.dim..(n + 1) * self.dim]
    }

    pub fn target(&self, n: usize) -> f64 {
        self.targets[n]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// `z_n = [x_n; 1]`.
    pub fn augmented(&self, n: usize) -> Vec<f64> {
        let mut z = self.features(n).to_vec();
        z.push(1.0);
        z
    }

    /// `z_nᵀθ`.
    fn linear(&self, n: usize, theta: &[f64]) -> f64 {
        let x = self.features(n);
        x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() + theta[self.dim]
    }
}

/// `∇_θ L_n(θ) = f'(y_n, z_nᵀθ) z_n`.
pub fn log_likelihood_grad(model: Model, z: &[f64], y: f64, theta: &[f64]) -> Vec<f64> {
    let u: f64 = z.iter().zip(theta).map(|(a, b)| a * b).sum();
    let g = model.dlog_likelihood(y, u);
    z.iter().map(|zi| g * zi).collect()
}

/// Gaussian approximation `N(mode, covariance)` of the posterior.
#[derive(Clone, Debug)]
pub struct LaplaceApprox {
    pub mode: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Lower-triangular `L` with `L Lᵀ = covariance`.
    pub factor: DMatrix<f64>,
    pub iterations: usize,
}

impl LaplaceApprox {
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let k = self.mode.len();
        let xi = DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let draw = &self.factor * xi;
        self.mode.iter().zip(draw.iter()).map(|(m, d)| m + d).collect()
    }
}

struct PosteriorEval {
    value: f64,
    grad: DVector<f64>,
    neg_hessian: DMatrix<f64>,
}

fn log_posterior(model: Model, data: &RegressionData, theta: &[f64], with_hessian: bool) -> PosteriorEval {
    let k = data.dim + 1;
    let mut value = -0.5 * theta.iter().map(|t| t * t).sum::<f64>();
    let mut grad = DVector::from_iterator(k, theta.iter().map(|t| -t));
    let mut neg_hessian = if with_hessian { DMatrix::identity(k, k) } else { DMatrix::zeros(0, 0) };
    for n in 0..data.len() {
        let y = data.targets[n];
        let u = data.linear(n, theta);
        value += model.log_likelihood(y, u);
        let d1 = model.dlog_likelihood(y, u);
        let z = data.augmented(n);
        for (g, zi) in grad.iter_mut().zip(&z) {
            *g += d1 * zi;
        }
        if with_hessian {
            let c = -model.d2log_likelihood(y, u);
            for i in 0..k {
                for j in 0..=i {
                    neg_hessian[(i, j)] += c * z[i] * z[j];
                }
            }
        }
    }
    if with_hessian {
        for i in 0..k {
            for j in 0..i {
                neg_hessian[(j, i)] = neg_hessian[(i, j)];
            }
        }
    }
    PosteriorEval { value, grad, neg_hessian }
}

/// Laplace approximation under a standard normal prior: Newton ascent with
/// step halving to `‖∇‖ ≤ 1e-8`, covariance the inverse negative Hessian.
pub fn laplace(model: Model, data: &RegressionData) -> Result<LaplaceApprox> {
    let k = data.dim + 1;
    let mut theta = vec![0.0; k];
    let mut eval = log_posterior(model, data, &theta, true);
    let mut iterations = 0;
    while eval.grad.norm() > NEWTON_GRAD_TOL {
        if iterations == NEWTON_MAX_ITERS {
            return Err(CoresetError::NonConvergence {
                iterations,
                grad_norm: eval.grad.norm(),
                last: theta,
            });
        }
        iterations += 1;
        let chol = eval.neg_hessian.clone().cholesky().ok_or(CoresetError::NotPositiveDefinite)?;
        let delta = chol.solve(&eval.grad);
        // Changes below rounding in the summed value must not count as a
        // decrease, or a needlessly halved step is accepted on a tie.
        let floor = eval.value - VALUE_ROUNDING * (1.0 + eval.value.abs());
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = theta.iter().zip(delta.iter()).map(|(t, d)| t + scale * d).collect();
            let value = log_posterior(model, data, &trial, false).value;
            if value >= floor {
                accepted = Some(trial);
                break;
            }
            scale *= 0.5;
        }
        // At the numerical optimum no halving improves the value; take the
        // full step and let the gradient test decide.
        theta = accepted.unwrap_or_else(|| theta.iter().zip(delta.iter()).map(|(t, d)| t + d).collect());
        eval = log_posterior(model, data, &theta, true);
    }

    let chol = eval.neg_hessian.cholesky().ok_or(CoresetError::NotPositiveDefinite)?;
    let inv = chol.inverse();
    let covariance = (&inv + inv.transpose()) * 0.5;
    let factor = covariance.clone().cholesky().ok_or(CoresetError::NotPositiveDefinite)?.l();
    Ok(LaplaceApprox { mode: theta, covariance, factor, iterations })
}

/// Number of posterior draws and their random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProjectionConfig {
    pub samples: usize,
    pub seed: u64,
    pub trial: u64,
}

impl ProjectionConfig {
    /// Chooses `S` so that the embedding has about `target_dim` coordinates.
    pub fn for_dimension(param_dim: usize, target_dim: usize, seed: u64, trial: u64) -> Self {
        let samples = ((target_dim as f64 / param_dim.max(1) as f64).round() as usize).max(1);
        ProjectionConfig { samples, seed, trial }
    }

    pub fn embedding_dim(&self, param_dim: usize) -> usize {
        self.samples * param_dim
    }
}

/// Random feature projection: datum `n` maps to the concatenation over
/// `s = 1..S` of `∇L_n(θ_s) / sqrt(S)`, `θ_s ~ N(mode, covariance)`.
pub fn project(
    model: Model,
    data: &RegressionData,
    lap: &LaplaceApprox,
    cfg: &ProjectionConfig,
    exec: Execution,
) -> Result<CoresetProblem> {
    let k = data.dim + 1;
    if lap.mode.len() != k {
        return Err(CoresetError::DimensionMismatch { expected: k, got: lap.mode.len() });
    }
    if cfg.samples == 0 {
        return Err(CoresetError::InvalidData("projection needs at least one sample".into()));
    }
    let mut rng = stream(cfg.seed, cfg.trial, Purpose::Projection);
    let thetas: Vec<Vec<f64>> = (0..cfg.samples).map(|_| lap.sample(&mut rng)).collect();
    let scale = 1.0 / (cfg.samples as f64).sqrt();
    let width = cfg.samples * k;
    let mut rows = vec![0.0; data.len() * width];
    fill_chunks(&mut rows, width, exec, |n, out| {
        let y = data.targets[n];
        let x = data.features(n);
        for (s, theta) in thetas.iter().enumerate() {
            let g = scale * model.dlog_likelihood(y, data.linear(n, theta));
            let block = &mut out[s * k..(s + 1) * k];
            for (b, xi) in block.iter_mut().zip(x) {
                *b = g * xi;
            }
            block[k - 1] = g;
        }
    });
    CoresetProblem::from_row_major(rows, width)
}
