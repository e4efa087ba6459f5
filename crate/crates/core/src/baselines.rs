//! Simplex-constrained baselines: Frank–Wolfe, importance sampling and
//! uniform subsampling.
//!
//! All three keep `Σ σ_n w_n = σ` (uniform subsampling keeps `Σ w_n = N`
//! instead), which is the scaling the geodesic method avoids.

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};

use crate::exec::{argmax, Execution};
use crate::hilbert::{dot, norm_sq, CoresetProblem, WeightVector};
use crate::rng::{stream, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    FrankWolfe,
    ImportanceSampling,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BaselineConfig {
    pub method: Method,
    pub budget: usize,
    pub seed: u64,
}

impl BaselineConfig {
    /// Runs the configured construction. `trial` selects the random stream.
    pub fn construct(&self, problem: &CoresetProblem, trial: u64) -> WeightVector {
        assert!(self.budget >= 1, "budget must be at least 1");
        match self.method {
            Method::FrankWolfe => fw_coreset(problem, self.budget, Execution::default()).weights,
            Method::ImportanceSampling => is_coreset(problem, self.budget, self.seed, trial),
            Method::Uniform => rnd_coreset(problem, self.budget, self.seed, trial),
        }
    }
}

/// Per-iteration Frank–Wolfe summary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FwRecord {
    pub t: usize,
    pub index: usize,
    pub gamma: f64,
    /// `‖L(w_t) − L‖²`.
    pub objective: f64,
    pub support: usize,
}

#[derive(Clone, Debug)]
pub struct FwOutput {
    pub weights: WeightVector,
    pub records: Vec<FwRecord>,
}

/// Frank–Wolfe with exact line search on the polytope with vertices
/// `v_n = (σ/σ_n) L_n = σ ℓ_n`.
pub struct FrankWolfe<'p> {
    problem: &'p CoresetProblem,
    exec: Execution,
    w: WeightVector,
    approx: Vec<f64>,
    records: Vec<FwRecord>,
    stopped: bool,
}

impl<'p> FrankWolfe<'p> {
    pub fn new(problem: &'p CoresetProblem, exec: Execution) -> Self {
        FrankWolfe {
            problem,
            exec,
            w: WeightVector::new(),
            approx: vec![0.0; problem.dim()],
            records: Vec::new(),
            stopped: problem.is_trivial(),
        }
    }

    pub fn t(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[FwRecord] {
        &self.records
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    fn objective(&self) -> f64 {
        self.approx
            .iter()
            .zip(self.problem.target().as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// One FW iteration; the first call places all mass on the vertex most
    /// aligned with `L`. Returns `false` once no further progress is possible.
    pub fn step(&mut self) -> bool {
        if self.stopped {
            return false;
        }
        let p = self.problem;
        let units = p.unit_vectors();
        let sigma = p.sigma_total();
        let (k, gamma) = if self.w.is_empty() {
            let ell = p.unit_target().as_slice();
            let (k, _) = argmax(units.rows(), self.exec, |n| dot(units.row(n), ell))
                .expect("non-trivial problem has vectors");
            (k, 1.0)
        } else {
            let residual: Vec<f64> = p
                .target()
                .as_slice()
                .iter()
                .zip(&self.approx)
                .map(|(l, a)| l - a)
                .collect();
            let (k, _) = argmax(units.rows(), self.exec, |n| dot(units.row(n), &residual))
                .expect("non-trivial problem has vectors");
            let dir: Vec<f64> = units
                .row(k)
                .iter()
                .zip(&self.approx)
                .map(|(u, a)| sigma * u - a)
                .collect();
            let denom = norm_sq(&dir);
            let numer = dot(&dir, &residual);
            if denom <= f64::EPSILON * sigma * sigma || numer <= 0.0 {
                self.stopped = true;
                return false;
            }
            (k, (numer / denom).clamp(0.0, 1.0))
        };

        self.w.scale(1.0 - gamma);
        self.w.add(k, gamma * sigma / p.norms()[k]);
        let vertex = units.row(k);
        self.approx
            .iter_mut()
            .zip(vertex)
            .for_each(|(a, u)| *a = (1.0 - gamma) * *a + gamma * sigma * u);
        self.records.push(FwRecord {
            t: self.records.len() + 1,
            index: p.original_index(k),
            gamma,
            objective: self.objective(),
            support: self.w.len(),
        });
        true
    }

    pub fn run_until(&mut self, m: usize) {
        while self.t() < m && self.step() {}
    }

    /// Current weights in original indexing.
    pub fn weights(&self) -> WeightVector {
        self.problem.to_original(&self.w)
    }

    /// `Σ σ_n w_n`, which stays at `σ`.
    pub fn simplex_mass(&self) -> f64 {
        self.w.iter().map(|(k, w)| w * self.problem.norms()[k]).sum()
    }
}

pub fn fw_coreset(problem: &CoresetProblem, m: usize, exec: Execution) -> FwOutput {
    let mut fw = FrankWolfe::new(problem, exec);
    fw.run_until(m);
    FwOutput { weights: fw.weights(), records: fw.records }
}

fn multiplicity_weights(
    problem: &CoresetProblem,
    draws: impl Iterator<Item = usize>,
    weight_of: impl Fn(usize) -> f64,
) -> WeightVector {
    let mut counts = vec![0u32; problem.len()];
    for k in draws {
        counts[k] += 1;
    }
    let mut w = WeightVector::new();
    for (k, &c) in counts.iter().enumerate() {
        if c > 0 {
            w.add(problem.original_index(k), c as f64 * weight_of(k));
        }
    }
    w
}

/// Draws `m` indices i.i.d. with probability `σ_n/σ`; `w_n = m_n σ / (m σ_n)`.
pub fn is_coreset(problem: &CoresetProblem, m: usize, seed: u64, trial: u64) -> WeightVector {
    if problem.is_empty() || m == 0 {
        return WeightVector::new();
    }
    let mut rng = stream(seed, trial, Purpose::ImportanceSampling);
    let dist = WeightedIndex::new(problem.norms()).expect("norms are positive");
    let sigma = problem.sigma_total();
    let norms = problem.norms();
    let draws = (0..m).map(|_| dist.sample(&mut rng)).collect::<Vec<_>>();
    multiplicity_weights(problem, draws.into_iter(), |k| sigma / (m as f64 * norms[k]))
}

/// Draws `m` indices uniformly with replacement; `w_n = m_n N / m`.
pub fn rnd_coreset(problem: &CoresetProblem, m: usize, seed: u64, trial: u64) -> WeightVector {
    if problem.is_empty() || m == 0 {
        return WeightVector::new();
    }
    let n = problem.len();
    let mut rng = stream(seed, trial, Purpose::UniformSampling);
    let dist = Uniform::new(0, n).expect("non-empty range");
    let draws = (0..m).map(|_| dist.sample(&mut rng)).collect::<Vec<_>>();
    multiplicity_weights(problem, draws.into_iter(), |_| n as f64 / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::build_problem;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn axis_problem(n: usize) -> CoresetProblem {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0 / n as f64;
        }
        CoresetProblem::from_row_major(data, n).unwrap()
    }

    fn random_problem(seed: u64, n: usize, dim: usize) -> CoresetProblem {
        let mut rng = stream(seed, 0, Purpose::Fuzz);
        let scale: f64 = rng.random_range(0.1..10.0);
        let data: Vec<f64> = (0..n * dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        CoresetProblem::from_row_major(data, dim).unwrap()
    }

    #[test]
    fn fw_axis_two_iterations() {
        let p = axis_problem(4);
        let out = fw_coreset(&p, 2, Execution::Sequential);
        assert_eq!(out.weights.len(), 2);
        assert!((out.weights.get(0) - 2.0).abs() < 1e-12);
        assert!((out.weights.get(1) - 2.0).abs() < 1e-12);
        assert!((out.records[1].gamma - 0.5).abs() < 1e-15);
        let approx = p.weighted_sum(&out.weights, false).unwrap();
        for (a, b) in approx.as_slice().iter().zip([0.5, 0.5, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((p.relative_error(&out.weights).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fw_single_vector_is_exact() {
        let p = build_problem(&[vec![0.5, -2.0]]).unwrap();
        let out = fw_coreset(&p, 3, Execution::Sequential);
        assert!((out.weights.get(0) - 1.0).abs() < 1e-12);
        assert!(p.relative_error(&out.weights).unwrap() < 1e-12);
    }

    #[test]
    fn fw_keeps_simplex_mass_and_decreases_objective() {
        for seed in 0..100 {
            let p = random_problem(seed, 40, 5);
            let mut fw = FrankWolfe::new(&p, Execution::Sequential);
            let mut last = f64::INFINITY;
            for _ in 0..25 {
                if !fw.step() {
                    break;
                }
                let sigma = p.sigma_total();
                assert!((fw.simplex_mass() - sigma).abs() <= 1e-8 * sigma);
                let obj = fw.records().last().unwrap().objective;
                assert!(obj <= last * (1.0 + 1e-12) + 1e-18);
                last = obj;
            }
            assert!(fw.weights().len() <= 25);
        }
    }

    #[test]
    fn sampling_single_vector() {
        let p = build_problem(&[vec![1.0, 1.0]]).unwrap();
        for m in [1, 3, 10] {
            assert!((is_coreset(&p, m, 1, 0).get(0) - 1.0).abs() < 1e-12);
            assert!((rnd_coreset(&p, m, 1, 0).get(0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn is_weights_on_axis_are_n_over_m_times_multiplicity() {
        let n = 10;
        let m = 4;
        let p = axis_problem(n);
        let w = is_coreset(&p, m, 9, 2);
        for (_, x) in w.iter() {
            let mult = x * m as f64 / n as f64;
            assert!((mult - mult.round()).abs() < 1e-12 && mult.round() >= 1.0);
        }
        assert!((w.sum() - n as f64).abs() < 1e-12);
    }

    #[test]
    fn rnd_weights_sum_to_n() {
        let p = random_problem(4, 37, 3);
        for m in [1, 5, 37, 100] {
            let w = rnd_coreset(&p, m, 42, 0);
            assert!((w.sum() - 37.0).abs() <= 1e-12 * 37.0);
            assert!(w.len() <= m);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let p = random_problem(8, 50, 3);
        assert_eq!(is_coreset(&p, 7, 3, 1), is_coreset(&p, 7, 3, 1));
        assert_ne!(rnd_coreset(&p, 7, 3, 1), rnd_coreset(&p, 7, 3, 2));
    }
}
