//! Greedy iterative geodesic ascent.
//!
//! The optimal radial scaling of a coreset reduces the construction to
//! maximizing `⟨ℓ(w), ℓ⟩` over nonnegative sparse `w` with `‖ℓ(w)‖ = 1`.
//! Each iteration picks the data direction whose geodesic from the current
//! iterate is best aligned with the geodesic towards `ℓ`, then line-searches
//! along it in closed form. The unit iterate `ℓ(w_t)` is cached alongside
//! `w_t` and refreshed from the weights every `refresh_every` iterations.

use log::warn;

use crate::captree::{search_objective, CapTree};
use crate::error::{CoresetError, Result};
use crate::exec::{argmax, Execution};
use crate::hilbert::{dot, norm_sq, zero_tol, CoresetProblem, WeightVector};

/// Distance outside `[0, 1]` beyond which a clamped step size is reported.
pub const GAMMA_CLAMP_WARN: f64 = 1e-9;

/// Residual norm `‖ℓ − ⟨ℓ, ℓ(w_t)⟩ℓ(w_t)‖` at which the run counts as
/// converged: the rounding level of a unit vector in `dim` coordinates.
pub fn residual_tol(dim: usize) -> f64 {
    4.0 * f64::EPSILON * (dim as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GigaOptions {
    pub exec: Execution,
    /// Answer the selection argmax with a cap-tree instead of a linear scan.
    pub use_captree: bool,
    /// Recompute `ℓ(w_t)` from `w_t` every this many iterations (0 disables).
    pub refresh_every: usize,
}

impl Default for GigaOptions {
    fn default() -> Self {
        GigaOptions { exec: Execution::default(), use_captree: false, refresh_every: 64 }
    }
}

/// Why an iteration did not produce an update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    /// `‖L‖ = 0`; the empty coreset is optimal.
    Trivial,
    /// The residual `ℓ − ⟨ℓ, ℓ(w_t)⟩ℓ(w_t)` vanished.
    Converged,
    /// No direction with positive alignment remains, or the step would not
    /// increase `⟨ℓ(w_t), ℓ⟩`.
    NoAscent,
    /// Line search denominator vanished (selected point coincides with the iterate).
    DegenerateStep,
    /// The updated iterate had (numerically) zero norm.
    CollapsedIterate,
}

/// Iterate `w_t` (in retained-vector indexing) with its cached unit image.
#[derive(Clone, Debug)]
pub struct GigaState {
    t: usize,
    w: WeightVector,
    ell_w: Vec<f64>,
    alignment: f64,
    j: f64,
}

impl GigaState {
    pub fn new(problem: &CoresetProblem) -> Self {
        GigaState {
            t: 0,
            w: WeightVector::new(),
            ell_w: vec![0.0; problem.dim()],
            alignment: 0.0,
            j: 1.0,
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Unnormalized-space weights are produced by [`finalize`]; these are the
    /// raw hyperspherical weights over retained vectors.
    pub fn weights(&self) -> &WeightVector {
        &self.w
    }

    pub fn ell_w(&self) -> &[f64] {
        &self.ell_w
    }

    /// `⟨ℓ(w_t), ℓ⟩`.
    pub fn alignment(&self) -> f64 {
        self.alignment
    }

    /// `J_t = 1 − ⟨ℓ(w_t), ℓ⟩²`, evaluated as `‖ℓ − ⟨ℓ(w_t), ℓ⟩ℓ(w_t)‖²`.
    pub fn j(&self) -> f64 {
        self.j
    }
}

/// Per-iteration intermediates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationTrace {
    /// Selected vector, original input indexing.
    pub index: usize,
    /// Selected vector, retained indexing.
    pub position: usize,
    /// `⟨d_t, d_{t n_t}⟩`.
    pub score: f64,
    pub zeta0: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub gamma: f64,
    pub clamped: bool,
}

/// State summary recorded after each update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    /// Iteration count after the update.
    pub t: usize,
    pub index: usize,
    pub gamma: f64,
    pub alignment: f64,
    pub j: f64,
    pub support: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub position: usize,
    pub score: f64,
}

fn residual_direction(problem: &CoresetProblem, state: &GigaState) -> std::result::Result<Vec<f64>, Stop> {
    let ell = problem.unit_target().as_slice();
    let zeta1 = dot(ell, &state.ell_w);
    let mut r: Vec<f64> = ell.iter().zip(&state.ell_w).map(|(a, b)| a - zeta1 * b).collect();
    let rn = norm_sq(&r).sqrt();
    if rn <= residual_tol(problem.dim()) {
        return Err(Stop::Converged);
    }
    r.iter_mut().for_each(|x| *x /= rn);
    Ok(r)
}

/// Chooses `n_t = argmax_n ⟨d_t, d_tn⟩`, lowest index on ties.
///
/// With a cap-tree the returned score matches the linear scan to rounding.
pub fn select(
    problem: &CoresetProblem,
    state: &GigaState,
    searcher: Option<&CapTree>,
    exec: Execution,
) -> std::result::Result<Selection, Stop> {
    if problem.is_trivial() {
        return Err(Stop::Trivial);
    }
    let d_t = residual_direction(problem, state)?;
    let units = problem.unit_vectors();
    let v = &state.ell_w;
    let (position, score) = match searcher {
        Some(tree) => tree.search(units, &d_t, v),
        None => argmax(units.rows(), exec, |n| search_objective(units.row(n), &d_t, v))
            .ok_or(Stop::NoAscent)?,
    };
    if score <= 0.0 {
        return Err(Stop::NoAscent);
    }
    Ok(Selection { index: problem.original_index(position), position, score })
}

/// Closed-form line search `γ = (ζ₀ − ζ₁ζ₂) / ((ζ₀ − ζ₁ζ₂) + (ζ₁ − ζ₀ζ₂))`,
/// clamped to `[0, 1]`. Returns `(γ, clamped)` where `clamped` flags a raw
/// value more than [`GAMMA_CLAMP_WARN`] outside the interval.
pub fn step_size(zeta0: f64, zeta1: f64, zeta2: f64, tol: f64) -> std::result::Result<(f64, bool), Stop> {
    line_search(zeta0 - zeta1 * zeta2, zeta1 - zeta0 * zeta2, tol)
}

/// The same step from tangent components at the iterate `x = ℓ(w_t)`:
/// with `r = ℓ − ζ₁x` and `q = ℓ_n − ζ₂x`, `ζ₀ − ζ₁ζ₂ = ⟨r, q⟩` and
/// `ζ₁ − ζ₀ζ₂ = ζ₁‖q‖² − ζ₂⟨r, q⟩`. Near convergence the ζ are all close
/// to 1 and the differences above cancel; these forms do not.
pub fn tangent_step_size(r: &[f64], q: &[f64], zeta1: f64, zeta2: f64, tol: f64) -> std::result::Result<(f64, bool), Stop> {
    let rq = dot(r, q);
    line_search(rq, zeta1 * norm_sq(q) - zeta2 * rq, tol)
}

fn line_search(a: f64, b: f64, tol: f64) -> std::result::Result<(f64, bool), Stop> {
    let denom = a + b;
    if denom <= tol {
        return Err(Stop::DegenerateStep);
    }
    let raw = a / denom;
    let clamped = !(-GAMMA_CLAMP_WARN..=1.0 + GAMMA_CLAMP_WARN).contains(&raw);
    if clamped {
        warn!("line search step {raw} outside [0, 1]; clamping");
    }
    Ok((raw.clamp(0.0, 1.0), clamped))
}

/// Moves the iterate along the geodesic towards `ℓ_{n_t}` by `γ`.
///
/// Both the cached unit iterate and the weights are divided by the norm of
/// `(1 − γ)ℓ(w_t) + γℓ_{n_t}`.
pub fn update(problem: &CoresetProblem, state: &GigaState, position: usize, gamma: f64) -> Result<GigaState> {
    let ell_n = problem.unit_vectors().row(position);
    let mut x: Vec<f64> = state
        .ell_w
        .iter()
        .zip(ell_n)
        .map(|(a, b)| (1.0 - gamma) * a + gamma * b)
        .collect();
    let nx = norm_sq(&x).sqrt();
    if nx <= zero_tol(problem.dim()) {
        return Err(CoresetError::CollapsedIterate { norm: nx });
    }
    x.iter_mut().for_each(|c| *c /= nx);
    let mut w = state.w.clone();
    w.scale((1.0 - gamma) / nx);
    w.add(position, gamma / nx);
    let (alignment, j) = alignment_and_gap(problem, &x);
    Ok(GigaState { t: state.t + 1, w, ell_w: x, alignment, j })
}

/// `(⟨x, ℓ⟩, ‖ℓ − ⟨x, ℓ⟩x‖²)`; the second equals `1 − ⟨x, ℓ⟩²` for unit `x`
/// but keeps full relative precision as it approaches zero.
fn alignment_and_gap(problem: &CoresetProblem, x: &[f64]) -> (f64, f64) {
    let ell = problem.unit_target().as_slice();
    let alignment = dot(x, ell);
    let gap = ell.iter().zip(x).map(|(l, xi)| (l - alignment * xi).powi(2)).sum();
    (alignment, gap)
}

/// Recomputes `ℓ(w)` from the weights and renormalizes both.
fn refresh(problem: &CoresetProblem, state: &mut GigaState) {
    let units = problem.unit_vectors();
    let mut x = vec![0.0; problem.dim()];
    for (k, wk) in state.w.iter() {
        x.iter_mut().zip(units.row(k)).for_each(|(a, b)| *a += wk * b);
    }
    let nx = norm_sq(&x).sqrt();
    if nx <= zero_tol(problem.dim()) {
        return;
    }
    x.iter_mut().for_each(|c| *c /= nx);
    state.w.scale(1.0 / nx);
    (state.alignment, state.j) = alignment_and_gap(problem, &x);
    state.ell_w = x;
}

/// Converts hyperspherical weights to weights on the original vectors with
/// the optimal scaling `α* = (‖L‖/‖L(w)‖)·max{0, ⟨L(w)/‖L(w)‖, ℓ⟩}`.
///
/// `ℓ(w)` is recomputed from the weights here, so the scaling is exact for
/// the returned weights even if the cached iterate has drifted.
pub fn finalize(state: &GigaState, problem: &CoresetProblem) -> WeightVector {
    if problem.is_trivial() || state.w.is_empty() {
        return WeightVector::new();
    }
    let units = problem.unit_vectors();
    let mut x = vec![0.0; problem.dim()];
    for (k, wk) in state.w.iter() {
        x.iter_mut().zip(units.row(k)).for_each(|(a, b)| *a += wk * b);
    }
    let nx = norm_sq(&x).sqrt();
    if nx <= zero_tol(problem.dim()) {
        return WeightVector::new();
    }
    let alignment = (dot(&x, problem.unit_target().as_slice()) / nx).max(0.0);
    if alignment == 0.0 {
        return WeightVector::new();
    }
    let scale = problem.target_norm() * alignment / nx;
    let norms = problem.norms();
    let mut out = WeightVector::new();
    for (k, wk) in state.w.iter() {
        out.add(problem.original_index(k), wk * scale / norms[k]);
    }
    out
}

/// Stateful driver: step until the budget or a stop condition.
pub struct Giga<'p> {
    problem: &'p CoresetProblem,
    opts: GigaOptions,
    state: GigaState,
    tree: Option<CapTree>,
    traces: Vec<IterationTrace>,
    records: Vec<IterationRecord>,
    stop: Option<Stop>,
}

impl<'p> Giga<'p> {
    pub fn new(problem: &'p CoresetProblem, opts: GigaOptions) -> Self {
        let tree = if opts.use_captree && !problem.is_empty() {
            CapTree::build(problem.unit_vectors()).ok()
        } else {
            None
        };
        let stop = problem.is_trivial().then_some(Stop::Trivial);
        Giga {
            problem,
            opts,
            state: GigaState::new(problem),
            tree,
            traces: Vec::new(),
            records: Vec::new(),
            stop,
        }
    }

    /// Runs one iteration; returns `false` once stopped.
    pub fn step(&mut self) -> bool {
        if self.stop.is_some() {
            return false;
        }
        match self.try_step() {
            Ok(()) => true,
            Err(stop) => {
                self.stop = Some(stop);
                false
            }
        }
    }

    fn try_step(&mut self) -> std::result::Result<(), Stop> {
        let problem = self.problem;
        let sel = select(problem, &self.state, self.tree.as_ref(), self.opts.exec)?;
        let ell = problem.unit_target().as_slice();
        let ell_n = problem.unit_vectors().row(sel.position);
        let zeta0 = dot(ell, ell_n);
        let zeta1 = dot(ell, &self.state.ell_w);
        let zeta2 = dot(ell_n, &self.state.ell_w);
        let x = &self.state.ell_w;
        let r: Vec<f64> = ell.iter().zip(x).map(|(l, xi)| l - zeta1 * xi).collect();
        let q: Vec<f64> = ell_n.iter().zip(x).map(|(l, xi)| l - zeta2 * xi).collect();
        let (gamma, clamped) = tangent_step_size(&r, &q, zeta1, zeta2, zero_tol(problem.dim()))?;
        if gamma <= 0.0 {
            return Err(Stop::NoAscent);
        }
        let mut next =
            update(problem, &self.state, sel.position, gamma).map_err(|_| Stop::CollapsedIterate)?;
        if self.state.t > 0 && next.j > self.state.j {
            return Err(Stop::NoAscent);
        }
        if self.opts.refresh_every > 0 && next.t % self.opts.refresh_every == 0 {
            refresh(problem, &mut next);
        }
        self.state = next;
        self.traces.push(IterationTrace {
            index: sel.index,
            position: sel.position,
            score: sel.score,
            zeta0,
            zeta1,
            zeta2,
            gamma,
            clamped,
        });
        self.records.push(IterationRecord {
            t: self.state.t,
            index: sel.index,
            gamma,
            alignment: self.state.alignment,
            j: self.state.j,
            support: self.state.w.len(),
        });
        Ok(())
    }

    /// Steps until `t == m` or a stop condition.
    pub fn run_until(&mut self, m: usize) {
        while self.state.t < m && self.step() {}
    }

    pub fn state(&self) -> &GigaState {
        &self.state
    }

    pub fn traces(&self) -> &[IterationTrace] {
        &self.traces
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn stop_reason(&self) -> Option<Stop> {
        self.stop
    }

    /// `η = sqrt(J₁)`, available after the first iteration.
    pub fn eta(&self) -> Option<f64> {
        self.records.first().map(|r| r.j.max(0.0).sqrt())
    }

    pub fn finalize(&self) -> WeightVector {
        finalize(&self.state, self.problem)
    }
}

/// Output of a complete run.
#[derive(Clone, Debug)]
pub struct GigaOutput {
    pub weights: WeightVector,
    pub records: Vec<IterationRecord>,
    pub traces: Vec<IterationTrace>,
    pub stop: Option<Stop>,
    pub eta: Option<f64>,
}

/// Runs up to `m` iterations with default options and returns optimally scaled weights.
pub fn run(problem: &CoresetProblem, m: usize) -> GigaOutput {
    run_with(problem, m, GigaOptions::default())
}

pub fn run_with(problem: &CoresetProblem, m: usize, opts: GigaOptions) -> GigaOutput {
    let mut giga = Giga::new(problem, opts);
    giga.run_until(m);
    GigaOutput {
        weights: giga.finalize(),
        eta: giga.eta(),
        stop: giga.stop,
        records: giga.records,
        traces: giga.traces,
    }
}
