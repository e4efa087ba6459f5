#![allow(dead_code)]

use coreset_core::CoresetProblem;
use rand::Rng;
use rand_distr::StandardNormal;

/// Random problem with mixed signs and per-vector scales spanning six
/// decades; some instances include zero rows, duplicates or a shared bias.
pub fn fuzz_problem(rng: &mut impl Rng, max_n: usize, max_dim: usize) -> CoresetProblem {
    let n = rng.random_range(1..=max_n);
    let dim = rng.random_range(1..=max_dim);
    let bias: Vec<f64> = if rng.random_bool(0.5) {
        (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    } else {
        vec![0.0; dim]
    };
    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        if i > 0 && rng.random_bool(0.05) {
            let j = rng.random_range(0..i);
            let copy: Vec<f64> = data[j * dim..(j + 1) * dim].to_vec();
            data.extend(copy);
            continue;
        }
        if rng.random_bool(0.03) {
            data.extend(std::iter::repeat_n(0.0, dim));
            continue;
        }
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        for b in &bias {
            data.push(scale * (b + rng.sample::<f64, _>(StandardNormal)));
        }
    }
    if data.iter().all(|x| *x == 0.0) {
        data[0] = 1.0;
    }
    CoresetProblem::from_row_major(data, dim).unwrap()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unit vectors `(u, v)` with `⟨u, v⟩ = 0`.
pub fn orthonormal_pair(rng: &mut impl Rng, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let nu = norm(&u);
    u.iter_mut().for_each(|x| *x /= nu);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let c = dot(&u, &v);
    v.iter_mut().zip(&u).for_each(|(a, b)| *a -= c * b);
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    (u, v)
}

/// Row-major unit vectors drawn around a few random centres.
pub fn clustered_units(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<f64> {
    let clusters = rng.random_range(1..=6);
    let centres: Vec<Vec<f64>> =
        (0..clusters).map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let spread = 10f64.powf(rng.random_range(-2.0..0.5));
    let mut out = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let c = &centres[rng.random_range(0..clusters)];
        let x: Vec<f64> = c.iter().map(|ci| ci + spread * rng.sample::<f64, _>(StandardNormal)).collect();
        let nx = norm(&x);
        out.extend(x.iter().map(|xi| xi / nx));
    }
    out
}
