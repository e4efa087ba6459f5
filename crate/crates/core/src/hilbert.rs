//! Vector primitives and the coreset problem container.
//!
//! All geometry is Euclidean on embedded coordinates; model-specific inner
//! products are absorbed into the embedding (see [`crate::embeddings`]).

use std::collections::BTreeMap;

use crate::error::{CoresetError, Result};

/// Scale-aware threshold below which a vector is treated as zero.
pub fn zero_tol(dim: usize) -> f64 {
    1e-12 * (dim.max(1) as f64).sqrt()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// A finite real vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(CoresetError::InvalidVector { row: 0 });
        }
        Ok(DenseVector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        DenseVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for DenseVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(CoresetError::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    Ok(())
}

pub fn inner(u: &DenseVector, v: &DenseVector) -> Result<f64> {
    check_dims(&u.0, &v.0)?;
    Ok(dot(&u.0, &v.0))
}

pub fn norm(u: &DenseVector) -> f64 {
    norm_sq(&u.0).sqrt()
}

/// `u / ‖u‖`, or the zero vector when `‖u‖ <= zero_tol(dim)`.
pub fn safe_normalize(u: &DenseVector) -> DenseVector {
    let n = norm(u);
    if n <= zero_tol(u.dim()) {
        DenseVector::zeros(u.dim())
    } else {
        DenseVector(u.0.iter().map(|x| x / n).collect())
    }
}

/// Dense row-major storage for `rows` vectors of length `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowMatrix {
    data: Vec<f64>,
    dim: usize,
    rows: usize,
}

impl RowMatrix {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            if !data.is_empty() {
                return Err(CoresetError::DimensionMismatch { expected: 0, got: data.len() });
            }
            return Ok(RowMatrix { data, dim, rows: 0 });
        }
        if !data.len().is_multiple_of(dim) {
            return Err(CoresetError::DimensionMismatch {
                expected: dim,
                got: data.len() % dim,
            });
        }
        let rows = data.len() / dim;
        Ok(RowMatrix { data, dim, rows })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Sparse nonnegative weights. Only strictly positive entries are stored,
/// so `len()` is the cardinality `‖w‖₀`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightVector {
    entries: BTreeMap<usize, f64>,
}

impl WeightVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from `(index, weight)` pairs. Zero weights are skipped; repeated
    /// indices accumulate.
    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Result<Self> {
        let mut w = WeightVector::new();
        for (index, weight) in pairs {
            if !weight.is_finite() || weight < 0.0 {
                return Err(CoresetError::InvalidWeight { index, weight });
            }
            w.add(index, weight);
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries.get(&index).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&i, &w)| (i, w))
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    /// Adds `delta` (nonnegative) to entry `index`.
    pub(crate) fn add(&mut self, index: usize, delta: f64) {
        debug_assert!(delta >= 0.0);
        if delta > 0.0 {
            *self.entries.entry(index).or_insert(0.0) += delta;
        }
    }

    /// Multiplies every weight by `factor >= 0`, dropping entries that vanish.
    pub(crate) fn scale(&mut self, factor: f64) {
        debug_assert!(factor >= 0.0);
        if factor == 0.0 {
            self.entries.clear();
            return;
        }
        for w in self.entries.values_mut() {
            *w *= factor;
        }
        self.entries.retain(|_, w| *w > 0.0);
    }

    pub fn scaled(&self, factor: f64) -> WeightVector {
        let mut w = self.clone();
        w.scale(factor);
        w
    }

    /// Entrywise sum of two weight vectors.
    pub fn plus(&self, other: &WeightVector) -> WeightVector {
        let mut w = self.clone();
        for (i, x) in other.iter() {
            w.add(i, x);
        }
        w
    }

    pub(crate) fn map_indices(&self, f: impl Fn(usize) -> usize) -> WeightVector {
        let mut out = WeightVector::new();
        for (i, w) in self.iter() {
            out.add(f(i), w);
        }
        out
    }
}

/// Vectors `L_n`, their norms, the target sum `L`, and the unit-normalized
/// counterparts. Zero-norm inputs are dropped at construction; every public
/// weight vector is expressed in the original input indexing.
#[derive(Clone, Debug)]
pub struct CoresetProblem {
    dim: usize,
    original_len: usize,
    kept: Vec<usize>,
    position: Vec<Option<usize>>,
    vectors: RowMatrix,
    norms: Vec<f64>,
    sigma_total: f64,
    target: DenseVector,
    target_norm: f64,
    unit_vectors: RowMatrix,
    unit_target: DenseVector,
    trivial: bool,
}

/// Builds a problem from a list of equal-length vectors.
pub fn build_problem<V: AsRef<[f64]>>(vectors: &[V]) -> Result<CoresetProblem> {
    let first = vectors.first().ok_or(CoresetError::EmptyProblem)?;
    let dim = first.as_ref().len();
    let mut data = Vec::with_capacity(vectors.len() * dim);
    for v in vectors {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(CoresetError::DimensionMismatch { expected: dim, got: v.len() });
        }
        data.extend_from_slice(v);
    }
    CoresetProblem::from_row_major(data, dim)
}

impl CoresetProblem {
    /// Builds a problem from row-major data with `dim` columns.
    pub fn from_row_major(data: Vec<f64>, dim: usize) -> Result<Self> {
        let input = RowMatrix::new(data, dim)?;
        let original_len = input.rows();
        if original_len == 0 {
            return Err(CoresetError::EmptyProblem);
        }
        let mut kept = Vec::new();
        let mut position = vec![None; original_len];
        let mut norms = Vec::new();
        let mut target = vec![0.0; dim];
        for (i, slot) in position.iter_mut().enumerate() {
            let row = input.row(i);
            if row.iter().any(|x| !x.is_finite()) {
                return Err(CoresetError::InvalidVector { row: i });
            }
            let sigma = norm_sq(row).sqrt();
            if sigma > 0.0 {
                *slot = Some(kept.len());
                kept.push(i);
                norms.push(sigma);
                for (t, x) in target.iter_mut().zip(row) {
                    *t += x;
                }
            }
        }

        let (vectors, unit_vectors) = if kept.len() == original_len {
            let mut unit = input.as_slice().to_vec();
            for (i, chunk) in unit.chunks_mut(dim.max(1)).enumerate().take(original_len) {
                chunk.iter_mut().for_each(|x| *x /= norms[i]);
            }
            (input.clone(), RowMatrix::new(unit, dim)?)
        } else {
            let mut raw = Vec::with_capacity(kept.len() * dim);
            let mut unit = Vec::with_capacity(kept.len() * dim);
            for (k, &i) in kept.iter().enumerate() {
                raw.extend_from_slice(input.row(i));
                unit.extend(input.row(i).iter().map(|x| x / norms[k]));
            }
            (RowMatrix::new(raw, dim)?, RowMatrix::new(unit, dim)?)
        };

        let sigma_total: f64 = norms.iter().sum();
        let target_norm = norm_sq(&target).sqrt();
        assert!(
            target_norm <= sigma_total * (1.0 + 1e-12) + f64::MIN_POSITIVE,
            "triangle inequality violated: ‖L‖ = {target_norm}, σ = {sigma_total}"
        );
        let trivial = kept.is_empty() || target_norm <= zero_tol(dim) * sigma_total;
        let unit_target = if trivial {
            vec![0.0; dim]
        } else {
            target.iter().map(|x| x / target_norm).collect()
        };

        Ok(CoresetProblem {
            dim,
            original_len,
            kept,
            position,
            vectors,
            norms,
            sigma_total,
            target: DenseVector(target),
            target_norm,
            unit_vectors,
            unit_target: DenseVector(unit_target),
            trivial,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of retained (nonzero) vectors.
    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    /// Number of vectors originally supplied, including dropped zeros.
    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// When set, `w = 0` is optimal and constructions return empty weights.
    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn sigma_total(&self) -> f64 {
        self.sigma_total
    }

    pub fn target(&self) -> &DenseVector {
        &self.target
    }

    pub fn target_norm(&self) -> f64 {
        self.target_norm
    }

    pub fn unit_target(&self) -> &DenseVector {
        &self.unit_target
    }

    pub fn vectors(&self) -> &RowMatrix {
        &self.vectors
    }

    pub fn unit_vectors(&self) -> &RowMatrix {
        &self.unit_vectors
    }

    /// Original input index of retained vector `k`.
    pub fn original_index(&self, k: usize) -> usize {
        self.kept[k]
    }

    /// Retained position of original index `i`, `None` if it was dropped.
    pub fn kept_position(&self, i: usize) -> Option<usize> {
        self.position.get(i).copied().flatten()
    }

    pub(crate) fn to_original(&self, w: &WeightVector) -> WeightVector {
        w.map_indices(|k| self.kept[k])
    }

    /// `Σ w_n L_n` (or `Σ w_n ℓ_n` when `normalized`), with `w` in original indexing.
    pub fn weighted_sum(&self, w: &WeightVector, normalized: bool) -> Result<DenseVector> {
        let source = if normalized { &self.unit_vectors } else { &self.vectors };
        let mut out = vec![0.0; self.dim];
        for (i, weight) in w.iter() {
            if i >= self.original_len {
                return Err(CoresetError::IndexOutOfRange { index: i, len: self.original_len });
            }
            if let Some(k) = self.position[i] {
                for (o, x) in out.iter_mut().zip(source.row(k)) {
                    *o += weight * x;
                }
            }
        }
        Ok(DenseVector(out))
    }

    /// `‖L(w) − L‖ / ‖L‖`; the absolute error `‖L(w)‖` for trivial problems.
    pub fn relative_error(&self, w: &WeightVector) -> Result<f64> {
        let approx = self.weighted_sum(w, false)?;
        let err = approx
            .0
            .iter()
            .zip(&self.target.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if self.trivial {
            Ok(err)
        } else {
            Ok(err / self.target_norm)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn two_orthogonal_vectors() {
        let p = build_problem(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(p.norms(), &[1.0, 1.0]);
        assert_eq!(p.sigma_total(), 2.0);
        assert_eq!(p.target().as_slice(), &[1.0, 1.0]);
        assert!(close(p.target_norm(), 2f64.sqrt(), 1e-15));
        assert!(!p.is_trivial());
    }

    #[test]
    fn zero_vectors_are_dropped_with_remap() {
        let p = build_problem(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.original_len(), 2);
        assert_eq!(p.original_index(0), 1);
        assert_eq!(p.kept_position(1), Some(0));
        assert_eq!(p.kept_position(0), None);
        assert_eq!(p.target().as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn axis_construction_norms() {
        let n = 4;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 / n as f64 } else { 0.0 }).collect())
            .collect();
        let p = build_problem(&rows).unwrap();
        assert!(p.norms().iter().all(|&s| s == 0.25));
        assert!(close(p.sigma_total(), 1.0, 1e-15));
        assert!(close(p.target_norm(), 0.5, 1e-15));
    }

    #[test]
    fn construction_errors() {
        let empty: Vec<Vec<f64>> = vec![];
        assert_eq!(build_problem(&empty).unwrap_err(), CoresetError::EmptyProblem);
        let err = build_problem(&[vec![1.0, 0.0], vec![f64::NAN, 1.0]]).unwrap_err();
        assert_eq!(err, CoresetError::InvalidVector { row: 1 });
        assert!(err.to_string().contains("invalid vector"));
        assert!(matches!(
            build_problem(&[vec![1.0], vec![1.0, 2.0]]),
            Err(CoresetError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cancelling_vectors_give_trivial_problem() {
        let p = build_problem(&[vec![1.0, 2.0], vec![-1.0, -2.0]]).unwrap();
        assert!(p.is_trivial());
        let all_zero = build_problem(&[vec![0.0, 0.0]]).unwrap();
        assert!(all_zero.is_trivial());
        assert!(all_zero.is_empty());
    }

    #[test]
    fn weighted_sums() {
        let p = build_problem(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let empty = p.weighted_sum(&WeightVector::new(), false).unwrap();
        assert_eq!(empty.as_slice(), &[0.0, 0.0]);
        let both = WeightVector::from_pairs([(0, 1.0), (1, 1.0)]).unwrap();
        assert_eq!(p.weighted_sum(&both, false).unwrap().as_slice(), &[1.0, 1.0]);
        let one = WeightVector::from_pairs([(0, 2.0)]).unwrap();
        assert_eq!(p.weighted_sum(&one, false).unwrap().as_slice(), &[2.0, 0.0]);
        let bad = WeightVector::from_pairs([(5, 1.0)]).unwrap();
        assert!(matches!(
            p.weighted_sum(&bad, true),
            Err(CoresetError::IndexOutOfRange { index: 5, len: 2 })
        ));
    }

    #[test]
    fn inner_norm_normalize() {
        let e0 = DenseVector::new(vec![1.0, 0.0]).unwrap();
        let e1 = DenseVector::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(inner(&e0, &e1).unwrap(), 0.0);
        assert_eq!(safe_normalize(&DenseVector::zeros(2)).as_slice(), &[0.0, 0.0]);
        let v = safe_normalize(&DenseVector::new(vec![3.0, 4.0]).unwrap());
        assert!(close(v.as_slice()[0], 0.6, 1e-15) && close(v.as_slice()[1], 0.8, 1e-15));
        let short = DenseVector::new(vec![1.0]).unwrap();
        assert!(matches!(inner(&e0, &short), Err(CoresetError::DimensionMismatch { .. })));
        assert!(DenseVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn weight_vector_drops_zero_entries() {
        let w = WeightVector::from_pairs([(3, 0.0), (1, 2.0), (1, 1.0)]).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.get(1), 3.0);
        assert!(WeightVector::from_pairs([(0, -1.0)]).is_err());
        assert!(w.scaled(0.0).is_empty());
    }

    fn problem_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
        (1usize..6, 1usize..12).prop_flat_map(|(dim, n)| {
            (
                Just(dim),
                prop::collection::vec(
                    (-1e3f64..1e3).prop_map(|x| if x.abs() < 1e2 { x * 1e-3 } else { x }),
                    dim * n,
                ),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn target_norm_never_exceeds_sigma((dim, data) in problem_strategy()) {
            let p = CoresetProblem::from_row_major(data, dim).unwrap();
            prop_assert!(p.target_norm() <= p.sigma_total() * (1.0 + 1e-12));
            for k in 0..p.len() {
                prop_assert!((norm_sq(p.unit_vectors().row(k)).sqrt() - 1.0).abs() <= 1e-12);
            }
            if !p.is_trivial() {
                prop_assert!((norm(p.unit_target()) - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn weighted_sum_is_linear(
            (dim, data) in problem_strategy(),
            a in 0.0f64..10.0,
            b in 0.0f64..10.0,
            seed_w in prop::collection::vec(0.0f64..5.0, 12),
        ) {
            let p = CoresetProblem::from_row_major(data, dim).unwrap();
            let n = p.original_len();
            let w1 = WeightVector::from_pairs((0..n).map(|i| (i, seed_w[i]))).unwrap();
            let w2 = WeightVector::from_pairs((0..n).map(|i| (i, seed_w[11 - i]))).unwrap();
            let lhs = p.weighted_sum(&w1.scaled(a).plus(&w2.scaled(b)), false).unwrap();
            let s1 = p.weighted_sum(&w1, false).unwrap();
            let s2 = p.weighted_sum(&w2, false).unwrap();
            for d in 0..dim {
                let rhs = a * s1.as_slice()[d] + b * s2.as_slice()[d];
                let scale = a * s1.as_slice()[d].abs() + b * s2.as_slice()[d].abs();
                let bound = 1e-10 * scale.max(1e-300) + 1e-300;
                prop_assert!((lhs.as_slice()[d] - rhs).abs() <= bound.max(1e-10 * rhs.abs()));
            }
        }

        #[test]
        fn safe_normalize_is_unit_or_zero(v in prop::collection::vec(-1e3f64..1e3, 1..10)) {
            let u = safe_normalize(&DenseVector::new(v).unwrap());
            let n = norm(&u);
            prop_assert!(n == 0.0 || (n - 1.0).abs() <= 1e-12);
        }
    }
}
