//! Spherical cap-tree for the greedy selection argmax.
//!
//! Each node is a cap `{ζ : ‖ζ‖ = 1, ⟨ζ, ξ⟩ ≥ r}` containing all of its member
//! vectors. Given an orthonormal pair `(u, v)` (the normalized residual
//! direction and the current iterate), the selection objective
//!
//! ```text
//! f(n) = ⟨ℓ_n, u⟩ / sqrt(1 − ⟨ℓ_n, v⟩²)
//! ```
//!
//! is bounded above on a cap in closed form, which lets a best-first search
//! skip whole subtrees. The lower bound of a node is `f` at its
//! representative, the member closest to `ξ`.
//!
//! The tree stores indices only; searches must be given the same row matrix
//! the tree was built from.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{CoresetError, Result};
use crate::exec::better;
use crate::hilbert::{dot, norm_sq, zero_tol, RowMatrix};

/// Maximum number of indices held by a leaf.
pub const LEAF_SIZE: usize = 32;

/// Widening applied to every cap radius before bounding, absorbing rounding
/// in the stored `r`.
const CAP_SLACK: f64 = 1e-12;

/// A node is skipped only if its bound is below the incumbent by this much.
const PRUNE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct CapNode {
    pub xi: Vec<f64>,
    pub r: f64,
    pub children: Option<Box<[CapNode; 2]>>,
    /// Member indices; populated for leaves only.
    pub members: Vec<usize>,
    pub representative: usize,
    /// Number of indices below this node.
    pub size: usize,
}

impl CapNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    /// All indices below this node.
    pub fn collect_members(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.size);
        self.collect_into(&mut out);
        out
    }

    fn collect_into(&self, out: &mut Vec<usize>) {
        match &self.children {
            None => out.extend_from_slice(&self.members),
            Some(kids) => {
                kids[0].collect_into(out);
                kids[1].collect_into(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match &self.children {
            None => 0,
            Some(kids) => 1 + kids[0].depth().max(kids[1].depth()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CapTree {
    root: CapNode,
    dim: usize,
    len: usize,
}

impl CapTree {
    /// Builds a tree over all rows of `unit_vectors`, which must have unit norm.
    pub fn build(unit_vectors: &RowMatrix) -> Result<Self> {
        let len = unit_vectors.rows();
        if len == 0 {
            return Err(CoresetError::EmptyTree);
        }
        let indices: Vec<usize> = (0..len).collect();
        let root = build_node(unit_vectors, indices);
        Ok(CapTree { root, dim: unit_vectors.dim(), len })
    }

    pub fn root(&self) -> &CapNode {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Best-first branch and bound for `argmax_n f(n)`.
    ///
    /// Returns the maximizing index and objective; the objective equals the
    /// exhaustive maximum, the index may differ only on exact ties.
    pub fn search(&self, unit_vectors: &RowMatrix, u: &[f64], v: &[f64]) -> (usize, f64) {
        debug_assert_eq!(unit_vectors.rows(), self.len);
        debug_assert_eq!(u.len(), self.dim);
        let eval = |n: usize| search_objective(unit_vectors.row(n), u, v);

        let rep = self.root.representative;
        let mut best = (rep, eval(rep));
        let mut heap = BinaryHeap::new();
        heap.push(Candidate { bound: node_upper_bound(&self.root, u, v), node: &self.root });

        while let Some(Candidate { bound, node }) = heap.pop() {
            if bound < best.1 - PRUNE_SLACK {
                break;
            }
            match &node.children {
                None => {
                    for &m in &node.members {
                        best = better(Some(best), Some((m, eval(m)))).unwrap_or(best);
                    }
                }
                Some(kids) => {
                    for child in kids.iter() {
                        let lower = (child.representative, eval(child.representative));
                        best = better(Some(best), Some(lower)).unwrap_or(best);
                        let upper = node_upper_bound(child, u, v);
                        if upper >= best.1 - PRUNE_SLACK {
                            heap.push(Candidate { bound: upper, node: child });
                        }
                    }
                }
            }
        }
        best
    }
}

struct Candidate<'a> {
    bound: f64,
    node: &'a CapNode,
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.bound.total_cmp(&other.bound) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound)
    }
}

/// `⟨ℓ_n, u⟩ / ‖ℓ_n − ⟨ℓ_n, v⟩v‖`, zero when the tangent component vanishes.
///
/// For unit `ℓ_n`, unit `v` and `u ⊥ v` this is the cap-tree objective and
/// also the geodesic alignment `⟨d_t, d_tn⟩` with `u = d_t`, `v = ℓ(w_t)`.
/// The tangent norm is formed explicitly rather than as `sqrt(1 − ⟨ℓ_n, v⟩²)`
/// so that points coincident with `v` score exactly zero.
#[inline]
pub fn search_objective(ell_n: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let b = dot(ell_n, v);
    let mut tangent_sq = 0.0;
    let mut along_u = 0.0;
    for ((x, vi), ui) in ell_n.iter().zip(v).zip(u) {
        let q = x - b * vi;
        tangent_sq += q * q;
        along_u += q * ui;
    }
    let tangent = tangent_sq.sqrt();
    if tangent <= zero_tol(ell_n.len()) {
        0.0
    } else {
        // Bounded by 1 in magnitude; rounding can step just outside.
        (along_u / tangent).clamp(-1.0, 1.0)
    }
}

/// Closed-form supremum of the objective over a cap, given the cap centre's
/// coordinates `β_u = ⟨ξ, u⟩`, `β_v = ⟨ξ, v⟩` and radius `r`.
pub fn cap_upper_bound(beta_u: f64, beta_v: f64, r: f64) -> f64 {
    if beta_v.abs() > r {
        return 1.0;
    }
    // r ≥ |β_v| ≥ 0 from here on.
    let c = (r * r - beta_v * beta_v).max(0.0).sqrt();
    if beta_u >= c {
        return 1.0;
    }
    let rest_sq = (1.0 - beta_u * beta_u - beta_v * beta_v).max(0.0);
    let denom = rest_sq + beta_u * beta_u;
    if denom <= 0.0 {
        return 1.0;
    }
    let value = (beta_u * c + rest_sq.sqrt() * (1.0 - r * r).max(0.0).sqrt()) / denom;
    value.clamp(-1.0, 1.0)
}

pub fn node_upper_bound(node: &CapNode, u: &[f64], v: &[f64]) -> f64 {
    let beta_u = dot(&node.xi, u);
    let beta_v = dot(&node.xi, v);
    cap_upper_bound(beta_u, beta_v, (node.r - CAP_SLACK).max(-1.0))
}

pub fn node_lower_bound(node: &CapNode, unit_vectors: &RowMatrix, u: &[f64], v: &[f64]) -> f64 {
    search_objective(unit_vectors.row(node.representative), u, v)
}

fn build_node(data: &RowMatrix, mut indices: Vec<usize>) -> CapNode {
    let dim = data.dim();
    let size = indices.len();
    let mut mean = vec![0.0; dim];
    for &i in &indices {
        for (m, x) in mean.iter_mut().zip(data.row(i)) {
            *m += x;
        }
    }
    let mean_norm = norm_sq(&mean).sqrt();
    let (xi, r) = if mean_norm <= zero_tol(dim) * size as f64 {
        (data.row(indices[0]).to_vec(), -1.0)
    } else {
        let xi: Vec<f64> = mean.iter().map(|m| m / mean_norm).collect();
        let r = indices
            .iter()
            .map(|&i| dot(data.row(i), &xi))
            .fold(f64::INFINITY, f64::min)
            .clamp(-1.0, 1.0);
        (xi, r)
    };
    let representative = indices
        .iter()
        .map(|&i| Some((i, dot(data.row(i), &xi))))
        .fold(None, better)
        .map(|(i, _)| i)
        .unwrap_or(indices[0]);

    if size <= LEAF_SIZE {
        indices.sort_unstable();
        return CapNode { xi, r, children: None, members: indices, representative, size };
    }

    // Poles: the member least aligned with an arbitrary member, then the
    // member least aligned with that one.
    let least_aligned = |anchor: usize| {
        let a = data.row(anchor);
        indices
            .iter()
            .map(|&i| Some((i, -dot(data.row(i), a))))
            .fold(None, better)
            .map(|(i, _)| i)
            .unwrap_or(anchor)
    };
    let pole_a = least_aligned(indices[0]);
    let pole_b = least_aligned(pole_a);
    let (ra, rb) = (data.row(pole_a), data.row(pole_b));

    // Order by preference for pole A over pole B and halve at the median,
    // which keeps the depth within ⌈log₂ N⌉.
    let mut keyed: Vec<(f64, usize)> = indices
        .iter()
        .map(|&i| (dot(data.row(i), ra) - dot(data.row(i), rb), i))
        .collect();
    keyed.sort_unstable_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let half = size / 2;
    let left: Vec<usize> = keyed[..half].iter().map(|&(_, i)| i).collect();
    let right: Vec<usize> = keyed[half..].iter().map(|&(_, i)| i).collect();

    let children = Box::new([build_node(data, left), build_node(data, right)]);
    CapNode { xi, r, children: Some(children), members: Vec::new(), representative, size }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_units(n: usize, dim: usize, seed: u64) -> RowMatrix {
        let mut rng = stream(seed, 0, Purpose::Fuzz);
        let mut data = Vec::with_capacity(n * dim);
        for _ in 0..n {
            let row: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let nr = norm_sq(&row).sqrt();
            data.extend(row.iter().map(|x| x / nr));
        }
        RowMatrix::new(data, dim).unwrap()
    }

    fn audit(node: &CapNode, data: &RowMatrix) {
        assert!((norm_sq(&node.xi).sqrt() - 1.0).abs() <= 1e-12);
        for m in node.collect_members() {
            assert!(dot(data.row(m), &node.xi) >= node.r - 1e-12);
        }
        if let Some(kids) = &node.children {
            assert_eq!(kids[0].size + kids[1].size, node.size);
            audit(&kids[0], data);
            audit(&kids[1], data);
        } else {
            assert!(node.members.len() <= LEAF_SIZE);
        }
    }

    #[test]
    fn single_vector_leaf() {
        let data = RowMatrix::new(vec![0.6, 0.8], 2).unwrap();
        let tree = CapTree::build(&data).unwrap();
        assert!(tree.root().is_leaf());
        assert!((tree.root().r - 1.0).abs() <= 1e-12);
        assert_eq!(tree.root().representative, 0);
    }

    #[test]
    fn antipodal_pair_falls_back_to_first_vector() {
        let data = RowMatrix::new(vec![1.0, 0.0, -1.0, 0.0], 2).unwrap();
        let tree = CapTree::build(&data).unwrap();
        assert_eq!(tree.root().xi, vec![1.0, 0.0]);
        assert_eq!(tree.root().r, -1.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        let data = RowMatrix::new(vec![], 3).unwrap();
        assert!(matches!(CapTree::build(&data), Err(CoresetError::EmptyTree)));
    }

    #[test]
    fn cap_invariant_and_depth_on_random_vectors() {
        let data = random_units(1000, 6, 11);
        let tree = CapTree::build(&data).unwrap();
        audit(tree.root(), &data);
        let mut all = tree.root().collect_members();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
        let limit = (1000f64).log2().ceil() as usize + 8;
        assert!(tree.root().depth() <= limit);
    }

    #[test]
    fn upper_bound_branches() {
        // Whole sphere.
        assert_eq!(cap_upper_bound(0.3, 0.2, -1.0), 1.0);
        // Cap centred on u.
        assert_eq!(cap_upper_bound(1.0, 0.0, 0.9), 1.0);
        // Centre orthogonal to both u and v.
        assert!((cap_upper_bound(0.0, 0.0, 0.8) - 0.6).abs() <= 1e-15);
    }

    #[test]
    fn third_branch_bound_dominates_sampled_cap_members() {
        // u = e0, v = e1, ξ = e2, r = 0.8; sample ζ in the cap.
        let mut rng = stream(5, 0, Purpose::Fuzz);
        let (r, bound) = (0.8, cap_upper_bound(0.0, 0.0, 0.8));
        let u = [1.0, 0.0, 0.0, 0.0];
        let v = [0.0, 1.0, 0.0, 0.0];
        let mut best = f64::NEG_INFINITY;
        let mut accepted = 0;
        while accepted < 10_000 {
            let mut z: Vec<f64> = (0..4).map(|_| rng.sample::<f64, _>(StandardNormal) * 0.4).collect();
            z[2] += 1.0;
            let nz = norm_sq(&z).sqrt();
            z.iter_mut().for_each(|x| *x /= nz);
            if z[2] < r {
                continue;
            }
            accepted += 1;
            let f = search_objective(&z, &u, &v);
            assert!(f <= bound + 1e-12, "member objective {f} exceeds bound {bound}");
            best = best.max(f);
        }
        assert!(best > 0.5, "sampling should approach the bound, got {best}");
    }

    #[test]
    fn orthogonal_pair_search() {
        let data = RowMatrix::new(vec![1.0, 0.0, 0.0, 1.0], 2).unwrap();
        let tree = CapTree::build(&data).unwrap();
        let (i, f) = tree.search(&data, &[0.0, 1.0], &[1.0, 0.0]);
        assert_eq!(i, 1);
        assert!((f - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn identical_vectors_search() {
        let row = [0.6, 0.0, 0.8];
        let data = RowMatrix::new(row.repeat(100), 3).unwrap();
        let tree = CapTree::build(&data).unwrap();
        let u = [0.0, 1.0, 0.0];
        let v = [1.0, 0.0, 0.0];
        let (_, f) = tree.search(&data, &u, &v);
        assert!((f - search_objective(&row, &u, &v)).abs() <= 1e-15);
    }

    #[test]
    fn lower_bound_never_exceeds_upper_bound() {
        let data = random_units(300, 4, 17);
        let tree = CapTree::build(&data).unwrap();
        let mut rng = stream(23, 0, Purpose::Fuzz);
        let mut nodes = vec![tree.root()];
        let mut all = Vec::new();
        while let Some(n) = nodes.pop() {
            all.push(n);
            if let Some(k) = &n.children {
                nodes.push(&k[0]);
                nodes.push(&k[1]);
            }
        }
        for trial in 0..1000 {
            let (u, v) = random_orthonormal_pair(&mut rng, 4);
            let node = all[trial % all.len()];
            assert!(node_lower_bound(node, &data, &u, &v) <= node_upper_bound(node, &u, &v) + 1e-12);
        }
    }

    pub(crate) fn random_orthonormal_pair(rng: &mut impl Rng, dim: usize) -> (Vec<f64>, Vec<f64>) {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let nv = norm_sq(&v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let proj = dot(&u, &v);
        u.iter_mut().zip(&v).for_each(|(a, b)| *a -= proj * b);
        let nu = norm_sq(&u).sqrt();
        u.iter_mut().for_each(|x| *x /= nu);
        (u, v)
    }
}
