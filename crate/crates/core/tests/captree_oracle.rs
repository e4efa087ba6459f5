mod common;

use common::{clustered_units, fuzz_problem, orthonormal_pair};
use coreset_core::captree::{node_lower_bound, node_upper_bound, search_objective, CapNode, CapTree};
use coreset_core::giga::{Giga, GigaOptions};
use coreset_core::hilbert::RowMatrix;
use coreset_core::rng::{stream, Purpose};
use rand::Rng;

fn linear_scan(data: &RowMatrix, u: &[f64], v: &[f64]) -> f64 {
    (0..data.rows()).map(|n| search_objective(data.row(n), u, v)).fold(f64::NEG_INFINITY, f64::max)
}

fn random_units(rng: &mut impl Rng, max_n: usize) -> RowMatrix {
    let n = rng.random_range(1..=max_n);
    let dim = rng.random_range(2..=12);
    RowMatrix::new(clustered_units(rng, n, dim), dim).unwrap()
}

fn for_each_node<'a>(node: &'a CapNode, f: &mut impl FnMut(&'a CapNode)) {
    f(node);
    if let Some(kids) = &node.children {
        for_each_node(&kids[0], f);
        for_each_node(&kids[1], f);
    }
}

#[test]
fn search_matches_linear_scan_on_random_caps() {
    let mut rng = stream(21, 0, Purpose::Fuzz);
    for case in 0..1000 {
        let data = random_units(&mut rng, 600);
        let tree = CapTree::build(&data).unwrap();
        let (u, v) = if case % 4 == 0 {
            let (u, _) = orthonormal_pair(&mut rng, data.dim());
            (u, vec![0.0; data.dim()])
        } else {
            orthonormal_pair(&mut rng, data.dim())
        };
        let (index, value) = tree.search(&data, &u, &v);
        let exact = linear_scan(&data, &u, &v);
        assert!((value - exact).abs() <= 1e-9, "case {case}: {value} vs {exact}");
        assert!((search_objective(data.row(index), &u, &v) - value).abs() <= 1e-15);
    }
}

#[test]
fn search_matches_linear_scan_on_giga_states() {
    let mut rng = stream(22, 0, Purpose::Fuzz);
    for case in 0..200 {
        let p = fuzz_problem(&mut rng, 500, 15);
        if p.is_trivial() {
            continue;
        }
        let tree = CapTree::build(p.unit_vectors()).unwrap();
        let mut giga = Giga::new(&p, GigaOptions::default());
        for _ in 0..10 {
            let st = giga.state();
            let ell = p.unit_target().as_slice();
            let z: f64 = common::dot(ell, st.ell_w());
            let mut u: Vec<f64> = ell.iter().zip(st.ell_w()).map(|(a, b)| a - z * b).collect();
            let nu = common::norm(&u);
            if nu <= 1e-12 {
                break;
            }
            u.iter_mut().for_each(|x| *x /= nu);
            let (_, value) = tree.search(p.unit_vectors(), &u, st.ell_w());
            let exact = linear_scan(p.unit_vectors(), &u, st.ell_w());
            assert!((value - exact).abs() <= 1e-9, "case {case}, t={}: {value} vs {exact}", st.t());
            if !giga.step() {
                break;
            }
        }
    }
}

#[test]
fn upper_bound_dominates_every_member() {
    let mut rng = stream(23, 0, Purpose::Fuzz);
    for case in 0..60 {
        let data = random_units(&mut rng, 1000);
        let tree = CapTree::build(&data).unwrap();
        for _ in 0..10 {
            let (u, v) = orthonormal_pair(&mut rng, data.dim());
            for_each_node(tree.root(), &mut |node| {
                let upper = node_upper_bound(node, &u, &v);
                let lower = node_lower_bound(node, &data, &u, &v);
                assert!(lower <= upper + 1e-12, "case {case}: lower {lower} > upper {upper}");
                for n in node.collect_members() {
                    let f = search_objective(data.row(n), &u, &v);
                    assert!(f <= upper + 1e-12, "case {case}: member {n} scores {f} > bound {upper}");
                }
            });
        }
    }
}

#[test]
fn cap_invariant_and_depth_bound() {
    let mut rng = stream(24, 0, Purpose::Fuzz);
    for case in 0..50 {
        let data = random_units(&mut rng, 1000);
        let tree = CapTree::build(&data).unwrap();
        let depth_bound = (data.rows() as f64).log2().ceil() as usize + 8;
        assert!(tree.root().depth() <= depth_bound, "case {case}");
        let mut members = tree.root().collect_members();
        members.sort_unstable();
        assert_eq!(members, (0..data.rows()).collect::<Vec<_>>());
        for_each_node(tree.root(), &mut |node| {
            assert!((common::norm(&node.xi) - 1.0).abs() <= 1e-12);
            for n in node.collect_members() {
                assert!(common::dot(data.row(n), &node.xi) >= node.r - 1e-12, "case {case}");
            }
        });
    }
}
