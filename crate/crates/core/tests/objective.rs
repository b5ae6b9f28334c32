mod common;

use approx::assert_relative_eq;
use minpen::relations::{enumerate_graphs, laplacian, pair_label, response_laplacian, update_sets_view, AMatrix};
use minpen::{objective_gaussian, objective_minpen, CoefMatrix, Dataset, Family, Label, PenaltySpec, RelationGraph};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use proptest::prelude::*;

use common::{fusion_direct, gaussian_data};

fn matrix(p: usize, r: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-2.0f64..2.0, p * r).prop_map(move |v| Array2::from_shape_vec((p, r), v).unwrap())
}

/// Matrices with exact ties: entries on a coarse grid make ‖β_l ± β_m‖² and
/// ‖β_l‖² coincide often.
fn tie_matrix(p: usize, r: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-2i32..=2, p * r)
        .prop_map(move |v| Array2::from_shape_vec((p, r), v.into_iter().map(|x| x as f64 * 0.5).collect()).unwrap())
}

fn graph_strategy(r: usize) -> impl Strategy<Value = RelationGraph> {
    prop::collection::vec(-1i8..=1, r * r).prop_map(move |v| {
        let mut g = RelationGraph::unrelated(r);
        for l in 0..r {
            for m in 0..r {
                if l != m {
                    g.set(l, m, v[l * r + m]);
                }
            }
        }
        g
    })
}

/// `Σ_{l≠m} ‖β_l − d_lm β_m‖²` minimized by scanning every graph.
fn brute_force_min(b: &Array2<f64>) -> (f64, Vec<RelationGraph>) {
    let r = b.ncols();
    let mut best = f64::INFINITY;
    let mut argmins = Vec::new();
    for g in enumerate_graphs(r, 12, None).unwrap() {
        let v = fusion_direct(b, &g, 0);
        if v < best - 1e-12 {
            best = v;
            argmins = vec![g];
        } else if (v - best).abs() <= 1e-12 {
            argmins.push(g);
        }
    }
    (best, argmins)
}

#[test]
fn objective_matches_term_by_term() {
    let (data, _) = gaussian_data(3, 20, 4, 3, 0.5);
    let mut g = common::rng(4);
    let b = common::normal_matrix(&mut g, 4, 3);
    let pen = PenaltySpec::new(0.3, 0.7).unwrap();
    let graph = RelationGraph::from_rows(vec![vec![0, 1, -1], vec![1, 0, 0], vec![0, -1, 0]]).unwrap();
    let fitted = data.x().dot(&b);
    let rss: f64 = data.y().iter().zip(fitted.iter()).map(|(y, f)| (y - f).powi(2)).sum();
    let l1: f64 = b.iter().map(|v| v.abs()).sum();
    let expected = rss / 40.0 + 0.3 * l1 + 0.35 * fusion_direct(&b, &graph, 0);
    let got = objective_gaussian(&data, &CoefMatrix::new(b.clone()), &pen, &graph).unwrap();
    assert_relative_eq!(got, expected, max_relative = 1e-13);
}

#[test]
fn objective_examples() {
    // X = I₂, Y = I₂, B = I₂, δ = 0: zero loss; graph zero gives γ/2 · 2
    let i2 = Array2::eye(2);
    let data = Dataset::new(i2.clone(), i2.clone(), Family::Gaussian).unwrap();
    let coef = CoefMatrix::new(i2.clone());
    let pen = PenaltySpec::new(0.0, 1.0).unwrap();
    let z = RelationGraph::unrelated(2);
    assert_relative_eq!(objective_gaussian(&data, &coef, &pen, &z).unwrap(), 1.0);
    // each pair: ‖e1 ∓ e2‖² = 2 exceeds ‖e1‖² = 1, so Z wins and the total is again 1
    assert_relative_eq!(objective_minpen(&data, &coef, &pen).unwrap(), 1.0);
}

#[test]
fn minpen_objective_is_minimum_over_nine_graphs() {
    let (data, _) = gaussian_data(11, 15, 3, 2, 1.0);
    let mut g = common::rng(12);
    for _ in 0..50 {
        let b = common::normal_matrix(&mut g, 3, 2);
        let coef = CoefMatrix::new(b);
        let pen = PenaltySpec::new(0.1, 0.9).unwrap();
        let min_over = enumerate_graphs(2, 12, None)
            .unwrap()
            .map(|gr| objective_gaussian(&data, &coef, &pen, &gr).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(objective_minpen(&data, &coef, &pen).unwrap(), min_over, max_relative = 1e-14);
    }
}

#[test]
fn laplacian_is_psd_and_matches_direct_sum() {
    let mut g = common::rng(21);
    for graph in enumerate_graphs(3, 12, None).unwrap().step_by(7) {
        let l = laplacian::<f64>(&graph, 4);
        let m = DMatrix::from_fn(l.nrows(), l.ncols(), |i, j| l[[i, j]]);
        let eig = SymmetricEigen::new(m.clone());
        assert!(eig.eigenvalues.min() > -1e-12, "negative eigenvalue for {graph:?}");
        let b = common::normal_matrix(&mut g, 4, 3);
        let v: Vec<f64> = b.t().iter().copied().collect();
        let bv = nalgebra::DVector::from_vec(v);
        let quad = (bv.transpose() * &m * &bv)[(0, 0)];
        assert_relative_eq!(quad, fusion_direct(&b, &graph, 0), max_relative = 1e-12);
        let a = AMatrix::from_graph(&graph);
        assert_relative_eq!(a.norm_sq(b.view()), fusion_direct(&b, &graph, 0), max_relative = 1e-12);
        let dense = a.dense::<f64>(4);
        let ata = dense.t().dot(&dense);
        for (x, y) in ata.iter().zip(l.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn response_laplacian_example() {
    // r = 2 with d12 = d21 = +1: 2 [[1, −1], [−1, 1]]
    let g = RelationGraph::from_rows(vec![vec![0, 1], vec![1, 0]]).unwrap();
    let l = response_laplacian::<f64>(&g);
    assert_eq!(l, ndarray::array![[2.0, -2.0], [-2.0, 2.0]]);
}

#[test]
fn update_sets_examples() {
    let b = ndarray::array![[1.0, 1.0, -1.0, 0.0], [2.0, 2.0, -2.0, 0.0]];
    let g = update_sets_view(b.view(), None);
    assert_eq!(g.get(0, 1), 1);
    assert_eq!(g.get(0, 2), -1);
    assert_eq!(g.get(0, 3), 0);
    // zero column: every label ties at zero norm and resolves to Z
    assert_eq!(g.get(3, 0), 0);
    assert_eq!(pair_label(b.view(), 1, 2), Label::Negative);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn update_sets_attains_brute_force_minimum(b in matrix(3, 3)) {
        let g = update_sets_view(b.view(), None);
        let (best, argmins) = brute_force_min(&b);
        prop_assert!((fusion_direct(&b, &g, 0) - best).abs() <= 1e-12);
        prop_assert!(argmins.contains(&g));
    }

    #[test]
    fn update_sets_minimum_with_ties(b in tie_matrix(2, 3)) {
        let g = update_sets_view(b.view(), None);
        let (best, _) = brute_force_min(&b);
        prop_assert!((fusion_direct(&b, &g, 0) - best).abs() <= 1e-12);
        // tie rules: the chosen label never loses to the Z alternative
        for l in 0..3 {
            for m in 0..3 {
                if l == m { continue; }
                let bl = b.column(l);
                let bm = b.column(m);
                let diff: f64 = bl.iter().zip(bm.iter()).map(|(a, c)| (a - c).powi(2)).sum();
                let sum: f64 = bl.iter().zip(bm.iter()).map(|(a, c)| (a + c).powi(2)).sum();
                let norm: f64 = bl.iter().map(|a| a * a).sum();
                let expect = if diff <= sum && diff < norm { 1 } else if sum < diff && sum < norm { -1 } else { 0 };
                prop_assert_eq!(g.get(l, m), expect);
            }
        }
    }

    #[test]
    fn update_sets_permutation_equivariant(b in matrix(3, 4), perm in Just([2usize, 0, 3, 1])) {
        let g = update_sets_view(b.view(), None);
        let pb = Array2::from_shape_fn((3, 4), |(j, k)| b[[j, perm[k]]]);
        let pg = update_sets_view(pb.view(), None);
        for l in 0..4 {
            for m in 0..4 {
                if l != m {
                    prop_assert_eq!(pg.get(l, m), g.get(perm[l], perm[m]));
                }
            }
        }
    }

    #[test]
    fn update_sets_sign_flip(b in matrix(3, 3), k in 0usize..3) {
        // flipping β_k negates every label that involves response k
        let g = update_sets_view(b.view(), None);
        let mut fb = b.clone();
        fb.column_mut(k).mapv_inplace(|v| -v);
        let fg = update_sets_view(fb.view(), None);
        for l in 0..3 {
            for m in 0..3 {
                if l == m { continue; }
                let expect = if l == k || m == k { -g.get(l, m) } else { g.get(l, m) };
                // exact ties between diff and sum resolve to P either way
                let bl = b.column(l);
                let bm = b.column(m);
                let tie = bl.dot(&bm) == 0.0;
                if !tie {
                    prop_assert_eq!(fg.get(l, m), expect);
                }
            }
        }
    }

    #[test]
    fn laplacian_quadratic_form(b in matrix(3, 3), graph in graph_strategy(3)) {
        let l = laplacian::<f64>(&graph, 3);
        let v: ndarray::Array1<f64> = b.t().iter().copied().collect();
        let quad = v.dot(&l.dot(&v));
        let direct = fusion_direct(&b, &graph, 0);
        prop_assert!((quad - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn minpen_objective_never_exceeds_fixed(b in matrix(3, 2), graph in graph_strategy(2)) {
        let (data, _) = gaussian_data(5, 12, 3, 2, 1.0);
        let pen = PenaltySpec::new(0.2, 1.3).unwrap();
        let coef = CoefMatrix::new(b);
        let fixed = objective_gaussian(&data, &coef, &pen, &graph).unwrap();
        let minp = objective_minpen(&data, &coef, &pen).unwrap();
        prop_assert!(minp <= fixed + 1e-12);
    }
}
