mod common;

use approx::assert_abs_diff_eq;
use minpen::gauss::{cd_fixed_graph, fit_minpen, init_elastic_net, kkt_residuals, oracle_minpen};
use minpen::relations::{enumerate_graphs, update_sets_view};
use minpen::{objective_gaussian, objective_minpen, CoefMatrix, Dataset, Family, PenaltySpec, RelationGraph, SolverConfig};
use ndarray::{array, Array2};

use common::{fixed_graph_exact, gaussian_data};

fn as_given() -> SolverConfig {
    SolverConfig {
        standardize: false,
        cd_tol: 1e-11,
        ..SolverConfig::default()
    }
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn elastic_net_init_matches_exact_solution() {
    for seed in 0..5 {
        let (data, _) = gaussian_data(100 + seed, 30, 3, 2, 0.5);
        let pen = PenaltySpec::new(0.05, 0.2).unwrap();
        let got = init_elastic_net(&data, &pen, &as_given()).unwrap();
        let exact = fixed_graph_exact(
            &data.x().to_owned(),
            &data.y().to_owned(),
            0.05,
            0.0,
            0.4,
            &RelationGraph::unrelated(2),
        );
        assert!(max_abs_diff(&got.coefficients, &exact) < 1e-7, "seed {seed}");
    }
}

#[test]
fn fixed_graph_matches_exact_solution_for_every_graph() {
    let (data, _) = gaussian_data(7, 25, 3, 2, 0.5);
    let cfg = as_given();
    let pen = PenaltySpec::new(0.04, 0.3).unwrap();
    let warm = CoefMatrix::zeros(3, 2);
    for graph in enumerate_graphs(2, 12, None).unwrap() {
        let got = cd_fixed_graph(&data, &pen, &graph, &warm, &cfg).unwrap();
        let exact = fixed_graph_exact(&data.x().to_owned(), &data.y().to_owned(), 0.04, 0.3, 0.0, &graph);
        assert!(max_abs_diff(&got.coefficients, &exact) < 1e-7, "graph {:?}", graph.rows());
    }
}

#[test]
fn fixed_graph_three_responses_matches_exact() {
    let (data, _) = gaussian_data(8, 30, 3, 3, 0.4);
    let pen = PenaltySpec::new(0.03, 0.2).unwrap();
    let graph = RelationGraph::from_rows(vec![vec![0, 1, -1], vec![1, 0, 0], vec![-1, 0, 0]]).unwrap();
    let got = cd_fixed_graph(&data, &pen, &graph, &CoefMatrix::zeros(3, 3), &as_given()).unwrap();
    let exact = fixed_graph_exact(&data.x().to_owned(), &data.y().to_owned(), 0.03, 0.2, 0.0, &graph);
    assert!(max_abs_diff(&got.coefficients, &exact) < 1e-7);
}

#[test]
fn unrelated_graph_is_an_elastic_net() {
    // with every label Z the fusion term is (γ/2)(r−1)‖B‖², an elastic net
    // with ridge γ(r−1)
    let (data, _) = gaussian_data(9, 30, 3, 3, 0.5);
    let pen = PenaltySpec::new(0.05, 0.3).unwrap();
    let z = RelationGraph::unrelated(3);
    let got = cd_fixed_graph(&data, &pen, &z, &CoefMatrix::zeros(3, 3), &as_given()).unwrap();
    let exact = fixed_graph_exact(&data.x().to_owned(), &data.y().to_owned(), 0.05, 0.0, 0.3 * 2.0, &z);
    assert!(max_abs_diff(&got.coefficients, &exact) < 1e-7);
}

#[test]
fn two_by_two_closed_form() {
    // X = I₂ (n = 2), one response pair fused with d = +1 and δ = 0:
    // stationarity (1/2)(β − y) + 2γ(β_1 − β_2) = 0 per row
    let x = Array2::eye(2);
    let y = array![[1.0, 0.0], [0.0, 2.0]];
    let data = Dataset::new(x, y.clone(), Family::Gaussian).unwrap();
    let gamma = 0.25;
    let pen = PenaltySpec::new(0.0, gamma).unwrap();
    let g = RelationGraph::from_rows(vec![vec![0, 1], vec![1, 0]]).unwrap();
    let got = cd_fixed_graph(&data, &pen, &g, &CoefMatrix::zeros(2, 2), &as_given()).unwrap();
    // per row: b1 + b2 = y1 + y2, b1 − b2 = (y1 − y2)/(1 + 8γ)
    for j in 0..2 {
        let (s, d) = (y[[j, 0]] + y[[j, 1]], (y[[j, 0]] - y[[j, 1]]) / (1.0 + 8.0 * gamma));
        assert_abs_diff_eq!(got.coefficients[[j, 0]], (s + d) / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(got.coefficients[[j, 1]], (s - d) / 2.0, epsilon = 1e-9);
    }
}

#[test]
fn kkt_conditions_hold_after_cd() {
    let cfg = SolverConfig {
        standardize: false,
        ..SolverConfig::default()
    };
    for seed in 0..10 {
        let (data, _) = gaussian_data(200 + seed, 40, 6, 3, 0.5);
        let pen = PenaltySpec::new(0.05, 0.05).unwrap();
        let graph = update_sets_view(data.x().t().dot(&data.y()).view(), None);
        let got = cd_fixed_graph(&data, &pen, &graph, &CoefMatrix::zeros(6, 3), &cfg).unwrap();
        let res = kkt_residuals(&data, &got, &pen, &graph).unwrap();
        let worst = res.iter().copied().fold(0.0, f64::max);
        assert!(worst <= 10.0 * cfg.cd_tol, "seed {seed}: kkt residual {worst:e}");
    }
}

#[test]
fn huge_delta_gives_zero() {
    let (data, _) = gaussian_data(3, 20, 4, 2, 0.5);
    let pen = PenaltySpec::new(1e9, 0.5).unwrap();
    let fit = fit_minpen(&data, &pen, &SolverConfig::default()).unwrap();
    assert!(fit.coef.coefficients.iter().all(|&v| v == 0.0));
    assert!(fit.working.iter().all(|&v| v == 0.0));
}

#[test]
fn fit_trace_is_monotone_and_objective_consistent() {
    let cfg = SolverConfig {
        standardize: false,
        ..SolverConfig::default()
    };
    for seed in 0..10 {
        let (data, _) = gaussian_data(300 + seed, 40, 5, 3, 0.5);
        let pen = PenaltySpec::new(0.05, 0.2).unwrap();
        let fit = fit_minpen(&data, &pen, &cfg).unwrap();
        assert!(fit.max_trace_increase() <= 1e-10, "seed {seed}");
        let direct = objective_minpen(&data, &fit.coef, &pen).unwrap();
        assert_abs_diff_eq!(direct, fit.objective, epsilon = 1e-12);
        let fixed = objective_gaussian(&data, &fit.coef, &pen, &fit.graph).unwrap();
        assert_abs_diff_eq!(fixed, fit.objective, epsilon = 1e-12);
    }
}

#[test]
fn oracle_never_worse_than_alternating_fit() {
    let cfg = SolverConfig::default();
    for seed in 0..10 {
        let (data, _) = gaussian_data(400 + seed, 50, 5, 3, 0.5);
        let pen = PenaltySpec::new(0.05, 0.001).unwrap();
        let fit = fit_minpen(&data, &pen, &cfg).unwrap();
        let oracle = oracle_minpen(&data, &pen, &cfg).unwrap();
        assert_eq!(oracle.table.len(), 729);
        assert!(oracle.fit.objective <= fit.objective + 1e-8, "seed {seed}");
        let best = oracle.table.iter().map(|g| g.objective).fold(f64::INFINITY, f64::min);
        assert!(oracle.fit.objective <= best + 1e-12);
    }
}

#[test]
fn standardized_fit_reports_raw_scale() {
    // standardizing and mapping back must reproduce the fit on the data that
    // was standardized by hand
    let (data, _) = gaussian_data(17, 40, 4, 2, 0.5);
    let pen = PenaltySpec::new(0.05, 0.1).unwrap();
    let fit = fit_minpen(&data, &pen, &SolverConfig::default()).unwrap();
    let (z, means, scales) = common::standardize_x(&data.x().to_owned());
    let y = data.y().to_owned();
    let ymean = y.mean_axis(ndarray::Axis(0)).unwrap();
    let yc = &y - &ymean;
    let manual = fit_minpen(
        &Dataset::new(z, yc, Family::Gaussian).unwrap(),
        &pen,
        &SolverConfig {
            standardize: false,
            ..SolverConfig::default()
        },
    )
    .unwrap();
    for j in 0..4 {
        for k in 0..2 {
            assert_abs_diff_eq!(
                fit.coef.coefficients[[j, k]],
                manual.coef.coefficients[[j, k]] / scales[j],
                epsilon = 1e-9
            );
        }
    }
    let icpt = fit.coef.intercepts.as_ref().expect("raw-scale fit has intercepts");
    for k in 0..2 {
        let expect = ymean[k] - (0..4).map(|j| means[j] * fit.coef.coefficients[[j, k]]).sum::<f64>();
        assert_abs_diff_eq!(icpt[k], expect, epsilon = 1e-9);
    }
}

#[test]
fn zero_column_stays_zero_when_fit_as_given() {
    let (data, _) = gaussian_data(77, 30, 3, 2, 0.5);
    let mut x = data.x().to_owned();
    x.column_mut(1).fill(0.0);
    let data = Dataset::new(x, data.y().to_owned(), Family::Gaussian).unwrap();
    let cfg = SolverConfig {
        standardize: false,
        ..SolverConfig::default()
    };
    let fit = fit_minpen(&data, &PenaltySpec::new(0.05, 0.2).unwrap(), &cfg).unwrap();
    assert!(fit.working.row(1).iter().all(|&v| v == 0.0));
    assert!(fit.working.iter().all(|v| v.is_finite()));
    assert!(fit_minpen(&data, &PenaltySpec::new(0.05, 0.2).unwrap(), &SolverConfig::default()).is_err());
}
