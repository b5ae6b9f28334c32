//! Gaussian solver: elastic-net start, fixed-graph coordinate descent, the
//! alternating set/coefficient loop and the exhaustive oracle.

use std::borrow::Cow;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::cd::{self, CdOptions, CdOutcome, CdPenalty, GramLoss, GramSet, QuadLoss, ResidualLoss, Weights};
use crate::error::{MinPenError, Result};
use crate::fit::{prepare, report, FitResult, SolverConfig, StopReason};
use crate::linalg::gram;
use crate::model::{objective_gaussian, objective_minpen, CoefMatrix, Dataset, Family, PenaltySpec, RelationGraph};
use crate::relations::{enumerate_graphs, update_sets_view};
use crate::scalar::Scalar;

/// A Gaussian data set prepared for repeated fits: standardized per the
/// configuration, with `XᵀX/n` and `XᵀY/n` cached when `p ≤ n`.
pub struct GaussianProblem<'a, F: Clone> {
    work: Cow<'a, Dataset<F>>,
    gram: Option<(Array2<F>, Array2<F>)>,
    cfg: SolverConfig,
}

/// One row of the oracle table.
#[derive(Debug, Clone)]
pub struct GraphObjective<F> {
    pub graph: RelationGraph,
    pub objective: F,
}

#[derive(Debug, Clone)]
pub struct OracleResult<F> {
    pub fit: FitResult<F>,
    /// Fixed-graph objective of every enumerated graph, in enumeration order.
    pub table: Vec<GraphObjective<F>>,
}

impl<'a, F: Scalar> GaussianProblem<'a, F> {
    pub fn new(data: &'a Dataset<F>, cfg: &SolverConfig) -> Result<Self> {
        if data.family() != Family::Gaussian {
            return Err(MinPenError::InvalidInput("the Gaussian solver needs a gaussian data set".into()));
        }
        let work = prepare(data, cfg)?;
        let n = F::from_usize_lossy(work.n());
        let gram = if cd::prefer_gram(work.n(), work.p()) {
            let g = gram(work.x(), n);
            let c = work.x().t().dot(&work.y()) / n;
            Some((g, c))
        } else {
            None
        };
        Ok(Self {
            work,
            gram,
            cfg: cfg.clone(),
        })
    }

    /// The data the solver works on (standardized when configured).
    pub fn working_data(&self) -> &Dataset<F> {
        &self.work
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Smallest `δ` for which the `γ = 0` fit is identically zero.
    pub fn delta_max(&self) -> F {
        let c = match &self.gram {
            Some((_, c)) => Cow::Borrowed(c),
            None => {
                let n = F::from_usize_lossy(self.work.n());
                Cow::Owned(self.work.x().t().dot(&self.work.y()) / n)
            }
        };
        c.iter().fold(F::zero(), |a, &v| a.max(v.abs()))
    }

    fn loss(&self, beta: ArrayView2<F>) -> Box<dyn QuadLoss<F> + '_> {
        match &self.gram {
            Some((g, c)) => Box::new(GramLoss::new(GramSet::Shared(g), c.view(), beta)),
            None => {
                let w = F::one() / F::from_usize_lossy(self.work.n());
                Box::new(ResidualLoss::new(self.work.x(), self.work.y(), Weights::Uniform(w), beta))
            }
        }
    }

    fn options(&self, stage: &'static str) -> CdOptions<F> {
        CdOptions {
            tol: F::lit(self.cfg.cd_tol),
            max_sweeps: self.cfg.cd_max_sweeps,
            kkt_tol: F::lit(10.0 * self.cfg.cd_tol),
            scale_kkt: false,
            stage,
        }
    }

    fn check_warm(&self, warm: ArrayView2<F>) -> Result<()> {
        if warm.dim() != (self.work.p(), self.work.r()) {
            return Err(MinPenError::DimensionMismatch(format!(
                "warm start is {}x{}, expected {}x{}",
                warm.nrows(),
                warm.ncols(),
                self.work.p(),
                self.work.r()
            )));
        }
        Ok(())
    }

    /// Per-response elastic net `(1/2n)‖y_k − Xβ_k‖² + δ‖β_k‖₁ + γ‖β_k‖²`
    /// on the working scale.
    pub fn init_elastic_net(&self, pen: &PenaltySpec<F>, warm: Option<ArrayView2<F>>) -> Result<Array2<F>> {
        let mut beta = match warm {
            Some(w) => {
                self.check_warm(w)?;
                w.to_owned()
            }
            None => Array2::zeros((self.work.p(), self.work.r())),
        };
        let cdpen = CdPenalty {
            lasso: pen.delta,
            lasso_from: 0,
            fusion: F::zero(),
            graph: None,
            fuse_from: 0,
            ridge: F::lit(2.0) * pen.gamma,
        };
        let mut loss = self.loss(beta.view());
        cd::solve(loss.as_mut(), &mut beta, cdpen, self.options("elastic-net initialization"))?;
        Ok(beta)
    }

    /// Minimizes the fixed-graph objective from `warm` (working scale).
    pub fn cd_fixed_graph(
        &self,
        pen: &PenaltySpec<F>,
        graph: &RelationGraph,
        warm: ArrayView2<F>,
    ) -> Result<(Array2<F>, CdOutcome<F>)> {
        self.check_warm(warm)?;
        if graph.r() != self.work.r() {
            return Err(MinPenError::DimensionMismatch(format!(
                "graph is for r={} responses, data has r={}",
                graph.r(),
                self.work.r()
            )));
        }
        let mut beta = warm.to_owned();
        let mut loss = self.loss(beta.view());
        let outcome = cd::solve(
            loss.as_mut(),
            &mut beta,
            fixed_penalty(pen, graph),
            self.options("fixed-graph coordinate descent"),
        )?;
        Ok((beta, outcome))
    }

    fn minpen_objective(&self, beta: &Array2<F>, pen: &PenaltySpec<F>) -> Result<F> {
        objective_minpen(&self.work, &CoefMatrix::new(beta.clone()), pen)
    }

    fn finish(
        &self,
        beta: Array2<F>,
        graph: RelationGraph,
        pen: &PenaltySpec<F>,
        objective: F,
        trace: Vec<F>,
        outer_iters: usize,
        stop_reason: StopReason,
    ) -> FitResult<F> {
        FitResult {
            family: Family::Gaussian,
            coef: report(&self.work, &beta, &self.cfg),
            working: beta,
            standardization: self.work.standardization().cloned(),
            graph,
            pen: *pen,
            objective,
            objective_trace: trace,
            outer_iters,
            converged: stop_reason != StopReason::MaxIters,
            stop_reason,
        }
    }

    /// Alternates the closed-form set update with fixed-graph coordinate
    /// descent, starting from the elastic-net fit. `warm` only seeds the
    /// elastic-net solve.
    pub fn fit_minpen(&self, pen: &PenaltySpec<F>, warm: Option<ArrayView2<F>>) -> Result<FitResult<F>> {
        let init = self.init_elastic_net(pen, warm)?;
        let mask = self.cfg.mask.as_ref();
        let obj_tol = F::lit(self.cfg.obj_tol);
        let mut trace = vec![self.minpen_objective(&init, pen)?];
        let mut beta = init;
        let mut prev_graph: Option<RelationGraph> = None;
        let mut best: Option<(Array2<F>, RelationGraph, F)> = None;
        let mut stop = StopReason::MaxIters;
        let mut iters = 0;
        for _ in 0..self.cfg.outer_max_iters {
            let graph = update_sets_view(beta.view(), mask);
            if prev_graph.as_ref() == Some(&graph) {
                stop = StopReason::SetsStable;
                break;
            }
            let (next, _) = self.cd_fixed_graph(pen, &graph, beta.view())?;
            iters += 1;
            let obj = self.minpen_objective(&next, pen)?;
            let prev_obj = *trace.last().unwrap();
            trace.push(obj);
            if best.as_ref().is_none_or(|b| obj < b.2) {
                best = Some((next.clone(), graph.clone(), obj));
            }
            beta = next;
            if prev_obj - obj < obj_tol {
                stop = StopReason::ObjStall;
                break;
            }
            prev_graph = Some(graph);
        }
        let (beta, graph, obj) = best.expect("at least one outer iteration runs");
        Ok(self.finish(beta, graph, pen, obj, trace, iters, stop))
    }

    /// Fits with the relation graph held fixed.
    pub fn fit_fixed_graph(&self, pen: &PenaltySpec<F>, graph: &RelationGraph) -> Result<FitResult<F>> {
        let init = self.init_elastic_net(pen, None)?;
        let start = objective_gaussian(&self.work, &CoefMatrix::new(init.clone()), pen, graph)?;
        let (beta, _) = self.cd_fixed_graph(pen, graph, init.view())?;
        let obj = objective_gaussian(&self.work, &CoefMatrix::new(beta.clone()), pen, graph)?;
        Ok(self.finish(beta, graph.clone(), pen, obj, vec![start, obj], 1, StopReason::FixedGraph))
    }

    /// Solves the fixed-graph problem for every admissible graph from the
    /// elastic-net start and keeps the best pair. The reported graph is the
    /// set update of the winning coefficients, which attains the same
    /// objective and does not depend on enumeration order.
    pub fn oracle(&self, pen: &PenaltySpec<F>) -> Result<OracleResult<F>> {
        let mask = self.cfg.mask.as_ref();
        let graphs: Vec<RelationGraph> = enumerate_graphs(self.work.r(), self.cfg.enumeration_cap, mask)?.collect();
        let init = self.init_elastic_net(pen, None)?;
        let start = self.minpen_objective(&init, pen)?;
        let solved: Vec<(Array2<F>, F)> = graphs
            .par_iter()
            .map(|g| {
                let (beta, _) = self.cd_fixed_graph(pen, g, init.view())?;
                let obj = objective_gaussian(&self.work, &CoefMatrix::new(beta.clone()), pen, g)?;
                Ok((beta, obj))
            })
            .collect::<Result<_>>()?;
        let mut best = 0;
        for (i, (_, obj)) in solved.iter().enumerate() {
            if *obj < solved[best].1 {
                best = i;
            }
        }
        let beta = solved[best].0.clone();
        let graph = update_sets_view(beta.view(), mask);
        let obj = objective_gaussian(&self.work, &CoefMatrix::new(beta.clone()), pen, &graph)?;
        let table = graphs
            .into_iter()
            .zip(solved)
            .map(|(graph, (_, objective))| GraphObjective { graph, objective })
            .collect::<Vec<_>>();
        let fit = self.finish(beta, graph, pen, obj, vec![start, obj], table.len(), StopReason::Exhaustive);
        Ok(OracleResult { fit, table })
    }
}

fn fixed_penalty<'g, F: Scalar>(pen: &PenaltySpec<F>, graph: &'g RelationGraph) -> CdPenalty<'g, F> {
    CdPenalty {
        lasso: pen.delta,
        lasso_from: 0,
        fusion: pen.gamma,
        graph: if pen.gamma > F::zero() { Some(graph) } else { None },
        fuse_from: 0,
        ridge: F::zero(),
    }
}

fn as_given(cfg: &SolverConfig) -> SolverConfig {
    SolverConfig {
        standardize: false,
        ..cfg.clone()
    }
}

/// Per-response elastic net on `data` exactly as given (no standardization).
pub fn init_elastic_net<F: Scalar>(data: &Dataset<F>, pen: &PenaltySpec<F>, cfg: &SolverConfig) -> Result<CoefMatrix<F>> {
    let prob = GaussianProblem::new(data, &as_given(cfg))?;
    Ok(CoefMatrix::new(prob.init_elastic_net(pen, None)?))
}

/// Fixed-graph minimizer on `data` exactly as given, started from `warm`.
pub fn cd_fixed_graph<F: Scalar>(
    data: &Dataset<F>,
    pen: &PenaltySpec<F>,
    graph: &RelationGraph,
    warm: &CoefMatrix<F>,
    cfg: &SolverConfig,
) -> Result<CoefMatrix<F>> {
    let prob = GaussianProblem::new(data, &as_given(cfg))?;
    Ok(CoefMatrix::new(prob.cd_fixed_graph(pen, graph, warm.coefficients.view())?.0))
}

/// Coordinatewise violation of the subgradient optimality conditions of the
/// fixed-graph objective on `data` as given.
pub fn kkt_residuals<F: Scalar>(
    data: &Dataset<F>,
    coef: &CoefMatrix<F>,
    pen: &PenaltySpec<F>,
    graph: &RelationGraph,
) -> Result<Array2<F>> {
    coef.check_dims(data)?;
    let prob = GaussianProblem::new(data, &as_given(&SolverConfig::default()))?;
    let beta = &coef.coefficients;
    let loss = prob.loss(beta.view());
    let grad = cd::smooth_gradient(loss.as_ref(), beta, fixed_penalty(pen, graph));
    Ok(ndarray::Zip::from(&grad).and(beta).map_collect(|&g, &b| {
        if b != F::zero() {
            (g + pen.delta * b.signum()).abs()
        } else {
            (g.abs() - pen.delta).max(F::zero())
        }
    }))
}

pub fn fit_minpen<F: Scalar>(data: &Dataset<F>, pen: &PenaltySpec<F>, cfg: &SolverConfig) -> Result<FitResult<F>> {
    GaussianProblem::new(data, cfg)?.fit_minpen(pen, None)
}

pub fn fit_fixed_graph<F: Scalar>(
    data: &Dataset<F>,
    pen: &PenaltySpec<F>,
    graph: &RelationGraph,
    cfg: &SolverConfig,
) -> Result<FitResult<F>> {
    GaussianProblem::new(data, cfg)?.fit_fixed_graph(pen, graph)
}

pub fn oracle_minpen<F: Scalar>(data: &Dataset<F>, pen: &PenaltySpec<F>, cfg: &SolverConfig) -> Result<OracleResult<F>> {
    GaussianProblem::new(data, cfg)?.oracle(pen)
}
