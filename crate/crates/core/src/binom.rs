//! Multiple-binomial solver: IRLS quadratic approximations solved by
//! proximal coordinate descent, inside the same alternating set update as the
//! Gaussian solver.
//!
//! Coefficients live in a `(p+1) x r` matrix whose row 0 holds the
//! intercepts. Intercepts carry no lasso penalty; by default they take part in
//! the fusion penalty.

use std::borrow::Cow;

use ndarray::{s, Array2, ArrayView2};

use crate::cd::{self, CdOptions, CdPenalty, Weights};
use crate::error::{MinPenError, Result};
use crate::fit::{prepare, report, FitResult, SolverConfig, StopReason};
use crate::model::{fusion_fixed, fusion_min, Dataset, Family, PenaltySpec, RelationGraph};
use crate::relations::update_sets_view;
use crate::scalar::Scalar;

/// `(p+1) x r` coefficients; row 0 holds the intercepts.
pub type ThetaMatrix<F> = Array2<F>;

pub const PROB_CLAMP: f64 = 1e-5;

/// Working responses and weights of the quadratic approximation at a
/// reference coefficient matrix.
#[derive(Debug, Clone)]
pub struct QuadApprox<F> {
    pub z: Array2<F>,
    pub w: Array2<F>,
}

/// `[1, X]`.
pub fn design_with_intercept<F: Scalar>(x: ArrayView2<F>) -> Array2<F> {
    let mut u = Array2::<F>::ones((x.nrows(), x.ncols() + 1));
    u.slice_mut(s![.., 1..]).assign(&x);
    u
}

fn check_theta<F: Scalar>(data: &Dataset<F>, theta: ArrayView2<F>) -> Result<()> {
    if theta.dim() != (data.p() + 1, data.r()) {
        return Err(MinPenError::DimensionMismatch(format!(
            "theta is {}x{}, expected {}x{}",
            theta.nrows(),
            theta.ncols(),
            data.p() + 1,
            data.r()
        )));
    }
    Ok(())
}

fn linear_predictor<F: Scalar>(x: ArrayView2<F>, theta: ArrayView2<F>) -> Array2<F> {
    let mut eta = x.dot(&theta.slice(s![1.., ..]));
    eta += &theta.row(0);
    eta
}

/// Overflow-safe `1 / (1 + e^{-t})`.
pub fn logistic<F: Scalar>(t: F) -> F {
    if t >= F::zero() {
        F::one() / (F::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (F::one() + e)
    }
}

/// `log(1 + e^t)` without overflow.
pub fn softplus<F: Scalar>(t: F) -> F {
    t.max(F::zero()) + (-t.abs()).exp().ln_1p()
}

pub(crate) fn clamp_prob<F: Scalar>(p: F) -> F {
    let lo = F::lit(PROB_CLAMP);
    p.max(lo).min(F::one() - lo)
}

/// Success probabilities `π_ik`, clamped to `[1e-5, 1 - 1e-5]`.
pub fn link_probs<F: Scalar>(data: &Dataset<F>, theta: ArrayView2<F>) -> Result<Array2<F>> {
    check_theta(data, theta)?;
    Ok(linear_predictor(data.x(), theta).mapv(|t| clamp_prob(logistic(t))))
}

fn quad_from_eta<F: Scalar>(data: &Dataset<F>, eta: &Array2<F>) -> QuadApprox<F> {
    let (n, r) = eta.dim();
    let mut z = Array2::<F>::zeros((n, r));
    let mut w = Array2::<F>::zeros((n, r));
    for i in 0..n {
        for k in 0..r {
            let t = data.trial(i, k);
            let p = clamp_prob(logistic(eta[[i, k]]));
            let wk = t * p * (F::one() - p);
            w[[i, k]] = wk;
            z[[i, k]] = eta[[i, k]] + (data.y()[[i, k]] - t * p) / wk;
        }
    }
    QuadApprox { z, w }
}

/// Working responses `z = η + (y − tπ)/(tπ(1−π))` and weights `w = tπ(1−π)`.
pub fn build_quad<F: Scalar>(data: &Dataset<F>, theta: ArrayView2<F>) -> Result<QuadApprox<F>> {
    check_theta(data, theta)?;
    Ok(quad_from_eta(data, &linear_predictor(data.x(), theta)))
}

/// `−Σ_k Σ_i [y_ik η_ik − t_ik log(1 + e^{η_ik})]`.
pub fn negative_log_likelihood<F: Scalar>(data: &Dataset<F>, theta: ArrayView2<F>) -> Result<F> {
    check_theta(data, theta)?;
    Ok(nll_at(data, &linear_predictor(data.x(), theta)))
}

fn nll_at<F: Scalar>(data: &Dataset<F>, eta: &Array2<F>) -> F {
    let y = data.y();
    let mut total = F::zero();
    for ((i, k), &e) in eta.indexed_iter() {
        total += data.trial(i, k) * softplus(e) - y[[i, k]] * e;
    }
    total
}

/// Gradient of the negative log-likelihood in `θ`.
pub fn nll_gradient<F: Scalar>(data: &Dataset<F>, theta: ArrayView2<F>) -> Result<Array2<F>> {
    check_theta(data, theta)?;
    let eta = linear_predictor(data.x(), theta);
    let mut resid = Array2::<F>::zeros(eta.raw_dim());
    for ((i, k), &e) in eta.indexed_iter() {
        resid[[i, k]] = data.trial(i, k) * logistic(e) - data.y()[[i, k]];
    }
    let u = design_with_intercept(data.x());
    Ok(u.t().dot(&resid))
}

fn fuse_rows<F: Scalar>(theta: ArrayView2<'_, F>, fuse_intercepts: bool) -> ArrayView2<'_, F> {
    let from = if fuse_intercepts { 0 } else { 1 };
    theta.slice_move(s![from.., ..])
}

fn slope_l1<F: Scalar>(theta: ArrayView2<F>) -> F {
    theta.slice(s![1.., ..]).iter().map(|v| v.abs()).sum()
}

/// Penalized likelihood with the minimum fusion penalty, intercepts included
/// in the fusion vectors.
pub fn penalized_nll<F: Scalar>(data: &Dataset<F>, theta: ArrayView2<F>, pen: &PenaltySpec<F>) -> Result<F> {
    penalized_nll_with(data, theta, pen, true)
}

pub fn penalized_nll_with<F: Scalar>(
    data: &Dataset<F>,
    theta: ArrayView2<F>,
    pen: &PenaltySpec<F>,
    fuse_intercepts: bool,
) -> Result<F> {
    let nll = negative_log_likelihood(data, theta)?;
    Ok(nll + pen.delta * slope_l1(theta) + pen.gamma / F::lit(2.0) * fusion_min(fuse_rows(theta, fuse_intercepts)))
}

/// Penalized likelihood for a fixed relation graph.
pub fn penalized_nll_fixed<F: Scalar>(
    data: &Dataset<F>,
    theta: ArrayView2<F>,
    pen: &PenaltySpec<F>,
    graph: &RelationGraph,
    fuse_intercepts: bool,
) -> Result<F> {
    let nll = negative_log_likelihood(data, theta)?;
    Ok(nll
        + pen.delta * slope_l1(theta)
        + pen.gamma / F::lit(2.0) * fusion_fixed(fuse_rows(theta, fuse_intercepts), graph))
}

/// Gradient of the smooth part (likelihood plus fixed-graph fusion).
pub fn smooth_gradient_fixed<F: Scalar>(
    data: &Dataset<F>,
    theta: ArrayView2<F>,
    pen: &PenaltySpec<F>,
    graph: &RelationGraph,
    fuse_intercepts: bool,
) -> Result<Array2<F>> {
    let mut g = nll_gradient(data, theta)?;
    let fused = fuse_rows(theta, fuse_intercepts);
    let from = theta.nrows() - fused.nrows();
    // d/dθ of (γ/2) Σ_{l≠m} ‖θ_l − d_lm θ_m‖²
    for (l, m, d) in graph.triples() {
        let dm = F::from_i8(d).unwrap();
        for j in from..theta.nrows() {
            let diff = theta[[j, l]] - dm * theta[[j, m]];
            g[[j, l]] += pen.gamma * diff;
            g[[j, m]] -= pen.gamma * dm * diff;
        }
    }
    Ok(g)
}

/// A binomial data set prepared for repeated fits.
pub struct BinomialProblem<'a, F: Clone> {
    work: Cow<'a, Dataset<F>>,
    design: Array2<F>,
    cfg: SolverConfig,
}

impl<'a, F: Scalar> BinomialProblem<'a, F> {
    pub fn new(data: &'a Dataset<F>, cfg: &SolverConfig) -> Result<Self> {
        if data.family() != Family::Binomial {
            return Err(MinPenError::InvalidInput("the binomial solver needs a binomial data set".into()));
        }
        let work = prepare(data, cfg)?;
        let design = design_with_intercept(work.x());
        Ok(Self {
            work,
            design,
            cfg: cfg.clone(),
        })
    }

    pub fn working_data(&self) -> &Dataset<F> {
        &self.work
    }

    fn fuse_from(&self) -> usize {
        if self.cfg.fuse_intercepts {
            0
        } else {
            1
        }
    }

    /// Smallest `δ` for which the `γ = 0` fit has all slopes zero.
    pub fn delta_max(&self) -> F {
        let y = self.work.y();
        let x = self.work.x();
        let mut best = F::zero();
        for k in 0..self.work.r() {
            let (mut ys, mut ts) = (F::zero(), F::zero());
            for i in 0..self.work.n() {
                ys += y[[i, k]];
                ts += self.work.trial(i, k);
            }
            let pbar = ys / ts;
            for j in 0..self.work.p() {
                let g: F = (0..self.work.n())
                    .map(|i| x[[i, j]] * (y[[i, k]] - self.work.trial(i, k) * pbar))
                    .sum();
                best = best.max(g.abs());
            }
        }
        best
    }

    fn options(&self, stage: &'static str) -> CdOptions<F> {
        CdOptions {
            tol: F::lit(self.cfg.cd_tol),
            max_sweeps: self.cfg.cd_max_sweeps,
            kkt_tol: F::lit(10.0 * self.cfg.cd_tol),
            scale_kkt: true,
            stage,
        }
    }

    fn fixed_objective(&self, theta: &Array2<F>, pen: &PenaltySpec<F>, graph: Option<&RelationGraph>, ridge: F) -> F {
        let eta = linear_predictor(self.work.x(), theta.view());
        let fused = fuse_rows(theta.view(), self.cfg.fuse_intercepts);
        let mut obj = nll_at(&self.work, &eta) + pen.delta * slope_l1(theta.view());
        if let Some(g) = graph {
            obj += pen.gamma / F::lit(2.0) * fusion_fixed(fused, g);
        }
        if ridge > F::zero() {
            obj += ridge / F::lit(2.0) * fused.iter().map(|&v| v * v).sum::<F>();
        }
        obj
    }

    fn minpen_objective(&self, theta: &Array2<F>, pen: &PenaltySpec<F>) -> F {
        let eta = linear_predictor(self.work.x(), theta.view());
        nll_at(&self.work, &eta)
            + pen.delta * slope_l1(theta.view())
            + pen.gamma / F::lit(2.0) * fusion_min(fuse_rows(theta.view(), self.cfg.fuse_intercepts))
    }

    /// IRLS on the fixed-penalty problem (fixed graph, or a plain ridge when
    /// `graph` is `None`). Returns the iterate and whether IRLS converged
    /// before `irls_max_iters`.
    fn irls(
        &self,
        pen: &PenaltySpec<F>,
        graph: Option<&RelationGraph>,
        ridge: F,
        warm: Array2<F>,
        stage: &'static str,
    ) -> Result<(Array2<F>, bool)> {
        const MAX_HALVINGS: usize = 20;
        let cdpen = CdPenalty {
            lasso: pen.delta,
            lasso_from: 1,
            fusion: pen.gamma,
            graph: if pen.gamma > F::zero() { graph } else { None },
            fuse_from: self.fuse_from(),
            ridge,
        };
        let slack = |f: F| F::lit(64.0) * F::epsilon() * f.abs().max(F::one());
        let step_tol = F::lit(self.cfg.cd_tol);
        let mut theta = warm;
        let mut f = self.fixed_objective(&theta, pen, graph, ridge);
        for _ in 0..self.cfg.irls_max_iters {
            let eta = linear_predictor(self.work.x(), theta.view());
            let quad = quad_from_eta(&self.work, &eta);
            let mut cand = theta.clone();
            {
                let mut loss = cd::weighted_loss(self.design.view(), quad.z.view(), Weights::PerEntry(quad.w), cand.view());
                cd::solve(loss.as_mut(), &mut cand, cdpen, self.options(stage))?;
            }
            let mut f_new = self.fixed_objective(&cand, pen, graph, ridge);
            let mut halvings = 0;
            while f_new > f + slack(f) && halvings < MAX_HALVINGS {
                cand = (&theta + &cand) / F::lit(2.0);
                f_new = self.fixed_objective(&cand, pen, graph, ridge);
                halvings += 1;
            }
            let change = theta
                .iter()
                .zip(cand.iter())
                .fold(F::zero(), |a, (&u, &v)| a.max((u - v).abs()));
            if f_new > f + slack(f) {
                // a stalled step near the optimum: the clamped quadratic model
                // and the exact likelihood disagree at the level of the clamp
                let stalled = f_new - f <= F::lit(self.cfg.irls_tol) * f.abs().max(F::one());
                if change < step_tol || stalled {
                    return Ok((theta, true));
                }
                return Err(MinPenError::Divergence { halvings });
            }
            let rel = (f - f_new) / f.abs().max(F::one());
            theta = cand;
            f = f_new;
            if rel < F::lit(self.cfg.irls_tol) || change < step_tol {
                return Ok((theta, true));
            }
        }
        Ok((theta, false))
    }

    /// Per-response penalized logistic fits with penalty
    /// `δ‖ω_k‖₁ + γ‖θ_k‖²` (the squared norm over the fused rows).
    pub fn init_elastic_net(&self, pen: &PenaltySpec<F>, warm: Option<ArrayView2<F>>) -> Result<(Array2<F>, bool)> {
        let start = match warm {
            Some(w) => {
                check_theta(&self.work, w)?;
                w.to_owned()
            }
            None => Array2::zeros((self.work.p() + 1, self.work.r())),
        };
        self.irls(pen, None, F::lit(2.0) * pen.gamma, start, "binomial elastic-net initialization")
    }

    /// Minimizes the fixed-graph penalized likelihood from `warm`.
    pub fn fit_graph(&self, pen: &PenaltySpec<F>, graph: &RelationGraph, warm: ArrayView2<F>) -> Result<(Array2<F>, bool)> {
        check_theta(&self.work, warm)?;
        if graph.r() != self.work.r() {
            return Err(MinPenError::DimensionMismatch(format!(
                "graph is for r={} responses, data has r={}",
                graph.r(),
                self.work.r()
            )));
        }
        self.irls(pen, Some(graph), F::zero(), warm.to_owned(), "binomial fixed-graph coordinate descent")
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        theta: Array2<F>,
        graph: RelationGraph,
        pen: &PenaltySpec<F>,
        objective: F,
        trace: Vec<F>,
        outer_iters: usize,
        stop_reason: StopReason,
        irls_ok: bool,
    ) -> FitResult<F> {
        FitResult {
            family: Family::Binomial,
            coef: report(&self.work, &theta, &self.cfg),
            working: theta,
            standardization: self.work.standardization().cloned(),
            graph,
            pen: *pen,
            objective,
            objective_trace: trace,
            outer_iters,
            converged: irls_ok && stop_reason != StopReason::MaxIters,
            stop_reason,
        }
    }

    pub fn fit_minpen(&self, pen: &PenaltySpec<F>, warm: Option<ArrayView2<F>>) -> Result<FitResult<F>> {
        let (init, mut irls_ok) = self.init_elastic_net(pen, warm)?;
        let mask = self.cfg.mask.as_ref();
        let obj_tol = F::lit(self.cfg.obj_tol);
        let mut trace = vec![self.minpen_objective(&init, pen)];
        let mut theta = init;
        let mut prev_graph: Option<RelationGraph> = None;
        let mut best: Option<(Array2<F>, RelationGraph, F)> = None;
        let mut stop = StopReason::MaxIters;
        let mut iters = 0;
        for _ in 0..self.cfg.outer_max_iters {
            let graph = update_sets_view(fuse_rows(theta.view(), self.cfg.fuse_intercepts), mask);
            if prev_graph.as_ref() == Some(&graph) {
                stop = StopReason::SetsStable;
                break;
            }
            let (next, ok) = self.fit_graph(pen, &graph, theta.view())?;
            irls_ok &= ok;
            iters += 1;
            let obj = self.minpen_objective(&next, pen);
            let prev_obj = *trace.last().unwrap();
            trace.push(obj);
            if best.as_ref().is_none_or(|b| obj < b.2) {
                best = Some((next.clone(), graph.clone(), obj));
            }
            theta = next;
            if prev_obj - obj < obj_tol {
                stop = StopReason::ObjStall;
                break;
            }
            prev_graph = Some(graph);
        }
        let (theta, graph, obj) = best.expect("at least one outer iteration runs");
        Ok(self.finish(theta, graph, pen, obj, trace, iters, stop, irls_ok))
    }

    pub fn fit_fixed_graph(&self, pen: &PenaltySpec<F>, graph: &RelationGraph) -> Result<FitResult<F>> {
        let (init, ok0) = self.init_elastic_net(pen, None)?;
        let start = self.fixed_objective(&init, pen, Some(graph), F::zero());
        let (theta, ok) = self.fit_graph(pen, graph, init.view())?;
        let obj = self.fixed_objective(&theta, pen, Some(graph), F::zero());
        Ok(self.finish(theta, graph.clone(), pen, obj, vec![start, obj], 1, StopReason::FixedGraph, ok0 && ok))
    }
}

pub fn fit_binom_minpen<F: Scalar>(data: &Dataset<F>, pen: &PenaltySpec<F>, cfg: &SolverConfig) -> Result<FitResult<F>> {
    BinomialProblem::new(data, cfg)?.fit_minpen(pen, None)
}

pub fn fit_binom_fixed_graph<F: Scalar>(
    data: &Dataset<F>,
    pen: &PenaltySpec<F>,
    graph: &RelationGraph,
    cfg: &SolverConfig,
) -> Result<FitResult<F>> {
    BinomialProblem::new(data, cfg)?.fit_fixed_graph(pen, graph)
}

/// Sum over responses of the clamped binomial deviance contribution
/// `−Σ [y log π + (t − y) log(1 − π)]` at probabilities `probs`.
pub(crate) fn clamped_nll<F: Scalar>(data: &Dataset<F>, probs: ArrayView2<F>) -> F {
    let y = data.y();
    let mut total = F::zero();
    for ((i, k), &p) in probs.indexed_iter() {
        let p = clamp_prob(p);
        let t = data.trial(i, k);
        total -= y[[i, k]] * p.ln() + (t - y[[i, k]]) * (F::one() - p).ln();
    }
    total
}

/// Probabilities on raw-scale predictors from reported coefficients.
pub(crate) fn predict_probs<F: Scalar>(x: ArrayView2<F>, coef: &crate::model::CoefMatrix<F>) -> Array2<F> {
    coef.linear_predictor(x).mapv(logistic)
}
