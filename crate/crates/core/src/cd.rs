//! Cyclic coordinate descent for a sum of per-response quadratic losses plus
//! lasso, ridge and fixed-graph fusion penalties:
//!
//! ```text
//!   Σ_k ½ β_kᵀ G_k β_k − c_kᵀ β_k  +  δ Σ_{j ≥ lasso_from} |β_jk|
//!     + (γ/2) Σ_{l≠m} ‖β_l − d_lm β_m‖²  +  (ρ/2) ‖β‖²      (rows ≥ fuse_from)
//! ```
//!
//! Two loss back ends keep `q_jk = c_jk − (G_k β_k)_j` current: a Gram back end
//! (O(rows) per coefficient change) and a residual back end (O(n) per visit),
//! picked by whichever is cheaper for the problem shape.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Iterate, MinPenError, Result};
use crate::linalg::gram;
use crate::model::RelationGraph;
use crate::scalar::{soft_threshold, Scalar};

pub(crate) trait QuadLoss<F: Scalar> {
    fn dims(&self) -> (usize, usize);
    fn diag(&self, j: usize, k: usize) -> F;
    /// Negative gradient of the smooth loss at the current coefficients.
    fn neg_grad(&self, j: usize, k: usize) -> F;
    /// Record that `β_jk` moved by `delta`.
    fn shift(&mut self, j: usize, k: usize, delta: F);
}

pub(crate) enum GramSet<'a, F> {
    Shared(&'a Array2<F>),
    PerResponse(Vec<Array2<F>>),
}

impl<F> GramSet<'_, F> {
    #[inline]
    fn get(&self, k: usize) -> &Array2<F> {
        match self {
            GramSet::Shared(g) => g,
            GramSet::PerResponse(gs) => &gs[k],
        }
    }
}

pub(crate) struct GramLoss<'a, F> {
    grams: GramSet<'a, F>,
    q: Array2<F>,
}

impl<'a, F: Scalar> GramLoss<'a, F> {
    /// `linear` holds `c_k` as columns; `beta` is the starting point.
    pub fn new(grams: GramSet<'a, F>, linear: ArrayView2<F>, beta: ArrayView2<F>) -> Self {
        let mut q = linear.to_owned();
        for k in 0..q.ncols() {
            let gk = grams.get(k).dot(&beta.column(k));
            let mut col = q.column_mut(k);
            col -= &gk;
        }
        Self { grams, q }
    }
}

impl<F: Scalar> QuadLoss<F> for GramLoss<'_, F> {
    fn dims(&self) -> (usize, usize) {
        self.q.dim()
    }

    #[inline]
    fn diag(&self, j: usize, k: usize) -> F {
        self.grams.get(k)[[j, j]]
    }

    #[inline]
    fn neg_grad(&self, j: usize, k: usize) -> F {
        self.q[[j, k]]
    }

    #[inline]
    fn shift(&mut self, j: usize, k: usize, delta: F) {
        let g = self.grams.get(k);
        let gj = g.column(j);
        let mut qk = self.q.column_mut(k);
        qk.zip_mut_with(&gj, |q, &gv| *q -= gv * delta);
    }
}

/// Observation weights of a residual-backed loss.
pub(crate) enum Weights<F> {
    Uniform(F),
    PerEntry(Array2<F>),
}

pub(crate) struct ResidualLoss<'a, F> {
    design: ArrayView2<'a, F>,
    weights: Weights<F>,
    resid: Array2<F>,
    diag: Array2<F>,
}

impl<'a, F: Scalar> ResidualLoss<'a, F> {
    /// Loss `½ Σ_k Σ_i w_ik (t_ik − x_iᵀ β_k)²`.
    pub fn new(
        design: ArrayView2<'a, F>,
        targets: ArrayView2<F>,
        weights: Weights<F>,
        beta: ArrayView2<F>,
    ) -> Self {
        let resid = &targets - &design.dot(&beta);
        let (qn, r) = (design.ncols(), targets.ncols());
        let mut diag = Array2::<F>::zeros((qn, r));
        for j in 0..qn {
            let xj = design.column(j);
            for k in 0..r {
                diag[[j, k]] = match &weights {
                    Weights::Uniform(w) => xj.dot(&xj) * *w,
                    Weights::PerEntry(w) => xj
                        .iter()
                        .zip(w.column(k).iter())
                        .map(|(&x, &wi)| wi * x * x)
                        .sum(),
                };
            }
        }
        Self {
            design,
            weights,
            resid,
            diag,
        }
    }
}

impl<F: Scalar> QuadLoss<F> for ResidualLoss<'_, F> {
    fn dims(&self) -> (usize, usize) {
        self.diag.dim()
    }

    #[inline]
    fn diag(&self, j: usize, k: usize) -> F {
        self.diag[[j, k]]
    }

    fn neg_grad(&self, j: usize, k: usize) -> F {
        let xj = self.design.column(j);
        let rk = self.resid.column(k);
        match &self.weights {
            Weights::Uniform(w) => xj.dot(&rk) * *w,
            Weights::PerEntry(wm) => xj
                .iter()
                .zip(rk.iter())
                .zip(wm.column(k).iter())
                .map(|((&x, &res), &wi)| wi * x * res)
                .sum(),
        }
    }

    fn shift(&mut self, j: usize, k: usize, delta: F) {
        let xj = self.design.column(j);
        let mut rk = self.resid.column_mut(k);
        rk.zip_mut_with(&xj, |res, &x| *res -= x * delta);
    }
}

/// Chooses the Gram back end when the design is not wider than it is tall.
pub(crate) fn prefer_gram(n: usize, cols: usize) -> bool {
    cols <= n
}

/// Builds the loss `½ Σ_k Σ_i w_ik (t_ik − x_iᵀ β_k)²` with the cheaper back end.
pub(crate) fn weighted_loss<'a, F: Scalar>(
    design: ArrayView2<'a, F>,
    targets: ArrayView2<F>,
    weights: Weights<F>,
    beta: ArrayView2<F>,
) -> Box<dyn QuadLoss<F> + 'a> {
    if prefer_gram(design.nrows(), design.ncols()) {
        match &weights {
            Weights::Uniform(w) => {
                let g = gram(design, F::one() / *w);
                let c = design.t().dot(&targets) * *w;
                OwnedShared::wrap(g, c.view(), beta)
            }
            Weights::PerEntry(wm) => {
                let r = targets.ncols();
                let mut gs = Vec::with_capacity(r);
                let mut c = Array2::<F>::zeros((design.ncols(), r));
                for k in 0..r {
                    let wk = wm.column(k);
                    let mut scaled = design.to_owned();
                    for (mut row, &w) in scaled.axis_iter_mut(Axis(0)).zip(wk.iter()) {
                        row *= w.sqrt();
                    }
                    gs.push(gram(scaled.view(), F::one()));
                    let wt: ndarray::Array1<F> =
                        wk.iter().zip(targets.column(k).iter()).map(|(&w, &t)| w * t).collect();
                    c.column_mut(k).assign(&design.t().dot(&wt));
                }
                Box::new(GramLoss::new(GramSet::PerResponse(gs), c.view(), beta))
            }
        }
    } else {
        Box::new(ResidualLoss::new(design, targets, weights, beta))
    }
}

/// Gram loss owning one Gram matrix shared by every response.
struct OwnedShared<F> {
    g: Array2<F>,
    q: Array2<F>,
}

impl<F: Scalar> OwnedShared<F> {
    fn wrap<'a>(g: Array2<F>, linear: ArrayView2<F>, beta: ArrayView2<F>) -> Box<dyn QuadLoss<F> + 'a> {
        let q = &linear - &g.dot(&beta);
        Box::new(Self { g, q })
    }
}

impl<F: Scalar> QuadLoss<F> for OwnedShared<F> {
    fn dims(&self) -> (usize, usize) {
        self.q.dim()
    }

    #[inline]
    fn diag(&self, j: usize, _k: usize) -> F {
        self.g[[j, j]]
    }

    #[inline]
    fn neg_grad(&self, j: usize, k: usize) -> F {
        self.q[[j, k]]
    }

    #[inline]
    fn shift(&mut self, j: usize, k: usize, delta: F) {
        let gj = self.g.column(j);
        let mut qk = self.q.column_mut(k);
        qk.zip_mut_with(&gj, |q, &gv| *q -= gv * delta);
    }
}

/// Penalty configuration for one coordinate-descent solve.
#[derive(Clone, Copy)]
pub(crate) struct CdPenalty<'g, F> {
    pub lasso: F,
    /// Rows below this index carry no lasso penalty (binomial intercepts).
    pub lasso_from: usize,
    pub fusion: F,
    pub graph: Option<&'g RelationGraph>,
    /// Rows below this index take no part in fusion or ridge terms.
    pub fuse_from: usize,
    /// Coefficient `ρ` of `(ρ/2)‖β‖²`.
    pub ridge: F,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CdOptions<F> {
    pub tol: F,
    pub max_sweeps: usize,
    pub kkt_tol: F,
    /// Multiply `kkt_tol` by the largest curvature `max(1, G_k[j,j])`, for
    /// losses that are sums rather than means.
    pub scale_kkt: bool,
    pub stage: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct CdOutcome<F> {
    pub sweeps: usize,
    pub max_kkt: F,
}

/// Precomputed graph quantities: `c_k = (r−1) + #{l : d_lk ≠ 0}` and the
/// symmetric coupling `s_km = d_km + d_mk`.
struct Coupling<F> {
    r: usize,
    count: Vec<F>,
    sym: Vec<F>,
}

impl<F: Scalar> Coupling<F> {
    fn new(graph: Option<&RelationGraph>, r: usize) -> Self {
        let mut count = vec![F::zero(); r];
        let mut sym = vec![F::zero(); r * r];
        if let Some(g) = graph {
            for k in 0..r {
                let incoming = (0..r).filter(|&l| l != k && g.get(l, k) != 0).count();
                count[k] = F::from_usize_lossy(r - 1 + incoming);
                for m in 0..r {
                    if m != k {
                        sym[k * r + m] = F::from_i8(g.get(k, m) + g.get(m, k)).unwrap();
                    }
                }
            }
        }
        Self { r, count, sym }
    }

    #[inline]
    fn h(&self, beta: &Array2<F>, j: usize, k: usize) -> F {
        let row = beta.row(j);
        let s = &self.sym[k * self.r..(k + 1) * self.r];
        row.iter().zip(s.iter()).map(|(&b, &c)| b * c).sum()
    }
}

struct Engine<'g, F> {
    pen: CdPenalty<'g, F>,
    coupling: Coupling<F>,
}

impl<F: Scalar> Engine<'_, F> {
    #[inline]
    fn weights(&self, j: usize) -> (F, F, F) {
        let lasso = if j >= self.pen.lasso_from { self.pen.lasso } else { F::zero() };
        let (fusion, ridge) = if j >= self.pen.fuse_from && self.pen.graph.is_some() {
            (self.pen.fusion, self.pen.ridge)
        } else if j >= self.pen.fuse_from {
            (F::zero(), self.pen.ridge)
        } else {
            (F::zero(), F::zero())
        };
        (lasso, fusion, ridge)
    }

    /// Exact minimization over coordinate `(j, k)`; returns the absolute change.
    #[inline]
    fn update<L: QuadLoss<F> + ?Sized>(&self, loss: &mut L, beta: &mut Array2<F>, j: usize, k: usize) -> F {
        let (lasso, fusion, ridge) = self.weights(j);
        let old = beta[[j, k]];
        let a = loss.diag(j, k);
        let mut num = loss.neg_grad(j, k) + a * old;
        let mut den = a + ridge;
        if fusion != F::zero() {
            num += fusion * self.coupling.h(beta, j, k);
            den += fusion * self.coupling.count[k];
        }
        let new = if den > F::zero() {
            soft_threshold(num, lasso) / den
        } else {
            F::zero()
        };
        let delta = new - old;
        if delta != F::zero() {
            loss.shift(j, k, delta);
            beta[[j, k]] = new;
        }
        delta.abs()
    }

    /// Largest subgradient-optimality violation over all coordinates.
    fn kkt<L: QuadLoss<F> + ?Sized>(&self, loss: &L, beta: &Array2<F>) -> F {
        let (q, r) = beta.dim();
        let mut worst = F::zero();
        for k in 0..r {
            for j in 0..q {
                let (lasso, fusion, ridge) = self.weights(j);
                let b = beta[[j, k]];
                let mut g = -loss.neg_grad(j, k) + ridge * b;
                if fusion != F::zero() {
                    g += fusion * (self.coupling.count[k] * b - self.coupling.h(beta, j, k));
                }
                let v = if b != F::zero() {
                    (g + lasso * b.signum()).abs()
                } else {
                    (g.abs() - lasso).max(F::zero())
                };
                worst = worst.max(v);
            }
        }
        worst
    }
}

/// Gradient of the smooth part (loss, ridge and fusion) for every coordinate.
pub(crate) fn smooth_gradient<F: Scalar, L: QuadLoss<F> + ?Sized>(
    loss: &L,
    beta: &Array2<F>,
    pen: CdPenalty<'_, F>,
) -> Array2<F> {
    let engine = Engine {
        pen,
        coupling: Coupling::new(pen.graph, beta.ncols()),
    };
    let (q, r) = beta.dim();
    let mut out = Array2::<F>::zeros((q, r));
    for k in 0..r {
        for j in 0..q {
            let (_, fusion, ridge) = engine.weights(j);
            let b = beta[[j, k]];
            let mut g = -loss.neg_grad(j, k) + ridge * b;
            if fusion != F::zero() {
                g += fusion * (engine.coupling.count[k] * b - engine.coupling.h(beta, j, k));
            }
            out[[j, k]] = g;
        }
    }
    out
}

/// Runs cyclic coordinate descent (responses outer, rows inner) from `beta`.
///
/// Full sweeps alternate with sweeps over the current nonzero set; the solve
/// returns once a full sweep moves no coefficient by more than `tol` and the
/// subgradient conditions hold to `kkt_tol`.
pub(crate) fn solve<F: Scalar, L: QuadLoss<F> + ?Sized>(
    loss: &mut L,
    beta: &mut Array2<F>,
    pen: CdPenalty<'_, F>,
    opts: CdOptions<F>,
) -> Result<CdOutcome<F>> {
    let (q, r) = beta.dim();
    debug_assert_eq!(loss.dims(), (q, r));
    let engine = Engine {
        pen,
        coupling: Coupling::new(pen.graph, r),
    };
    let mut kkt_tol = opts.kkt_tol;
    if opts.scale_kkt {
        let mut curv = F::one();
        for k in 0..r {
            for j in 0..q {
                curv = curv.max(loss.diag(j, k));
            }
        }
        kkt_tol *= curv;
    }
    let mut sweeps = 0usize;
    let mut last_change = F::infinity();
    while sweeps < opts.max_sweeps {
        let mut change = F::zero();
        for k in 0..r {
            for j in 0..q {
                change = change.max(engine.update(loss, beta, j, k));
            }
        }
        sweeps += 1;
        last_change = change;
        if change < opts.tol {
            let max_kkt = engine.kkt(loss, beta);
            if max_kkt <= kkt_tol {
                return Ok(CdOutcome { sweeps, max_kkt });
            }
            continue;
        }
        // inner passes over the active set
        let active: Vec<(usize, usize)> = (0..r)
            .flat_map(|k| (0..q).map(move |j| (j, k)))
            .filter(|&(j, k)| beta[[j, k]] != F::zero())
            .collect();
        while sweeps < opts.max_sweeps {
            let mut inner = F::zero();
            for &(j, k) in &active {
                inner = inner.max(engine.update(loss, beta, j, k));
            }
            sweeps += 1;
            if inner < opts.tol {
                break;
            }
        }
    }
    Err(MinPenError::NotConverged {
        stage: opts.stage,
        iterations: sweeps,
        last_change: last_change.as_f64(),
        last_iterate: Box::new(Iterate {
            rows: q,
            cols: r,
            values: beta.iter().map(|v| v.as_f64()).collect(),
        }),
    })
}
