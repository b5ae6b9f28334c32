//! Confidence intervals for selected coefficients, conditional on the
//! selected support, its signs and the relation graph.
//!
//! Responses are stacked as `ỹ = vec(Y)` (response-major, entry `k n + i`)
//! against the block-diagonal design `X̃ = I_r ⊗ X`; coefficients use the
//! matching order `k p + j`. For a fixed graph the optimality conditions are
//! affine in `ỹ`, so the selection event is a polyhedron `{Γ ỹ ≤ u}` and a
//! linear contrast `ηᵀỹ` has a truncated normal law given the event.
//! `docs/inference.md` in the repository walks through the construction.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{MinPenError, Result};
use crate::fit::FitResult;
use crate::linalg::{gram, Cholesky};
use crate::model::{Dataset, Family, RelationGraph};
use crate::relations::laplacian;
use crate::scalar::Scalar;
use crate::truncnorm::trunc_norm_cdf;

/// Rows of `Γ` whose inner product with the contrast direction is below this
/// are treated as parallel to it.
pub const PARALLEL_TOL: f64 = 1e-12;
pub const BISECTION_TOL: f64 = 1e-8;
/// Slack allowed when checking that the observed response satisfies its own event.
pub const EVENT_SLACK: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SelectionEvent<F> {
    /// Selected indices into `0..p r` (order `k p + j`), ascending.
    pub q: Vec<usize>,
    pub signs: Vec<i8>,
    pub graph: RelationGraph,
    pub k_qq: Array2<F>,
    /// Rows of `K` outside `Q`, restricted to the `Q` columns.
    pub k_qcq: Array2<F>,
    /// Exact solution `K_QQ⁻¹((1/n) X̃_Qᵀ ỹ − δ s_Q)` for the observed data.
    pub beta_q: Array1<F>,
    /// Largest gap between `beta_q` and the fitted coefficients it replaces.
    pub refit_gap: F,
    pub delta: F,
    pub n: usize,
    pub p: usize,
    pub r: usize,
    /// Working-scale design and stacked responses.
    pub x: Array2<F>,
    pub y_tilde: Array1<F>,
}

#[derive(Debug, Clone)]
pub struct PolyhedralEvent<F> {
    pub gamma: Array2<F>,
    pub u: Array1<F>,
}

impl<F: Scalar> PolyhedralEvent<F> {
    /// Largest value of `Γ ỹ − u` (nonpositive when `ỹ` is inside).
    pub fn max_violation(&self, y: ArrayView1<F>) -> F {
        let gy = self.gamma.dot(&y);
        gy.iter()
            .zip(self.u.iter())
            .map(|(&g, &u)| g - u)
            .fold(F::neg_infinity(), F::max)
    }

    pub fn contains(&self, y: ArrayView1<F>) -> bool {
        self.max_violation(y) <= F::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    Known,
    ResidualFull,
    Diagonal,
}

/// Error covariance across responses (`r x r`); the stacked covariance is
/// `Σ ⊗ I_n`.
#[derive(Debug, Clone)]
pub struct SigmaSpec<F> {
    pub mode: SigmaMode,
    pub matrix: Array2<F>,
}

impl<F: Scalar> SigmaSpec<F> {
    pub fn known(matrix: Array2<F>) -> Result<Self> {
        let r = matrix.nrows();
        if matrix.ncols() != r || r == 0 {
            return Err(MinPenError::DimensionMismatch("Σ must be a nonempty square matrix".into()));
        }
        for a in 0..r {
            for b in 0..r {
                let (u, v) = (matrix[[a, b]], matrix[[b, a]]);
                if !u.is_finite() || (u - v).abs() > F::lit(1e-12) * (u.abs() + v.abs()).max(F::one()) {
                    return Err(MinPenError::InvalidInput("Σ must be finite and symmetric".into()));
                }
            }
        }
        Ok(Self {
            mode: SigmaMode::Known,
            matrix,
        })
    }

    pub fn identity(r: usize) -> Self {
        Self {
            mode: SigmaMode::Known,
            matrix: Array2::eye(r),
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(self.matrix.view(), F::lit(1e-12)).is_ok()
    }
}

/// Error covariance from the residuals of an unpenalized multivariate
/// regression with intercept: `EᵀE / (n − p − 1)`. Residuals at rounding
/// level relative to the responses count as exactly zero.
pub fn estimate_sigma<F: Scalar>(data: &Dataset<F>, mode: SigmaMode) -> Result<SigmaSpec<F>> {
    if data.family() != Family::Gaussian {
        return Err(MinPenError::InvalidInput("Σ estimation needs gaussian responses".into()));
    }
    if mode == SigmaMode::Known {
        return Err(MinPenError::InvalidInput("a known Σ is supplied, not estimated".into()));
    }
    let (n, p, r) = (data.n(), data.p(), data.r());
    if p + 1 >= n {
        return Err(MinPenError::InvalidInput(format!(
            "residual covariance needs p < n - 1 (n = {n}, p = {p})"
        )));
    }
    let xm = data.x().mean_axis(Axis(0)).expect("n >= 2");
    let ym = data.y().mean_axis(Axis(0)).expect("n >= 2");
    let xc = &data.x() - &xm;
    let yc = &data.y() - &ym;
    let ch = Cholesky::new(gram(xc.view(), F::one()).view(), F::lit(1e-12))?;
    let coef = ch.solve_mat(xc.t().dot(&yc).view());
    let e = &yc - &xc.dot(&coef);
    let mut sigma = gram(e.view(), F::from_usize_lossy(n - p - 1));
    let scale = yc.iter().map(|&v| v * v).sum::<F>();
    let floor = F::lit(1e-24) * scale;
    if e.iter().map(|&v| v * v).sum::<F>() <= floor {
        sigma.fill(F::zero());
    }
    if mode == SigmaMode::Diagonal {
        for a in 0..r {
            for b in 0..r {
                if a != b {
                    sigma[[a, b]] = F::zero();
                }
            }
        }
    }
    Ok(SigmaSpec { mode, matrix: sigma })
}

/// Working-scale design and responses the fit was computed on.
fn working_data<F: Scalar>(data: &Dataset<F>, fit: &FitResult<F>) -> Result<Dataset<F>> {
    match &fit.standardization {
        Some(st) => st.apply(data),
        None => Ok(data.clone()),
    }
}

/// `vec(Y)` in response-major order.
fn stack<F: Scalar>(y: ArrayView2<F>) -> Array1<F> {
    y.t().iter().copied().collect()
}

/// Assembles the selection event of a Gaussian fit at its own `(δ, γ)` and graph.
pub fn build_event<F: Scalar>(data: &Dataset<F>, fit: &FitResult<F>) -> Result<(SelectionEvent<F>, PolyhedralEvent<F>)> {
    if data.family() != Family::Gaussian || fit.family != Family::Gaussian {
        return Err(MinPenError::InvalidInput("selective inference covers gaussian fits only".into()));
    }
    if !(fit.pen.delta > F::zero()) {
        return Err(MinPenError::InvalidInput("selective inference needs delta > 0".into()));
    }
    let work = working_data(data, fit)?;
    let (n, p, r) = (work.n(), work.p(), work.r());
    if fit.working.dim() != (p, r) {
        return Err(MinPenError::DimensionMismatch("fit does not match the data".into()));
    }
    let nf = F::from_usize_lossy(n);
    let delta = fit.pen.delta;
    let x = work.x().to_owned();
    let y_tilde = stack(work.y());
    let pr = p * r;

    // K = (1/n) X̃ᵀX̃ + γ L: block diagonal Gram plus the Laplacian
    let g = gram(x.view(), nf);
    let mut k_full = laplacian::<F>(&fit.graph, p) * fit.pen.gamma;
    for k in 0..r {
        let mut block = k_full.slice_mut(s![k * p..(k + 1) * p, k * p..(k + 1) * p]);
        block += &g;
    }
    let beta_vec: Vec<F> = fit.working.t().iter().copied().collect();
    let q: Vec<usize> = (0..pr).filter(|&i| beta_vec[i] != F::zero()).collect();
    let qc: Vec<usize> = (0..pr).filter(|&i| beta_vec[i] == F::zero()).collect();
    let signs: Vec<i8> = q.iter().map(|&i| if beta_vec[i] > F::zero() { 1 } else { -1 }).collect();
    let nq = q.len();
    let nr = n * r;

    let k_qq = k_full.select(Axis(0), &q).select(Axis(1), &q);
    let k_qcq = k_full.select(Axis(0), &qc).select(Axis(1), &q);

    // (1/n) X̃ᵀ as a p r x n r operator applied row by row
    let xt_row = |idx: usize| -> Array1<F> {
        let (k, j) = (idx / p, idx % p);
        let mut row = Array1::<F>::zeros(nr);
        row.slice_mut(s![k * n..(k + 1) * n]).assign(&(&x.column(j) / nf));
        row
    };

    let mut gamma_rows = Array2::<F>::zeros((nq + 2 * qc.len(), nr));
    let mut u = Array1::<F>::zeros(nq + 2 * qc.len());
    let (beta_q, refit_gap) = if nq > 0 {
        let ch = Cholesky::new(k_qq.view(), F::lit(1e-12)).map_err(|e| {
            MinPenError::NotPositiveDefinite(format!("K_QQ is rank deficient ({e})"))
        })?;
        let mut xq_t = Array2::<F>::zeros((nq, nr));
        for (a, &idx) in q.iter().enumerate() {
            xq_t.row_mut(a).assign(&xt_row(idx));
        }
        let m = ch.solve_mat(xq_t.view());
        let s_q: Array1<F> = signs.iter().map(|&v| F::from_i8(v).unwrap()).collect();
        let b = ch.solve_vec(s_q.view()) * delta;
        let beta_q = m.dot(&y_tilde) - &b;
        let gap = q
            .iter()
            .zip(beta_q.iter())
            .fold(F::zero(), |acc, (&i, &v)| acc.max((v - beta_vec[i]).abs()));
        for a in 0..nq {
            let sa = s_q[a];
            gamma_rows.row_mut(a).assign(&(&m.row(a) * (-sa)));
            u[a] = -sa * b[a];
        }
        let km = k_qcq.dot(&m);
        let kb = k_qcq.dot(&b);
        for (c, &idx) in qc.iter().enumerate() {
            let gj = (&xt_row(idx) - &km.row(c)) / delta;
            let hj = kb[c] / delta;
            gamma_rows.row_mut(nq + 2 * c).assign(&gj);
            u[nq + 2 * c] = F::one() - hj;
            gamma_rows.row_mut(nq + 2 * c + 1).assign(&gj.mapv(|v| -v));
            u[nq + 2 * c + 1] = F::one() + hj;
        }
        (beta_q, gap)
    } else {
        for (c, &idx) in qc.iter().enumerate() {
            let gj = xt_row(idx) / delta;
            gamma_rows.row_mut(2 * c).assign(&gj);
            u[2 * c] = F::one();
            gamma_rows.row_mut(2 * c + 1).assign(&gj.mapv(|v| -v));
            u[2 * c + 1] = F::one();
        }
        (Array1::zeros(0), F::zero())
    };
    let poly = PolyhedralEvent { gamma: gamma_rows, u };
    let violation = poly.max_violation(y_tilde.view());
    if violation > F::lit(EVENT_SLACK) {
        return Err(MinPenError::InconsistentEvent(format!(
            "observed responses violate a selection constraint by {:e}",
            violation.as_f64()
        )));
    }
    let event = SelectionEvent {
        q,
        signs,
        graph: fit.graph.clone(),
        k_qq,
        k_qcq,
        beta_q,
        refit_gap,
        delta,
        n,
        p,
        r,
        x,
        y_tilde,
    };
    Ok((event, poly))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaKind {
    /// `η = X̃_Q (X̃_QᵀX̃_Q)⁻¹ e_j`, targeting the projection of the mean onto
    /// the selected columns.
    Selected,
    /// `η = X̃ (X̃ᵀX̃)⁻¹ e_j` with the full design.
    FullDesign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectiveInterval<F> {
    /// Position within `Q`.
    pub position: usize,
    pub response: usize,
    pub predictor: usize,
    /// Penalized estimate (working scale).
    pub estimate: F,
    /// `ηᵀỹ`, the unpenalized estimate of the target.
    pub eta_y: F,
    pub sd: F,
    pub v_minus: F,
    pub v_plus: F,
    pub lower: F,
    pub upper: F,
}

impl<F: Scalar> SelectionEvent<F> {
    /// Column `idx` of `X̃` (length `n r`).
    fn design_column(&self, idx: usize) -> Array1<F> {
        let (k, j) = (idx / self.p, idx % self.p);
        let mut col = Array1::<F>::zeros(self.n * self.r);
        col.slice_mut(s![k * self.n..(k + 1) * self.n]).assign(&self.x.column(j));
        col
    }

    /// Contrast vector for the selected coefficient at `position` in `Q`.
    pub fn eta(&self, position: usize, kind: EtaKind) -> Result<Array1<F>> {
        if position >= self.q.len() {
            return Err(MinPenError::InvalidInput(format!(
                "position {position} is outside the selected set of size {}",
                self.q.len()
            )));
        }
        let cols: Vec<usize> = match kind {
            EtaKind::Selected => self.q.clone(),
            EtaKind::FullDesign => (0..self.p * self.r).collect(),
        };
        let target = match kind {
            EtaKind::Selected => position,
            EtaKind::FullDesign => self.q[position],
        };
        let mut xs = Array2::<F>::zeros((self.n * self.r, cols.len()));
        for (a, &idx) in cols.iter().enumerate() {
            xs.column_mut(a).assign(&self.design_column(idx));
        }
        let ch = Cholesky::new(gram(xs.view(), F::one()).view(), F::lit(1e-12))
            .map_err(|e| MinPenError::NotPositiveDefinite(format!("X̃ᵀX̃ on the chosen columns ({e})")))?;
        let mut e = Array1::<F>::zeros(cols.len());
        e[target] = F::one();
        Ok(xs.dot(&ch.solve_vec(e.view())))
    }
}

/// `(Σ ⊗ I_n) v` for `v` in response-major order.
fn sigma_times<F: Scalar>(sigma: &Array2<F>, v: ArrayView1<F>, n: usize, r: usize) -> Array1<F> {
    let h = Array2::from_shape_fn((n, r), |(i, k)| v[k * n + i]);
    let hs = h.dot(sigma);
    stack(hs.view())
}

/// Truncation limits `[V⁻, V⁺]` of `ηᵀỹ` given the event.
pub fn truncation_limits<F: Scalar>(poly: &PolyhedralEvent<F>, y: ArrayView1<F>, eta: ArrayView1<F>, c: ArrayView1<F>) -> (F, F) {
    let eta_y = eta.dot(&y);
    let gc = poly.gamma.dot(&c);
    let gy = poly.gamma.dot(&y);
    let tol = F::lit(PARALLEL_TOL);
    let (mut lo, mut hi) = (F::neg_infinity(), F::infinity());
    for i in 0..poly.u.len() {
        let a = gc[i];
        if a.abs() < tol {
            continue;
        }
        // Γz = Γỹ − (Γc) ηᵀỹ
        let gz = gy[i] - a * eta_y;
        let bound = (poly.u[i] - gz) / a;
        if a < F::zero() {
            lo = lo.max(bound);
        } else {
            hi = hi.min(bound);
        }
    }
    (lo, hi)
}

/// Solves `trunc_norm_cdf(x; μ, var, a, b) = target` for `μ` by bisection.
fn solve_mu(x: f64, var: f64, a: f64, b: f64, target: f64) -> Result<f64> {
    let sd = var.sqrt();
    let f = |mu: f64| trunc_norm_cdf(x, mu, var, a, b).map(|v| v - target);
    let mut step = 4.0 * sd;
    let mut lo = x - step;
    while f(lo)? < 0.0 {
        step *= 2.0;
        lo = x - step;
        if !lo.is_finite() || step > 1e300 {
            return Err(MinPenError::Numerical("could not bracket the lower pivot root".into()));
        }
    }
    step = 4.0 * sd;
    let mut hi = x + step;
    while f(hi)? > 0.0 {
        step *= 2.0;
        hi = x + step;
        if !hi.is_finite() || step > 1e300 {
            return Err(MinPenError::Numerical("could not bracket the upper pivot root".into()));
        }
    }
    for _ in 0..2000 {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Confidence interval at level `1 − alpha` for the selected coefficient at
/// `position` in `Q`.
pub fn selective_interval<F: Scalar>(
    event: &SelectionEvent<F>,
    poly: &PolyhedralEvent<F>,
    sigma: &SigmaSpec<F>,
    position: usize,
    alpha: F,
    kind: EtaKind,
) -> Result<SelectiveInterval<F>> {
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(MinPenError::InvalidInput("alpha must lie in (0, 1)".into()));
    }
    if sigma.matrix.dim() != (event.r, event.r) {
        return Err(MinPenError::DimensionMismatch("Σ does not match the number of responses".into()));
    }
    if !sigma.is_positive_definite() {
        return Err(MinPenError::NotPositiveDefinite("error covariance Σ".into()));
    }
    let eta = event.eta(position, kind)?;
    let s_eta = sigma_times(&sigma.matrix, eta.view(), event.n, event.r);
    let var = eta.dot(&s_eta);
    let c = &s_eta / var;
    let y = event.y_tilde.view();
    let (v_minus, v_plus) = truncation_limits(poly, y, eta.view(), c.view());
    let eta_y = eta.dot(&y);
    if !(v_minus < v_plus) {
        return Err(MinPenError::DegenerateTruncation {
            lower: v_minus.as_f64(),
            upper: v_plus.as_f64(),
        });
    }
    let a = alpha.as_f64();
    let (x, v, lo, hi) = (eta_y.as_f64(), var.as_f64(), v_minus.as_f64(), v_plus.as_f64());
    let lower = solve_mu(x, v, lo, hi, 1.0 - a / 2.0)?;
    let upper = solve_mu(x, v, lo, hi, a / 2.0)?;
    let idx = event.q[position];
    Ok(SelectiveInterval {
        position,
        response: idx / event.p,
        predictor: idx % event.p,
        estimate: event.beta_q[position],
        eta_y,
        sd: var.sqrt(),
        v_minus,
        v_plus,
        lower: F::lit(lower),
        upper: F::lit(upper),
    })
}

/// Unadjusted interval `ηᵀỹ ± z_{1−α/2} sd`.
pub fn naive_interval(center: f64, sd: f64, alpha: f64) -> (f64, f64) {
    let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    (center - z * sd, center + z * sd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalStatus {
    Ok,
    Degenerate,
    Failed,
}

/// One reported interval on the reporting scale of the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRow<F> {
    pub response: usize,
    pub predictor: usize,
    pub estimate: F,
    pub lower: F,
    pub upper: F,
    pub alpha: F,
    pub status: IntervalStatus,
}

/// Intervals for every selected coefficient. Degenerate truncations are
/// flagged per row rather than aborting. Estimates and limits are mapped to
/// the input scale when the fit reports there.
pub fn interval_table<F: Scalar>(
    data: &Dataset<F>,
    fit: &FitResult<F>,
    sigma: &SigmaSpec<F>,
    alpha: F,
    kind: EtaKind,
    report_standardized: bool,
) -> Result<Vec<IntervalRow<F>>> {
    let (event, poly) = build_event(data, fit)?;
    let scales = match (&fit.standardization, report_standardized) {
        (Some(st), false) => Some(st.column_scales.clone()),
        _ => None,
    };
    let mut rows = Vec::with_capacity(event.q.len());
    for pos in 0..event.q.len() {
        let idx = event.q[pos];
        let (k, j) = (idx / event.p, idx % event.p);
        let scale = scales.as_ref().map_or(F::one(), |s| s[j]);
        let row = match selective_interval(&event, &poly, sigma, pos, alpha, kind) {
            Ok(iv) => IntervalRow {
                response: k,
                predictor: j,
                estimate: iv.estimate / scale,
                lower: iv.lower / scale,
                upper: iv.upper / scale,
                alpha,
                status: IntervalStatus::Ok,
            },
            Err(err) => {
                let status = match err {
                    MinPenError::DegenerateTruncation { .. } => IntervalStatus::Degenerate,
                    MinPenError::NotPositiveDefinite(_) | MinPenError::InvalidInput(_) => return Err(err),
                    _ => IntervalStatus::Failed,
                };
                IntervalRow {
                    response: k,
                    predictor: j,
                    estimate: event.beta_q[pos] / scale,
                    lower: F::nan(),
                    upper: F::nan(),
                    alpha,
                    status,
                }
            }
        };
        rows.push(row);
    }
    Ok(rows)
}
