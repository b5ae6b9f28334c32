//! Data generators and independent reference solvers shared by the
//! integration tests. Nothing here calls into the solver code paths under
//! test; linear algebra goes through nalgebra.

#![allow(dead_code)]

use minpen::{Dataset, Family, RelationGraph};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
}

/// Sparse coefficients: each entry nonzero with probability `density`,
/// values uniform in `±[0.5, 1.0]`.
pub fn sparse_coef(rng: &mut ChaCha8Rng, p: usize, r: usize, density: f64) -> Array2<f64> {
    Array2::from_shape_fn((p, r), |_| {
        if rng.random::<f64>() < density {
            let mag = 0.5 + 0.5 * rng.random::<f64>();
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        } else {
            0.0
        }
    })
}

pub fn gaussian_data(seed: u64, n: usize, p: usize, r: usize, noise: f64) -> (Dataset<f64>, Array2<f64>) {
    let mut g = rng(seed);
    let x = normal_matrix(&mut g, n, p);
    let b = sparse_coef(&mut g, p, r, 0.5);
    let e = normal_matrix(&mut g, n, r) * noise;
    let y = x.dot(&b) + e;
    (Dataset::new(x, y, Family::Gaussian).unwrap(), b)
}

pub fn binomial_data(seed: u64, n: usize, p: usize, r: usize) -> (Dataset<f64>, Array2<f64>) {
    let mut g = rng(seed);
    let x = normal_matrix(&mut g, n, p);
    let b = sparse_coef(&mut g, p, r, 0.5);
    let eta = x.dot(&b);
    let y = eta.mapv(|e| if g.random::<f64>() < 1.0 / (1.0 + (-e).exp()) { 1.0 } else { 0.0 });
    (Dataset::new(x, y, Family::Binomial).unwrap(), b)
}

pub fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn to_nv(a: &Array1<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len(), a.iter().copied())
}

/// Column means and `sqrt(mean squared deviation)` scales.
pub fn column_moments(x: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let mut means = Vec::new();
    let mut scales = Vec::new();
    for col in x.columns() {
        let m = col.sum() / n;
        let v = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        means.push(m);
        scales.push(v.sqrt());
    }
    (means, scales)
}

pub fn standardize_x(x: &Array2<f64>) -> (Array2<f64>, Vec<f64>, Vec<f64>) {
    let (m, s) = column_moments(x);
    let z = Array2::from_shape_fn(x.dim(), |(i, j)| (x[[i, j]] - m[j]) / s[j]);
    (z, m, s)
}

/// Direct evaluation of `(γ/2) Σ_{l≠m} ‖β_l − d_lm β_m‖²` (rows `from..`).
pub fn fusion_direct(b: &Array2<f64>, graph: &RelationGraph, from: usize) -> f64 {
    let r = b.ncols();
    let mut total = 0.0;
    for l in 0..r {
        for m in 0..r {
            if l == m {
                continue;
            }
            let d = graph.get(l, m) as f64;
            total += (from..b.nrows()).map(|j| (b[[j, l]] - d * b[[j, m]]).powi(2)).sum::<f64>();
        }
    }
    total
}

/// Hessian of `(1/2) Σ_{l≠m} ‖β_l − d_lm β_m‖²` in `k p + j` order, built
/// entry by entry from the pair terms.
pub fn fusion_hessian(graph: &RelationGraph, p: usize) -> DMatrix<f64> {
    let r = graph.r();
    let mut h = DMatrix::<f64>::zeros(p * r, p * r);
    for l in 0..r {
        for m in 0..r {
            if l == m {
                continue;
            }
            let d = graph.get(l, m) as f64;
            for j in 0..p {
                let (a, b) = (l * p + j, m * p + j);
                h[(a, a)] += 1.0;
                h[(b, b)] += d * d;
                h[(a, b)] -= d;
                h[(b, a)] -= d;
            }
        }
    }
    h
}

/// Exact minimizer of `½ bᵀ K b − cᵀ b + δ ‖b‖₁` for positive definite `K`,
/// found by trying every sign pattern and keeping the one whose restricted
/// stationary point satisfies the subgradient conditions (ties resolved by
/// the smallest objective).
pub fn l1_quadratic_exact(k: &DMatrix<f64>, c: &DVector<f64>, delta: f64) -> DVector<f64> {
    let d = c.len();
    assert!(d <= 10, "sign enumeration is exponential");
    let total = 3usize.pow(d as u32);
    let objective = |b: &DVector<f64>| 0.5 * (b.transpose() * k * b)[(0, 0)] - c.dot(b) + delta * b.abs().sum();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..total {
        let mut signs = vec![0i8; d];
        let mut t = code;
        for s in signs.iter_mut() {
            *s = (t % 3) as i8 - 1;
            t /= 3;
        }
        let act: Vec<usize> = (0..d).filter(|&i| signs[i] != 0).collect();
        let mut b = DVector::<f64>::zeros(d);
        if !act.is_empty() {
            let ka = DMatrix::from_fn(act.len(), act.len(), |a, e| k[(act[a], act[e])]);
            let rhs = DVector::from_fn(act.len(), |a, _| c[act[a]] - delta * signs[act[a]] as f64);
            let Some(sol) = ka.lu().solve(&rhs) else { continue };
            for (a, &i) in act.iter().enumerate() {
                b[i] = sol[a];
            }
            if act.iter().any(|&i| b[i] * signs[i] as f64 <= 0.0) {
                continue;
            }
        }
        let grad = k * &b - c;
        let ok = (0..d).all(|i| signs[i] != 0 || grad[i].abs() <= delta * (1.0 + 1e-10) + 1e-12);
        if ok {
            let obj = objective(&b);
            if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                best = Some((obj, b));
            }
        }
    }
    best.expect("a strictly convex problem has a KKT point").1
}

/// Exact fixed-graph Gaussian solution on data taken as given:
/// `(1/2n)‖Y − XB‖² + δ‖B‖₁ + (γ/2)Σ‖β_l − d β_m‖² + (ridge/2)‖B‖²`.
pub fn fixed_graph_exact(x: &Array2<f64>, y: &Array2<f64>, delta: f64, gamma: f64, ridge: f64, graph: &RelationGraph) -> Array2<f64> {
    let (n, p) = x.dim();
    let r = y.ncols();
    let xn = to_na(x);
    let g = xn.transpose() * &xn / n as f64;
    let mut k = fusion_hessian(graph, p) * gamma;
    let mut c = DVector::<f64>::zeros(p * r);
    for kk in 0..r {
        let yk = DVector::from_iterator(n, y.column(kk).iter().copied());
        let xty = xn.transpose() * yk / n as f64;
        for a in 0..p {
            c[kk * p + a] = xty[a];
            for b in 0..p {
                k[(kk * p + a, kk * p + b)] += g[(a, b)];
            }
            k[(kk * p + a, kk * p + a)] += ridge;
        }
    }
    let b = l1_quadratic_exact(&k, &c, delta);
    Array2::from_shape_fn((p, r), |(j, kk)| b[kk * p + j])
}

/// Lasso-penalized logistic regression for one response by accelerated
/// proximal gradient with backtracking: `Σ_i softplus(η_i) − y_i η_i +
/// δ Σ_{j≥1} |θ_j|`, where `θ_0` is an unpenalized intercept.
pub fn logistic_lasso_reference(x: &Array2<f64>, y: &[f64], delta: f64) -> Vec<f64> {
    let (n, p) = x.dim();
    let eta = |t: &[f64]| -> Vec<f64> { (0..n).map(|i| t[0] + (0..p).map(|j| x[[i, j]] * t[j + 1]).sum::<f64>()).collect() };
    let smooth = |t: &[f64]| -> f64 {
        eta(t)
            .iter()
            .zip(y)
            .map(|(&e, &yi)| {
                let sp = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
                sp - yi * e
            })
            .sum()
    };
    let grad = |t: &[f64]| -> Vec<f64> {
        let e = eta(t);
        let res: Vec<f64> = e.iter().zip(y).map(|(&e, &yi)| 1.0 / (1.0 + (-e).exp()) - yi).collect();
        let mut g = vec![0.0; p + 1];
        for i in 0..n {
            g[0] += res[i];
            for j in 0..p {
                g[j + 1] += res[i] * x[[i, j]];
            }
        }
        g
    };
    let prox = |v: &[f64], step: f64| -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(j, &a)| if j == 0 { a } else { a.signum() * (a.abs() - step * delta).max(0.0) })
            .collect()
    };
    let mut theta = vec![0.0; p + 1];
    let mut z = theta.clone();
    let mut tk: f64 = 1.0;
    let mut step = 1.0;
    for _ in 0..200_000 {
        let gz = grad(&z);
        let fz = smooth(&z);
        let next = loop {
            let cand = prox(&z.iter().zip(&gz).map(|(a, g)| a - step * g).collect::<Vec<_>>(), step);
            let diff: Vec<f64> = cand.iter().zip(&z).map(|(a, b)| a - b).collect();
            let quad = fz + diff.iter().zip(&gz).map(|(d, g)| d * g).sum::<f64>() + diff.iter().map(|d| d * d).sum::<f64>() / (2.0 * step);
            if smooth(&cand) <= quad + 1e-12 {
                break cand;
            }
            step *= 0.5;
        };
        // adaptive restart: drop the momentum when it points uphill
        let uphill: f64 = z.iter().zip(&next).zip(&theta).map(|((zz, a), b)| (zz - a) * (a - b)).sum();
        if uphill > 0.0 {
            tk = 1.0;
        }
        let t_next = (1.0 + (1.0 + 4.0 * tk * tk).sqrt()) / 2.0;
        let change = next.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        z = next.iter().zip(&theta).map(|(a, b)| a + (tk - 1.0) / t_next * (a - b)).collect();
        theta = next;
        tk = t_next;
        if change < 1e-13 {
            break;
        }
    }
    theta
}

/// Standard normal CDF on the plain ratio scale (no tail handling).
pub fn phi_cdf(t: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-t / std::f64::consts::SQRT_2)
}

/// Truncated normal CDF by adaptive Simpson integration of the density.
pub fn trunc_cdf_quadrature(x: f64, mu: f64, var: f64, a: f64, b: f64) -> f64 {
    let sd = var.sqrt();
    let (lo, hi, t) = ((a - mu) / sd, (b - mu) / sd, (x.clamp(a, b) - mu) / sd);
    // density rescaled so its largest value on [lo, hi] is 1
    let peak = if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        hi
    } else {
        0.0
    };
    let f = |s: f64| (-(s * s - peak * peak) / 2.0).exp();
    let num = adaptive_simpson(&f, lo, t, 1e-15, 60);
    let den = adaptive_simpson(&f, lo, hi, 1e-15, 60);
    num / den
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    if b <= a {
        return 0.0;
    }
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, whole: f64, m: f64, fm: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1) + rec(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, depth)
}

/// Selective interval of one lasso coefficient following the polyhedral
/// construction for `(1/2)‖y − Xβ‖² + λ‖β‖₁` with noise variance `sigma2`.
/// Returns `(lower, upper, v_minus, v_plus, eta_y)` for the `j`-th selected
/// variable (position within `active`).
pub struct LassoPivot {
    pub lower: f64,
    pub upper: f64,
    pub v_minus: f64,
    pub v_plus: f64,
    pub eta_y: f64,
}

pub fn lasso_pivot_reference(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    active: &[usize],
    signs: &[f64],
    j: usize,
    sigma2: f64,
    alpha: f64,
) -> LassoPivot {
    let (n, p) = (x.nrows(), x.ncols());
    let inactive: Vec<usize> = (0..p).filter(|i| !active.contains(i)).collect();
    let xe = x.select_columns(active);
    let xm = x.select_columns(&inactive);
    let gram_inv = (xe.transpose() * &xe).try_inverse().unwrap();
    let pinv_t = &xe * &gram_inv; // (X_E^+)^T
    let proj = &xe * &gram_inv * xe.transpose();
    let s = DVector::from_column_slice(signs);
    let resid_op = DMatrix::<f64>::identity(n, n) - proj;
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    if !inactive.is_empty() {
        let a0 = xm.transpose() * &resid_op / lambda;
        let shift = xm.transpose() * &pinv_t * &s;
        for i in 0..inactive.len() {
            rows.push(a0.row(i).transpose());
            rhs.push(1.0 - shift[i]);
            rows.push(-a0.row(i).transpose());
            rhs.push(1.0 + shift[i]);
        }
    }
    let a1 = -(DMatrix::from_diagonal(&s) * &gram_inv * xe.transpose());
    let b1 = -(DMatrix::from_diagonal(&s) * &gram_inv * &s) * lambda;
    for i in 0..active.len() {
        rows.push(a1.row(i).transpose());
        rhs.push(b1[i]);
    }
    let eta = pinv_t.column(j).into_owned();
    let eta_y = eta.dot(y);
    let var = sigma2 * eta.dot(&eta);
    let c = &eta * (sigma2 / var);
    let z = y - &c * eta_y;
    let (mut vm, mut vp) = (f64::NEG_INFINITY, f64::INFINITY);
    for (row, &b) in rows.iter().zip(&rhs) {
        let ac = row.dot(&c);
        let val = (b - row.dot(&z)) / ac;
        if ac < -1e-12 {
            vm = vm.max(val);
        } else if ac > 1e-12 {
            vp = vp.min(val);
        }
    }
    let sd = var.sqrt();
    let pivot = |mu: f64| {
        let (a, b, t) = ((vm - mu) / sd, (vp - mu) / sd, (eta_y - mu) / sd);
        if a > 0.0 {
            // window right of mu: integrate φ(a + u)/φ(a) = exp(−au − u²/2),
            // cut where it drops below e^{−50}
            let g = |u: f64| (-a * u - 0.5 * u * u).exp();
            let cap = (-a + (a * a + 100.0).sqrt()).min(b - a);
            let num = adaptive_simpson(&g, 0.0, (t - a).min(cap), 1e-16, 60);
            let den = adaptive_simpson(&g, 0.0, cap, 1e-16, 60);
            num / den
        } else if b < 0.0 {
            // mirror image of the case above
            let g = |u: f64| (b * u - 0.5 * u * u).exp();
            let cap = (b + (b * b + 100.0).sqrt()).min(b - a);
            let num = adaptive_simpson(&g, 0.0, (b - t).min(cap), 1e-16, 60);
            let den = adaptive_simpson(&g, 0.0, cap, 1e-16, 60);
            1.0 - num / den
        } else {
            let (pa, pb, px) = (phi_cdf(a), phi_cdf(b), phi_cdf(t));
            (px - pa) / (pb - pa)
        }
    };
    // the pivot decreases in mu
    let solve = |target: f64| {
        let mut width = sd;
        let (mut lo, mut hi) = (eta_y - width, eta_y + width);
        while !(pivot(lo) > target) && width < 1e6 * sd {
            width *= 2.0;
            lo = eta_y - width;
        }
        width = sd;
        while !(pivot(hi) < target) && width < 1e6 * sd {
            width *= 2.0;
            hi = eta_y + width;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if pivot(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    LassoPivot {
        lower: solve(1.0 - alpha / 2.0),
        upper: solve(alpha / 2.0),
        v_minus: vm,
        v_plus: vp,
        eta_y,
    }
}
