//! Normal distribution truncated to `[a, b]`, with tails handled in log space
//! so the CDF stays accurate when the interval sits far out in a tail.

use statrs::function::erf::erfc;

use crate::error::{MinPenError, Result};
use crate::scalar::Scalar;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln(1 − Φ(t))`.
pub fn log_upper_tail(t: f64) -> f64 {
    if t == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if t == f64::NEG_INFINITY {
        return 0.0;
    }
    if t < 30.0 {
        (0.5 * erfc(t / std::f64::consts::SQRT_2)).ln()
    } else {
        // 1 − Φ(t) = φ(t) / (t + 1/(t + 2/(t + 3/(t + …))))
        let mut cf = t;
        for k in (1..=60).rev() {
            cf = t + k as f64 / cf;
        }
        -0.5 * t * t - LN_SQRT_2PI - cf.ln()
    }
}

/// `ln Φ(t)`.
pub fn log_cdf(t: f64) -> f64 {
    log_upper_tail(-t)
}

pub fn std_normal_cdf(t: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * erfc(-t / std::f64::consts::SQRT_2)
}

/// CDF at `x` of `N(mu, var)` truncated to `[a, b]`; `x` is clamped into the
/// interval. Either bound may be infinite.
pub fn trunc_norm_cdf<F: Scalar>(x: F, mu: F, var: F, a: F, b: F) -> Result<F> {
    let v = trunc_norm_cdf_f64(x.as_f64(), mu.as_f64(), var.as_f64(), a.as_f64(), b.as_f64())?;
    Ok(F::lit(v))
}

fn trunc_norm_cdf_f64(x: f64, mu: f64, var: f64, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(MinPenError::DegenerateTruncation { lower: a, upper: b });
    }
    if !(var > 0.0) || !var.is_finite() || !mu.is_finite() || x.is_nan() {
        return Err(MinPenError::InvalidInput(format!(
            "truncated normal needs finite mean and positive variance (mu {mu}, var {var})"
        )));
    }
    let x = x.max(a).min(b);
    if x == a {
        return Ok(0.0);
    }
    if x == b {
        return Ok(1.0);
    }
    let sd = var.sqrt();
    let (lo, hi, t) = ((a - mu) / sd, (b - mu) / sd, (x - mu) / sd);
    let value = if lo >= 0.0 {
        // interval in the upper half: work with upper-tail masses relative to lo
        let base = log_upper_tail(lo);
        let num = (log_upper_tail(t) - base).exp_m1();
        let den = (log_upper_tail(hi) - base).exp_m1();
        if den == 0.0 {
            return Err(MinPenError::DegenerateTruncation { lower: a, upper: b });
        }
        num / den
    } else if hi <= 0.0 {
        let base = log_cdf(hi);
        let la = log_cdf(lo) - base;
        let num = (log_cdf(t) - base).exp() - la.exp();
        let den = -la.exp_m1();
        if den == 0.0 {
            return Err(MinPenError::DegenerateTruncation { lower: a, upper: b });
        }
        num / den
    } else {
        let pa = std_normal_cdf(lo);
        let den = std_normal_cdf(hi) - pa;
        if !(den > 0.0) {
            return Err(MinPenError::DegenerateTruncation { lower: a, upper: b });
        }
        (std_normal_cdf(t) - pa) / den
    };
    Ok(value.clamp(0.0, 1.0))
}
