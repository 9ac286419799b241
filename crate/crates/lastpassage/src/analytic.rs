//! Closed-form laws for the drifted Brownian motion `B_t + lambda*t` and its
//! last passage time `sigma` of the level `z > 0`, plus the antiderivatives
//! that the conditional-law formulas are assembled from.
//!
//! Conventions used throughout the crate:
//!
//! * `p(t, x, m)` is the Gaussian density with variance `t` and mean `m`
//!   evaluated at `x` ([`gauss_pdf`]).
//! * `sigma` has density `lambda * p(r, z, lambda*r)` on `r > 0`; its
//!   distribution function is
//!   `Phi(lambda*sqrt(t) - z/sqrt(t)) - exp(2*lambda*z) * Phi(-lambda*sqrt(t) - z/sqrt(t))`.
//! * `alpha(z, x) = |z-x| - (z-x)` and `gamma(z, x) = |z-x| + (z-x)` split the
//!   distance to the level by side; `alpha * gamma = 0` and
//!   `alpha + gamma = 2|z-x|` always.
//!
//! Every formula that contains the pattern `exp(c) * Phi(-d)` with large `c`
//! and `d` is routed through [`scaled_gauss_tail`], which evaluates the
//! product via the scaled complementary error function instead of forming
//! the overflowing factor and the underflowing tail separately.

use crate::error::{Error, Result};
use crate::special;

/// Drift and level of the stopped motion. Both must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub lambda: f64,
    pub z: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, z: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::domain(format!("lambda must be finite and > 0, got {lambda}")));
        }
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::domain(format!("z must be finite and > 0, got {z}")));
        }
        Ok(ModelParams { lambda, z })
    }
}

/// Parameters of a Gaussian density: variance `t > 0`, evaluation point `x`,
/// mean `m`.
#[derive(Debug, Clone, Copy)]
pub struct GaussParams {
    pub t: f64,
    pub x: f64,
    pub m: f64,
}

impl GaussParams {
    pub fn new(t: f64, x: f64, m: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::domain(format!("variance must be finite and > 0, got {t}")));
        }
        if !x.is_finite() || !m.is_finite() {
            return Err(Error::domain("gaussian point and mean must be finite".to_string()));
        }
        Ok(GaussParams { t, x, m })
    }
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_68;

/// Gaussian density with variance `t` and mean `m` at `x`.
pub fn gauss_pdf(g: GaussParams) -> f64 {
    let d = g.x - g.m;
    INV_SQRT_2PI / g.t.sqrt() * (-d * d / (2.0 * g.t)).exp()
}

/// Same density, raw arguments. Internal hot path; assumes `t > 0`.
pub(crate) fn gauss_pdf_raw(t: f64, x: f64, m: f64) -> f64 {
    let d = x - m;
    INV_SQRT_2PI / t.sqrt() * (-d * d / (2.0 * t)).exp()
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    special::normal_cdf(x)
}

/// Stable evaluation of `exp(a) * Phi(-b)`.
///
/// For `b >= 0` the product is `0.5 * erfcx(b/sqrt(2)) * exp(a - b^2/2)`, so
/// neither factor overflows; for `b < 0` the tail is at least one half and
/// the product is formed in log space. Saturates to `0` as `b -> +inf` and
/// only overflows when the true value does.
pub fn scaled_gauss_tail(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        return f64::NAN;
    }
    if b >= 0.0 {
        let expo = a - 0.5 * b * b;
        0.5 * special::erfcx(b * special::FRAC_1_SQRT_2) * expo.exp()
    } else {
        let tail = special::normal_cdf(-b); // in (0.5, 1]
        (a + tail.ln()).exp()
    }
}

/// `alpha(z, x) = |z - x| - (z - x)`: zero below the level, `2(x - z)` above.
pub fn alpha(params: ModelParams, x: f64) -> f64 {
    let w = params.z - x;
    w.abs() - w
}

/// `gamma(z, x) = |z - x| + (z - x)`: `2(z - x)` below the level, zero above.
pub fn gamma(params: ModelParams, x: f64) -> f64 {
    let w = params.z - x;
    w.abs() + w
}

/// Density of the last passage time at `r > 0`.
pub fn sigma_pdf(params: ModelParams, r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::domain(format!("sigma density needs r > 0, got {r}")));
    }
    Ok(params.lambda * gauss_pdf_raw(r, params.z, params.lambda * r))
}

/// Distribution function of the last passage time; `0` at `t = 0`.
pub fn sigma_cdf(params: ModelParams, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain(format!("sigma cdf needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t == f64::INFINITY {
        return Ok(1.0);
    }
    let (lambda, z) = (params.lambda, params.z);
    let rt = t.sqrt();
    let v = special::normal_cdf(lambda * rt - z / rt)
        - scaled_gauss_tail(2.0 * lambda * z, lambda * rt + z / rt);
    Ok(v.clamp(0.0, 1.0))
}

/// Quantile of the last passage time: bisection to a narrow bracket, then
/// safeguarded Newton with the density, converging to
/// `|sigma_cdf(t) - u| <= 1e-12`.
pub fn sigma_cdf_inverse(params: ModelParams, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!("quantile level must be in (0,1), got {u}")));
    }
    let mean = 1.0 / (params.lambda * params.lambda) + params.z / params.lambda;
    let mut lo = 0.0f64;
    let mut hi = mean;
    let mut f_hi = sigma_cdf(params, hi)?;
    let mut guard = 0;
    while f_hi < u {
        lo = hi;
        hi *= 2.0;
        f_hi = sigma_cdf(params, hi)?;
        guard += 1;
        if guard > 200 {
            return Err(Error::evaluation("sigma quantile bracket failed to close".to_string()));
        }
    }
    // Bisection until the bracket is narrow enough for Newton to be safe.
    while hi - lo > 1e-3 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if sigma_cdf(params, mid)? < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..100 {
        let f = sigma_cdf(params, t)?;
        if (f - u).abs() <= 1e-12 {
            return Ok(t);
        }
        if f < u {
            lo = t;
        } else {
            hi = t;
        }
        let dens = sigma_pdf(params, t)?;
        let step = if dens > 0.0 { (f - u) / dens } else { f64::NAN };
        let next = t - step;
        t = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < f64::EPSILON * hi {
            break;
        }
    }
    let f = sigma_cdf(params, t)?;
    if (f - u).abs() <= 1e-9 {
        Ok(t)
    } else {
        Err(Error::evaluation(format!(
            "sigma quantile did not converge: u={u}, best |F-u|={}",
            (f - u).abs()
        )))
    }
}

/// `int_s^t p(r-s, z-x, lambda*(r-s)) dr` in closed form. `t` may be
/// `f64::INFINITY`, in which case the value is `exp(-lambda*alpha(z,x))/lambda`.
pub fn int_p_dr(params: ModelParams, s: f64, t: f64, x: f64) -> Result<f64> {
    check_time_pair(s, t)?;
    let (lambda, a) = (params.lambda, (params.z - x).abs());
    let al = alpha(params, x);
    let ga = gamma(params, x);
    if t == f64::INFINITY {
        return Ok((-lambda * al).exp() / lambda);
    }
    let tau = t - s;
    if tau == 0.0 {
        return Ok(0.0);
    }
    let rt = tau.sqrt();
    let v = ((-lambda * al).exp() * special::normal_cdf(lambda * rt - a / rt)
        - scaled_gauss_tail(lambda * ga, lambda * rt + a / rt))
        / lambda;
    Ok(v.max(0.0))
}

/// `int_s^t (r-s) p(r-s, z-x, lambda*(r-s)) dr` in closed form; `t` may be
/// infinite.
pub fn int_rp_dr(params: ModelParams, s: f64, t: f64, x: f64) -> Result<f64> {
    check_time_pair(s, t)?;
    let (lambda, a) = (params.lambda, (params.z - x).abs());
    let al = alpha(params, x);
    let ga = gamma(params, x);
    let l2 = lambda * lambda;
    let l3 = l2 * lambda;
    if t == f64::INFINITY {
        return Ok((1.0 / l3 + a / l2) * (-lambda * al).exp());
    }
    let tau = t - s;
    if tau == 0.0 {
        return Ok(0.0);
    }
    let rt = tau.sqrt();
    let v = (1.0 / l3 + a / l2)
        * (-lambda * al).exp()
        * special::normal_cdf(lambda * rt - a / rt)
        + (a / l2 - 1.0 / l3) * scaled_gauss_tail(lambda * ga, lambda * rt + a / rt)
        - 2.0 * tau / l2 * gauss_pdf_raw(tau, params.z - x, lambda * tau);
    Ok(v.max(0.0))
}

fn check_time_pair(s: f64, t: f64) -> Result<()> {
    if !(s.is_finite() && s >= 0.0) || t.is_nan() || t < s {
        return Err(Error::domain(format!("need 0 <= s <= t, got s={s}, t={t}")));
    }
    Ok(())
}

/// `int_0^t Phi(lambda*sqrt(u) + d/sqrt(u)) du` in closed form.
pub fn int_phi_plus(params: ModelParams, t: f64, d: f64) -> Result<f64> {
    let lambda = params.lambda;
    let a = d.abs();
    let w1 = -lambda * (a - d) - 1.0;
    let w2 = lambda * (a + d) - 1.0;
    int_phi_impl(lambda, t, d, w1, w2, 1.0)
}

/// `int_0^t Phi(lambda*sqrt(u) - d/sqrt(u)) du` in closed form.
///
/// Same structure as the plus version with the roles of `alpha` and `gamma`
/// exchanged and the sign of `d` flipped in the direct terms.
pub fn int_phi_minus(params: ModelParams, t: f64, d: f64) -> Result<f64> {
    let lambda = params.lambda;
    let a = d.abs();
    let w1 = -lambda * (a + d) - 1.0;
    let w2 = lambda * (a - d) - 1.0;
    int_phi_impl(lambda, t, d, w1, w2, -1.0)
}

/// Shared body: `sign = +1` integrates `Phi(lambda*sqrt(u) + d/sqrt(u))`,
/// `sign = -1` integrates `Phi(lambda*sqrt(u) - d/sqrt(u))`. `w1` weights the
/// lower-tail term, `w2` the scaled upper-tail term; the exponential
/// prefactors pair `gamma` with `w1` for the plus version and `alpha` for the
/// minus version.
fn int_phi_impl(lambda: f64, t: f64, d: f64, w1: f64, w2: f64, sign: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("horizon must be finite and > 0, got {t}")));
    }
    if !d.is_finite() {
        return Err(Error::domain(format!("offset must be finite, got {d}")));
    }
    let a = d.abs();
    let al = a - d;
    let ga = a + d;
    let rt = t.sqrt();
    let l2 = 2.0 * lambda * lambda;
    let (pref1, pref2) = if sign > 0.0 {
        ((-lambda * ga).exp(), lambda * al)
    } else {
        ((-lambda * al).exp(), lambda * ga)
    };
    let term1 = pref1 * w1 * special::normal_cdf(lambda * rt - a / rt) / l2;
    let term2 = -w2 * scaled_gauss_tail(pref2, lambda * rt + a / rt) / l2;
    let arg = lambda * rt + sign * d / rt;
    let term3 = t * special::normal_cdf(arg);
    let term4 = rt / lambda * special::normal_pdf(arg);
    Ok((term1 + term2 + term3 + term4).clamp(0.0, t))
}

/// Antiderivative of `r -> exp(-a^2 r^2 - b^2 / r^2)` evaluated at `r >= 0`
/// (as the limit from the right at `r = 0`). Depends on `a`, `b` only through
/// their absolute values.
pub fn gaussian_primitive(a: f64, b: f64, r: f64) -> Result<f64> {
    if a == 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!("need finite a != 0 and finite b, got a={a}, b={b}")));
    }
    if r.is_nan() || r < 0.0 {
        return Err(Error::domain(format!("need r >= 0, got {r}")));
    }
    let aa = a.abs();
    let ab2 = 2.0 * (a * b).abs();
    let sqrt2 = std::f64::consts::SQRT_2;
    let (u, v) = if r == 0.0 {
        (0.0, if b == 0.0 { 0.0 } else { f64::INFINITY })
    } else {
        (sqrt2 * aa * r, if b == 0.0 { 0.0 } else { sqrt2 * b.abs() / r })
    };
    let term1 = scaled_gauss_tail(ab2, -(u + v));
    let term2 = scaled_gauss_tail(-ab2, v - u);
    Ok(std::f64::consts::PI.sqrt() / (2.0 * aa) * (term1 + term2))
}

/// Size of the continuity defect of the transition semigroup at the level:
/// the map `x -> E[f(xi_t) | xi_0 = x]` with `f(y) = exp(-lambda |y - z|)`
/// tends, as `x -> z`, to
/// `2 Phi(lambda sqrt(t)) - 1 + 2 exp(3 lambda^2 t / 2) Phi(-2 lambda sqrt(t))`,
/// strictly below `f(z) = 1` for every `t > 0`.
pub fn nonfeller_gap(params: ModelParams, t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("need t > 0, got {t}")));
    }
    let lambda = params.lambda;
    let rt = t.sqrt();
    Ok(2.0 * special::normal_cdf(lambda * rt) - 1.0
        + 2.0 * scaled_gauss_tail(1.5 * lambda * lambda * t, 2.0 * lambda * rt))
}
