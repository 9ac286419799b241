//! Transition kernel, semigroup, conditional laws, and pointwise generator of
//! the stopped process, viewed on the augmented state space
//! `S = {0,1} x R`: a point `(1, y)` means the motion is still running at
//! position `y`, while `(0, y)` means it has been absorbed (the only
//! reachable absorbed point is `(0, z)`).
//!
//! For a running state `x != z`, the time-`t` transition law has an atom at
//! `z` of mass equal to the probability of absorption within `t` from
//! distance `|z - x|`, plus an absolutely continuous part
//!
//! ```text
//! exp(lambda*(alpha(z,x) - alpha(z,y))) * p(t, y - x, lambda*t) dy ,
//! ```
//!
//! where `alpha(z, .)` is the one-sided distance of [`crate::analytic::alpha`].
//! The two exponentials and the Gaussian are always combined into one
//! exponent before calling `exp`, so states far above the level do not
//! overflow the prefactor.
//!
//! The semigroup of the augmented chain acts on test functions `h` given by
//! the pair `h(0, .)`, `h(1, .)`; absorbed states are frozen and running
//! states mix `h(0, z)` against the atom and `h(1, .)` against the density.
//! The generator is a drift-plus-Laplacian pointing toward the level on each
//! side, with a pure half-Laplacian row at the level itself, valid only for
//! functions vanishing (with first derivative) there.

use crate::analytic::{alpha, gauss_pdf_raw, scaled_gauss_tail, ModelParams};
use crate::error::{Error, Result};
use crate::quad;
use crate::report::{TestReport, Verdict};
use crate::special::normal_cdf;

/// Point of the augmented state space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatePoint {
    /// `true` while the motion is running (`t < sigma`).
    pub alive: bool,
    pub position: f64,
}

impl StatePoint {
    pub fn running(position: f64) -> Self {
        StatePoint { alive: true, position }
    }

    pub fn absorbed(position: f64) -> Self {
        StatePoint { alive: false, position }
    }
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Test function on the augmented state space, given branchwise.
///
/// Derivatives along the running branch are caller-supplied; a central
/// finite-difference fallback (step `1e-5`) can be enabled for quick
/// experiments where `1e-6`-level accuracy suffices.
pub struct TestFunction {
    h0: Box<ScalarFn>,
    h1: Box<ScalarFn>,
    dh1: Option<Box<ScalarFn>>,
    d2h1: Option<Box<ScalarFn>>,
    fd_fallback: bool,
}

const FD_STEP: f64 = 1e-5;

impl TestFunction {
    pub fn new(
        h0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        h1: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            h0: Box::new(h0),
            h1: Box::new(h1),
            dh1: None,
            d2h1: None,
            fd_fallback: false,
        }
    }

    pub fn with_derivatives(
        mut self,
        dh1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2h1: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.dh1 = Some(Box::new(dh1));
        self.d2h1 = Some(Box::new(d2h1));
        self
    }

    pub fn with_fd_fallback(mut self) -> Self {
        self.fd_fallback = true;
        self
    }

    /// The standard probe function used across the test suites:
    /// `h(0, .) = 0` and `h(1, y) = u^2 exp(-u^2)` with `u = y - z`.
    /// It vanishes at the level together with its first derivative, decays
    /// at infinity, and has simple exact derivatives.
    pub fn canonical(z: f64) -> Self {
        let f = move |y: f64| {
            let u = y - z;
            u * u * (-u * u).exp()
        };
        let df = move |y: f64| {
            let u = y - z;
            2.0 * u * (1.0 - u * u) * (-u * u).exp()
        };
        let d2f = move |y: f64| {
            let u2 = (y - z) * (y - z);
            (2.0 - 10.0 * u2 + 4.0 * u2 * u2) * (-u2).exp()
        };
        TestFunction::new(|_| 0.0, f).with_derivatives(df, d2f)
    }

    pub fn eval(&self, p: StatePoint) -> f64 {
        if p.alive {
            (self.h1)(p.position)
        } else {
            (self.h0)(p.position)
        }
    }

    pub fn running_value(&self, y: f64) -> f64 {
        (self.h1)(y)
    }

    pub fn absorbed_value(&self, y: f64) -> f64 {
        (self.h0)(y)
    }

    /// First derivative along the running branch.
    pub fn deriv1(&self, y: f64) -> Result<f64> {
        if let Some(d) = &self.dh1 {
            Ok(d(y))
        } else if self.fd_fallback {
            Ok(((self.h1)(y + FD_STEP) - (self.h1)(y - FD_STEP)) / (2.0 * FD_STEP))
        } else {
            Err(Error::usage("test function has no first derivative and no fallback".to_string()))
        }
    }

    /// Second derivative along the running branch.
    pub fn deriv2(&self, y: f64) -> Result<f64> {
        if let Some(d) = &self.d2h1 {
            Ok(d(y))
        } else if self.fd_fallback {
            Ok(
                ((self.h1)(y + FD_STEP) - 2.0 * (self.h1)(y) + (self.h1)(y - FD_STEP))
                    / (FD_STEP * FD_STEP),
            )
        } else {
            Err(Error::usage("test function has no second derivative and no fallback".to_string()))
        }
    }
}

/// Probability of absorption within `tau` starting at distance `a >= 0` from
/// the level. This is the distribution function of the last passage time for
/// level `a`, extended continuously to `a = 0`.
pub(crate) fn absorb_prob(lambda: f64, tau: f64, a: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let rt = tau.sqrt();
    (normal_cdf(lambda * rt - a / rt) - scaled_gauss_tail(2.0 * lambda * a, lambda * rt + a / rt))
        .clamp(0.0, 1.0)
}

/// Continuous part of the kernel applied to `g`:
/// `int g(eta) exp(lambda*(alpha(x) - alpha(eta))) p(t, eta - x, lambda*t) deta`.
fn kernel_continuous<F: Fn(f64) -> f64>(
    params: ModelParams,
    t: f64,
    x: f64,
    g: F,
    tol: f64,
) -> Result<f64> {
    let lambda = params.lambda;
    let ax = alpha(params, x);
    let m = x + lambda * t;
    // Window where the combined exponent can exceed the truncation level:
    // lambda*ax - (eta-m)^2/(2t) >= ln(1e-18) - guard.
    let r = (2.0 * t * (42.0 + lambda * ax)).sqrt();
    let log_norm = -0.5 * (2.0 * std::f64::consts::PI * t).ln();
    let integrand = |eta: f64| {
        let ae = {
            let w = params.z - eta;
            w.abs() - w
        };
        let d = eta - m;
        let expo = lambda * (ax - ae) - d * d / (2.0 * t) + log_norm;
        g(eta) * expo.exp()
    };
    let res = quad::integrate_with_splits(integrand, m - r, m + r, &[params.z, m], tol);
    if res.nonfinite {
        return Err(Error::evaluation(
            "non-finite integrand value in kernel quadrature".to_string(),
        ));
    }
    Ok(res.value)
}

/// Expectation `E[f(xi_t) | xi_0 = x]` of a bounded continuous `f` under the
/// scalar stopped process. For `x = z` the kernel is the point mass at `z`.
pub fn transition_expectation<F: Fn(f64) -> f64>(
    params: ModelParams,
    t: f64,
    x: f64,
    f: F,
) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("transition kernel needs t > 0, got {t}")));
    }
    if !x.is_finite() {
        return Err(Error::domain(format!("state must be finite, got {x}")));
    }
    if x == params.z {
        return Ok(f(params.z));
    }
    let a = (params.z - x).abs();
    let atom = absorb_prob(params.lambda, t, a) * f(params.z);
    let cont = kernel_continuous(params, t, x, f, 1e-10)?;
    Ok(atom + cont)
}

/// Semigroup value at (alive, y2) for a test function given as a pair of
/// closures. Shared by [`semigroup_q`] and the composition inside
/// [`chapman_kolmogorov_residual`].
fn q_value(
    params: ModelParams,
    t: f64,
    p: StatePoint,
    h0: &dyn Fn(f64) -> f64,
    h1: &(dyn Fn(f64) -> f64 + Sync),
    tol: f64,
) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain(format!("semigroup needs t >= 0, got {t}")));
    }
    if !p.position.is_finite() {
        return Err(Error::domain("state position must be finite".to_string()));
    }
    if !p.alive {
        return Ok(h0(p.position));
    }
    if t == 0.0 {
        return Ok(h1(p.position));
    }
    let a = (params.z - p.position).abs();
    let atom = h0(params.z) * absorb_prob(params.lambda, t, a);
    let cont = kernel_continuous(params, t, p.position, h1, tol)?;
    Ok(atom + cont)
}

/// Semigroup of the augmented chain applied to `h` at `p`.
pub fn semigroup_q(params: ModelParams, t: f64, p: StatePoint, h: &TestFunction) -> Result<f64> {
    semigroup_q_tol(params, t, p, h, 1e-10)
}

/// Semigroup with an explicit quadrature tolerance, for callers that divide
/// the result by a small step (finite-difference probes).
pub(crate) fn semigroup_q_tol(
    params: ModelParams,
    t: f64,
    p: StatePoint,
    h: &TestFunction,
    tol: f64,
) -> Result<f64> {
    q_value(params, t, p, &|y| h.absorbed_value(y), &|y| h.running_value(y), tol)
}

/// `|Q_{s+t} h (p) - Q_s (Q_t h) (p)|`, evaluating the inner semigroup by
/// nested quadrature wherever the outer integral probes it.
pub fn chapman_kolmogorov_residual(
    params: ModelParams,
    s: f64,
    t: f64,
    p: StatePoint,
    h: &TestFunction,
) -> Result<f64> {
    if !(s.is_finite() && s > 0.0 && t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("need s > 0 and t > 0, got s={s}, t={t}")));
    }
    let direct = semigroup_q(params, s + t, p, h)?;
    let inner1 = |y: f64| {
        q_value(params, t, StatePoint::running(y), &|v| h.absorbed_value(v), &|v| {
            h.running_value(v)
        }, 1e-10)
        .unwrap_or(f64::NAN)
    };
    let inner0 = |y: f64| h.absorbed_value(y);
    let composed = q_value(params, s, p, &inner0, &inner1, 1e-10)?;
    if !composed.is_finite() {
        return Err(Error::evaluation("inner semigroup evaluation failed".to_string()));
    }
    Ok((direct - composed).abs())
}

/// Conditional law of the absorption time given the state at time `t`.
#[derive(Debug, Clone)]
pub enum ConditionalSigmaLaw {
    /// Absorption already happened at a known time.
    Observed { sigma: f64 },
    /// Still running at `t` from position `xi`; the law has the density
    /// `r -> lambda * exp(lambda*alpha(z,xi)) * p(r-t, z-xi, lambda*(r-t))`
    /// on `(t, inf)`.
    Unabsorbed { params: ModelParams, t: f64, xi: f64 },
}

impl ConditionalSigmaLaw {
    pub fn atom(&self) -> Option<f64> {
        match self {
            ConditionalSigmaLaw::Observed { sigma } => Some(*sigma),
            ConditionalSigmaLaw::Unabsorbed { .. } => None,
        }
    }

    /// Density at `r`; `None` when the law is a point mass.
    pub fn density(&self, r: f64) -> Option<f64> {
        match self {
            ConditionalSigmaLaw::Observed { .. } => None,
            ConditionalSigmaLaw::Unabsorbed { params, t, xi } => {
                if r <= *t {
                    return Some(0.0);
                }
                let u = r - t;
                let w = params.z - xi;
                let lambda = params.lambda;
                // lambda*alpha - (w - lambda u)^2 / (2u), combined before exp
                let expo = lambda * (w.abs() - w) - (w - lambda * u) * (w - lambda * u) / (2.0 * u);
                Some(
                    lambda * (expo).exp()
                        / (2.0 * std::f64::consts::PI * u).sqrt(),
                )
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ConditionalSigmaLaw::Observed { sigma } => *sigma,
            ConditionalSigmaLaw::Unabsorbed { params, t, xi } => {
                let l = params.lambda;
                t + (params.z - xi).abs() / l + 1.0 / (l * l)
            }
        }
    }
}

/// Conditional law of `sigma` given the time-`t` state. Pass the observed
/// absorption time when the path is already stopped, `None` while running.
pub fn cond_sigma_law(
    params: ModelParams,
    t: f64,
    xi_t: f64,
    observed_sigma: Option<f64>,
) -> Result<ConditionalSigmaLaw> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::domain(format!("need t >= 0, got {t}")));
    }
    match observed_sigma {
        Some(s) => {
            if !(s.is_finite() && s > 0.0 && s <= t) {
                return Err(Error::usage(format!(
                    "observed absorption time must lie in (0, t], got sigma={s}, t={t}"
                )));
            }
            Ok(ConditionalSigmaLaw::Observed { sigma: s })
        }
        None => {
            if !xi_t.is_finite() {
                return Err(Error::domain(format!("state must be finite, got {xi_t}")));
            }
            Ok(ConditionalSigmaLaw::Unabsorbed { params, t, xi: xi_t })
        }
    }
}

/// `E[sigma | state at t]`: the observed time if already absorbed, otherwise
/// `t + |z - xi|/lambda + 1/lambda^2`.
pub fn cond_exp_sigma(
    params: ModelParams,
    t: f64,
    xi_t: f64,
    observed_sigma: Option<f64>,
) -> Result<f64> {
    Ok(cond_sigma_law(params, t, xi_t, observed_sigma)?.mean())
}

/// `P(sigma > t | xi_s, sigma > s)` for a running state `xi_s != z`.
pub fn survival_prob(params: ModelParams, s: f64, xi_s: f64, t: f64) -> Result<f64> {
    if !(s >= 0.0 && t >= s) || t.is_nan() {
        return Err(Error::domain(format!("need 0 <= s <= t, got s={s}, t={t}")));
    }
    if xi_s == params.z {
        return Err(Error::usage(
            "survival probability is stated for running states away from the level".to_string(),
        ));
    }
    let tau = t - s;
    if tau == 0.0 {
        return Ok(1.0);
    }
    let a = (params.z - xi_s).abs();
    let lambda = params.lambda;
    let rt = tau.sqrt();
    let v = normal_cdf(-lambda * rt + a / rt)
        + scaled_gauss_tail(2.0 * lambda * a, lambda * rt + a / rt);
    Ok(v.clamp(0.0, 1.0))
}

/// `E[xi_t | xi_s]`. Reflection-symmetric around the level:
/// the value at `x` above `z` mirrors the value at `2z - x` below it.
pub fn cond_mean_xi(params: ModelParams, s: f64, xi_s: f64, t: f64) -> Result<f64> {
    if !(s >= 0.0 && t >= s) || t.is_nan() {
        return Err(Error::domain(format!("need 0 <= s <= t, got s={s}, t={t}")));
    }
    if !xi_s.is_finite() {
        return Err(Error::domain(format!("state must be finite, got {xi_s}")));
    }
    let tau = t - s;
    let (lambda, z) = (params.lambda, params.z);
    if tau == 0.0 || xi_s == z {
        return Ok(if xi_s == z { z } else { xi_s });
    }
    let rt = tau.sqrt();
    let a = (z - xi_s).abs();
    let lt = lambda * tau;
    let plain = normal_cdf(-lambda * rt + a / rt);
    let scaled = scaled_gauss_tail(2.0 * lambda * a, lambda * rt + a / rt);
    let v = if xi_s < z {
        z + (lt - a) * plain - (lt + a) * scaled
    } else {
        z + (lt + a) * scaled - (lt - a) * plain
    };
    Ok(v)
}

/// `E[B_{t and sigma} | state at s]` for the underlying (driftless) Brownian
/// coordinate `B_u = xi_u - lambda*(u and sigma)`. This is where the stopped
/// process fails to be a martingale: the value moves away from
/// `xi_s - lambda*s` as `t` grows.
pub fn cond_mean_stopped_b(
    params: ModelParams,
    s: f64,
    xi_s: f64,
    t: f64,
    observed_sigma: Option<f64>,
) -> Result<f64> {
    if !(s >= 0.0 && t >= s) || t.is_nan() {
        return Err(Error::domain(format!("need 0 <= s <= t, got s={s}, t={t}")));
    }
    let (lambda, z) = (params.lambda, params.z);
    if let Some(sg) = observed_sigma {
        if !(sg.is_finite() && sg > 0.0 && sg <= s) {
            return Err(Error::usage(format!(
                "observed absorption time must lie in (0, s], got sigma={sg}, s={s}"
            )));
        }
        return Ok(z - lambda * sg);
    }
    if !xi_s.is_finite() {
        return Err(Error::domain(format!("state must be finite, got {xi_s}")));
    }
    let tau = t - s;
    let base = xi_s - lambda * s;
    if tau == 0.0 {
        return Ok(base);
    }
    let rt = tau.sqrt();
    let x = xi_s;
    if x <= z {
        let w = z - x;
        let scaled = scaled_gauss_tail(2.0 * lambda * w, lambda * rt + w / rt);
        Ok(base - 1.0 / lambda + normal_cdf(-lambda * rt + w / rt) / lambda
            - 2.0 * (lambda * tau + w - 0.5 / lambda) * scaled
            + 2.0 * tau * gauss_pdf_raw(tau, w, lambda * tau))
    } else {
        let a = x - z;
        let scaled = scaled_gauss_tail(2.0 * lambda * a, lambda * rt + a / rt);
        Ok(base - 2.0 * lambda * tau
            + scaled / lambda
            + (2.0 * lambda * tau - 1.0 / lambda - 2.0 * a) * normal_cdf(lambda * rt - a / rt)
            + 2.0 * tau * gauss_pdf_raw(tau, a, lambda * tau))
    }
}

/// Distribution function of the all-time supremum of the stopped process
/// started at `0`: `P(sup <= x) = 1 - exp(-2 lambda (x - z))` for `x >= z`,
/// zero below the level.
pub fn sup_cdf(params: ModelParams, x: f64) -> f64 {
    if x < params.z {
        0.0
    } else {
        -(-2.0 * params.lambda * (x - params.z)).exp_m1()
    }
}

/// Distribution function of the local time accumulated at the level by the
/// time of absorption: exponential with rate `lambda`.
pub fn localtime_at_sigma_cdf(params: ModelParams, y: f64) -> Result<f64> {
    if y.is_nan() || y < 0.0 {
        return Err(Error::domain(format!("local time is nonnegative, got {y}")));
    }
    Ok(-(-params.lambda * y).exp_m1())
}

/// Generator value without the membership check at the level. Used by the
/// consistency probe, which must be able to evaluate the formula for
/// functions that are NOT in the domain and watch it fail to converge.
fn generator_formula(params: ModelParams, h: &TestFunction, p: StatePoint) -> Result<f64> {
    if !p.alive {
        return Ok(0.0);
    }
    let y = p.position;
    let d2 = h.deriv2(y)?;
    if y == params.z {
        return Ok(0.5 * d2);
    }
    let d1 = h.deriv1(y)?;
    let drift = if y > params.z { -params.lambda } else { params.lambda };
    Ok(drift * d1 + 0.5 * d2)
}

/// Pointwise generator of the augmented chain:
/// zero on absorbed states, `-lambda h' + h''/2` above the level,
/// `+lambda h' + h''/2` below it, and `h''/2` at the level, the last row
/// valid only when `h(0,z)`, `h(1,z)` and the first derivative at the level
/// all vanish (checked numerically to `1e-9`).
pub fn generator_apply(params: ModelParams, h: &TestFunction, p: StatePoint) -> Result<f64> {
    if p.alive && p.position == params.z {
        let tol = 1e-9;
        let bad = h.absorbed_value(params.z).abs() > tol
            || h.running_value(params.z).abs() > tol
            || h.deriv1(params.z)?.abs() > tol;
        if bad {
            return Err(Error::domain(
                "function is outside the generator domain: it must vanish at the level on both branches with zero slope".to_string(),
            ));
        }
    }
    generator_formula(params, h, p)
}

/// Convergence probe for the generator: for each `t` in `t_seq`, computes
/// `max over probes of |(Q_t h - h)/t - A h|` and fits the log-log slope of
/// the error against `t`. First-order convergence (slope near 1) passes;
/// a slope below `0.8` fails, which is exactly what happens when `h` is not
/// in the domain and the difference quotient diverges at the level.
pub fn generator_consistency(
    params: ModelParams,
    h: &TestFunction,
    probes: &[StatePoint],
    t_seq: &[f64],
) -> Result<TestReport> {
    if probes.is_empty() || t_seq.len() < 2 {
        return Err(Error::usage("need at least one probe and two time points".to_string()));
    }
    if t_seq.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::domain("time points must be positive".to_string()));
    }
    let mut errs = Vec::with_capacity(t_seq.len());
    for &t in t_seq {
        let mut worst = 0.0f64;
        for &p in probes {
            let q = semigroup_q(params, t, p, h)?;
            let a = generator_formula(params, h, p)?;
            let e = ((q - h.eval(p)) / t - a).abs();
            worst = worst.max(e);
        }
        errs.push(worst);
    }
    let max_err = errs.iter().cloned().fold(0.0f64, f64::max);
    let n = (probes.len() * t_seq.len()) as u64;
    if max_err < 1e-12 {
        // degenerate probe set (e.g. absorbed states only): errors identically 0
        return Ok(TestReport::new("generator-consistency", f64::INFINITY, max_err, n, Verdict::Pass)
            .with("note", "errors at machine zero"));
    }
    let xs: Vec<f64> = t_seq.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.max(1e-300).ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let verdict = Verdict::from_bool(slope >= 0.8);
    Ok(TestReport::new("generator-consistency", slope, max_err, n, verdict)
        .with("threshold_slope", 0.8))
}

/// Lower bound on how badly the scalar stopped process violates the strong
/// Markov property at the first passage of the level: evaluated at the
/// deterministic witness built from first passage before time 1 and survival
/// one more unit of time.
pub fn strong_markov_violation_bound(params: ModelParams) -> f64 {
    let (lambda, z) = (params.lambda, params.z);
    let s3 = 3.0f64.sqrt();
    2.0 * normal_cdf(-z)
        * (normal_cdf(-lambda * s3 + z / s3)
            + scaled_gauss_tail(2.0 * lambda * z, lambda * s3 + z / s3))
}
