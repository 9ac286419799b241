//! Explicit finite-difference solver for the backward evolution
//! `du/dt = A u` of the augmented chain, plus independent checks that the
//! quadrature semigroup actually solves that equation.
//!
//! The running branch evolves under drift toward the level plus half a
//! Laplacian; the absorbed branch does not evolve at all. The interesting
//! row is the one AT the level: the generator there is a bare half
//! Laplacian, but a numeric solution need not stay inside the generator's
//! domain as it evolves, so the solver can either use that row directly or
//! pin the interface node to the independently computed quadrature value
//! each step. Boundary rows are handled the same way (zero or pinned).
//!
//! Explicit stepping keeps every update a convex combination of neighbors
//! as long as `dt <= dy^2 / (lambda dy + 1)`; the solver never steps larger
//! than that, which also makes both difference choices monotone (the
//! central one additionally needs `lambda dy <= 1`, implied for any usable
//! grid).

use crate::analytic::ModelParams;
use crate::error::{Error, Result};
use crate::estimators::batch_mean_se;
use crate::kernels::{self, StatePoint, TestFunction};
use crate::report::{TestReport, Verdict};
use crate::sampler::{map_path_batch, RngStream, SampleMethod, SamplerConfig};

/// Uniform spatial grid with one node exactly on the level.
#[derive(Debug, Clone)]
pub struct Grid1D {
    y: Vec<f64>,
    dy: f64,
    z_index: usize,
}

impl Grid1D {
    /// Build a uniform grid of `n_y` nodes over `[y_min, y_max]`. One node
    /// must fall within `1e-9` of `z`; it is snapped to `z` exactly.
    pub fn new(y_min: f64, y_max: f64, n_y: usize, z: f64) -> Result<Self> {
        if !(y_min.is_finite() && y_max.is_finite() && y_min < y_max) {
            return Err(Error::config(format!("bad grid range [{y_min}, {y_max}]")));
        }
        if n_y < 5 {
            return Err(Error::config(format!("need at least 5 nodes, got {n_y}")));
        }
        if !(y_min < z && z < y_max) {
            return Err(Error::config(format!(
                "level {z} must lie strictly inside [{y_min}, {y_max}]"
            )));
        }
        let dy = (y_max - y_min) / (n_y - 1) as f64;
        let k = ((z - y_min) / dy).round() as usize;
        let snapped = y_min + k as f64 * dy;
        if (snapped - z).abs() > 1e-9 {
            return Err(Error::config(format!(
                "no grid node within 1e-9 of the level: nearest is {snapped}"
            )));
        }
        let mut y: Vec<f64> = (0..n_y).map(|i| y_min + i as f64 * dy).collect();
        y[k] = z;
        Ok(Grid1D { y, dy, z_index: k })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.y
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn z_index(&self) -> usize {
        self.z_index
    }

    /// Index of the node at `y`, if some node matches to within `1e-12`.
    pub fn node_index(&self, y: f64) -> Option<usize> {
        let i = ((y - self.y[0]) / self.dy).round() as isize;
        if i < 0 || i as usize >= self.y.len() {
            return None;
        }
        let i = i as usize;
        if (self.y[i] - y).abs() <= 1e-12 * (1.0 + y.abs()) {
            Some(i)
        } else {
            None
        }
    }

    /// Largest explicit step keeping the update a convex combination.
    pub fn stable_dt(&self, params: ModelParams) -> f64 {
        self.dy * self.dy / (params.lambda * self.dy + 1.0)
    }
}

/// How the boundary rows are closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Zero value outside the domain; valid when the data decays and the
    /// boundary is far from the region of interest.
    DirichletZero,
    /// Pin boundary nodes to the quadrature semigroup each step.
    Oracle,
}

/// How the row at the level is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceKind {
    /// Use the generator's own row: half a Laplacian, no drift.
    HalfLaplacianRow,
    /// Pin the level node to the quadrature semigroup each step, decoupling
    /// the two half-lines.
    OracleValue,
}

#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    /// Requested time step; the solver shrinks it to the stability bound
    /// when necessary, then divides the horizon evenly.
    pub dt_pde: f64,
    /// One-sided differences pointing with the drift (first order) instead
    /// of central differences (second order away from the level).
    pub upwind: bool,
    pub boundary: BoundaryKind,
    pub interface: InterfaceKind,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            dt_pde: f64::INFINITY,
            upwind: true,
            boundary: BoundaryKind::DirichletZero,
            interface: InterfaceKind::HalfLaplacianRow,
        }
    }
}

/// Branchwise values of the evolved function at one time.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub branch0: Vec<f64>,
    pub branch1: Vec<f64>,
    pub time: f64,
}

/// March `du/dt = A u` from `u(0) = h` to `t_end` on the given grid.
pub fn solve_kbe(
    params: ModelParams,
    grid: &Grid1D,
    h: &TestFunction,
    t_end: f64,
    scheme: &SchemeConfig,
) -> Result<GridFunction> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::domain(format!("need t_end > 0, got {t_end}")));
    }
    if !(scheme.dt_pde > 0.0) {
        return Err(Error::config(format!("dt_pde must be positive, got {}", scheme.dt_pde)));
    }
    let dy = grid.dy;
    let lambda = params.lambda;
    let dt_req = scheme.dt_pde.min(grid.stable_dt(params));
    let n_steps = (t_end / dt_req).ceil() as usize;
    let dt = t_end / n_steps as f64;
    let n = grid.y.len();
    let zi = grid.z_index;

    let branch0: Vec<f64> = grid.y.iter().map(|&y| h.absorbed_value(y)).collect();
    let mut cur: Vec<f64> = grid.y.iter().map(|&y| h.running_value(y)).collect();
    let mut next = vec![0.0f64; n];

    // apply boundary / interface closures for time level `t`
    let close = |u: &mut Vec<f64>, t: f64| -> Result<()> {
        match scheme.boundary {
            BoundaryKind::DirichletZero => {
                u[0] = 0.0;
                u[n - 1] = 0.0;
            }
            BoundaryKind::Oracle => {
                u[0] = kernels::semigroup_q(params, t, StatePoint::running(grid.y[0]), h)?;
                u[n - 1] =
                    kernels::semigroup_q(params, t, StatePoint::running(grid.y[n - 1]), h)?;
            }
        }
        if scheme.interface == InterfaceKind::OracleValue {
            u[zi] = kernels::semigroup_q(params, t, StatePoint::running(params.z), h)?;
        }
        Ok(())
    };
    close(&mut cur, 0.0)?;

    let inv_dy2 = 1.0 / (dy * dy);
    for step in 0..n_steps {
        let t_next = (step + 1) as f64 * dt;
        for i in 1..n - 1 {
            let lap = (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) * inv_dy2;
            if i == zi {
                // generator row at the level: pure half Laplacian
                next[i] = cur[i] + dt * 0.5 * lap;
                continue;
            }
            let drift = if grid.y[i] > params.z { -lambda } else { lambda };
            let du = if scheme.upwind {
                if drift > 0.0 {
                    (cur[i + 1] - cur[i]) / dy
                } else {
                    (cur[i] - cur[i - 1]) / dy
                }
            } else {
                (cur[i + 1] - cur[i - 1]) / (2.0 * dy)
            };
            next[i] = cur[i] + dt * (drift * du + 0.5 * lap);
        }
        next[0] = cur[0];
        next[n - 1] = cur[n - 1];
        close(&mut next, t_next)?;
        std::mem::swap(&mut cur, &mut next);
    }
    if cur.iter().any(|v| !v.is_finite()) {
        return Err(Error::evaluation("solution became non-finite".to_string()));
    }
    Ok(GridFunction { branch0, branch1: cur, time: t_end })
}

/// Residual tolerance of the interior consistency probe.
pub const INTERIOR_RESIDUAL_TOL: f64 = 1e-4;

/// Check, by central finite differences on the quadrature semigroup alone,
/// that `u(t, y) = Q_t h (1, y)` satisfies `du/dt = A u` away from the
/// level. Probes must keep two steps `delta` clear of the level, where the
/// spatial derivatives lose meaning.
pub fn interior_residual(
    params: ModelParams,
    h: &TestFunction,
    t: f64,
    probes: &[f64],
    delta: f64,
) -> Result<TestReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::usage(format!("delta must be positive, got {delta}")));
    }
    if !(t > delta) {
        return Err(Error::domain(format!("need t > delta, got t={t}, delta={delta}")));
    }
    if probes.is_empty() {
        return Err(Error::usage("need at least one probe".to_string()));
    }
    for &y in probes {
        if (y - params.z).abs() < 2.0 * delta {
            return Err(Error::usage(format!(
                "probe {y} is within 2*delta of the level; the one-sided derivatives there make the residual meaningless"
            )));
        }
    }
    // the second difference divides by delta^2, so the quadrature must be
    // resolved well below tol * delta^2
    let qtol = 1e-13;
    let u = |tt: f64, yy: f64| {
        kernels::semigroup_q_tol(params, tt, StatePoint::running(yy), h, qtol)
    };
    let mut worst = 0.0f64;
    for &y in probes {
        let du_dt = (u(t + delta, y)? - u(t - delta, y)?) / (2.0 * delta);
        let u_mid = u(t, y)?;
        let u_up = u(t, y + delta)?;
        let u_dn = u(t, y - delta)?;
        let d1 = (u_up - u_dn) / (2.0 * delta);
        let d2 = (u_up - 2.0 * u_mid + u_dn) / (delta * delta);
        let drift = if y > params.z { -params.lambda } else { params.lambda };
        let residual = (du_dt - (drift * d1 + 0.5 * d2)).abs();
        worst = worst.max(residual);
    }
    let verdict = Verdict::from_bool(worst <= INTERIOR_RESIDUAL_TOL);
    Ok(TestReport::new(
        "pde-interior-residual",
        worst,
        INTERIOR_RESIDUAL_TOL,
        probes.len() as u64,
        verdict,
    )
    .with("delta", delta)
    .with("t", t))
}

/// Monte Carlo check of the identity
/// `E[h(state at t)] - h(start) = E[int_0^{t and sigma} A h(path) ds]`,
/// with the integral computed by the trapezoid rule along each sampled path
/// and the match judged at three batch-means standard errors.
pub fn dynkin_check(
    params: ModelParams,
    h: &TestFunction,
    t: f64,
    base: RngStream,
    n: usize,
    dt: f64,
) -> Result<TestReport> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("need t > 0, got {t}")));
    }
    if n < 40 {
        return Err(Error::usage(format!("need at least 40 paths, got {n}")));
    }
    let cfg = SamplerConfig { dt, ..SamplerConfig::default() };
    let a_of = |y: f64| kernels::generator_apply(params, h, StatePoint::running(y));
    let values = map_path_batch(params, &cfg, SampleMethod::Exact, base, n, |p| {
        let end_state = if p.alive_at(t) {
            StatePoint::running(p.value_at(t))
        } else {
            StatePoint::absorbed(params.z)
        };
        let mut integral = 0.0;
        for ((t0, x0), (t1, x1)) in p.segments_until(t) {
            integral += 0.5 * (a_of(x0)? + a_of(x1)?) * (t1 - t0);
        }
        Ok(h.eval(end_state) - integral)
    })?;
    let target = h.eval(StatePoint::running(0.0));
    let (mean, se) = batch_mean_se(&values, 20)?;
    let zscore = if se > 0.0 { (mean - target).abs() / se } else { 0.0 };
    let verdict = Verdict::from_bool(zscore < 3.0);
    Ok(TestReport::new("dynkin", zscore, mean - target, n as u64, verdict)
        .with("mean", mean)
        .with("target", target)
        .with("se", se))
}
