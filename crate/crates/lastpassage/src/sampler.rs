//! Path samplers for the stopped process, all reproducible from a
//! `(seed, stream_id)` pair via a counter-based generator.
//!
//! Three independent constructions of the same law:
//!
//! * `exact`: draw the absorption time from its closed-form distribution,
//!   then fill the path in as a driftless Brownian bridge from `(0, 0)` to
//!   `(sigma, z)`. The drift cancels exactly in the bridge conditioning, so
//!   no discretization bias enters the absorption time or the endpoints, and
//!   the running supremum can be sampled exactly from the per-segment
//!   bridge-maximum law.
//! * `bruteforce`: Euler-free forward simulation of the drifting motion on a
//!   regular grid (increments are exact Gaussians), absorption estimated as
//!   the last grid-visible crossing of the level before a long horizon.
//!   Biased at `O(dt)`-to-`O(sqrt(dt))` by unseen within-step excursions; an
//!   optional bridge-probability refinement recovers most of them.
//! * `bangbang`: the law characterized the other way round, as a unit-noise
//!   motion with drift `lambda` pointed toward the level, killed once its
//!   local time at the level exceeds an independent exponential threshold.
//!
//! Draw order is part of the reproducibility contract and is documented at
//! each sampler; batches assign stream `base + i` to path `i`, which makes
//! the batch independent of threading and splittable.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::analytic::{sigma_cdf, sigma_cdf_inverse, ModelParams};
use crate::error::{Error, Result};

/// Reproducible generator handle: one logical random stream out of 2^64.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Knobs shared by the samplers. Each sampler validates only the fields it
/// actually reads.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Grid step.
    pub dt: f64,
    /// Simulation horizon for the forward samplers.
    pub horizon: f64,
    /// Largest acceptable probability of the absorption time exceeding the
    /// horizon; forward samplers refuse configurations more truncated than
    /// this.
    pub tail_delta: f64,
    /// Half-width of the band used to accumulate local time at the level.
    pub epsilon_loc: f64,
    /// Brute-force only: probabilistically recover level touches that happen
    /// strictly inside a grid step.
    pub refine_crossings: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            dt: 1e-3,
            horizon: 30.0,
            tail_delta: 1e-4,
            epsilon_loc: 1e-2,
            refine_crossings: true,
        }
    }
}

impl SamplerConfig {
    fn check_dt(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    fn check_horizon(&self, params: ModelParams) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::config(format!(
                "horizon must be finite and at least dt, got {}",
                self.horizon
            )));
        }
        if !(self.tail_delta > 0.0 && self.tail_delta < 1.0) {
            return Err(Error::config(format!(
                "tail_delta must lie in (0,1), got {}",
                self.tail_delta
            )));
        }
        let tail = 1.0 - sigma_cdf(params, self.horizon)?;
        if tail > self.tail_delta {
            return Err(Error::config(format!(
                "horizon {} leaves truncation probability {:.3e} > tail_delta {:.3e}",
                self.horizon, tail, self.tail_delta
            )));
        }
        Ok(())
    }

    fn check_band(&self) -> Result<()> {
        if !(self.epsilon_loc.is_finite() && self.epsilon_loc > 0.0) {
            return Err(Error::config(format!(
                "epsilon_loc must be positive, got {}",
                self.epsilon_loc
            )));
        }
        Ok(())
    }
}

/// Which construction produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMethod {
    Exact,
    Bruteforce,
    Bangbang,
}

impl FromStr for SampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SampleMethod::Exact),
            "bruteforce" => Ok(SampleMethod::Bruteforce),
            "bangbang" => Ok(SampleMethod::Bangbang),
            other => Err(Error::usage(format!(
                "unknown sample method '{other}' (expected exact, bruteforce, or bangbang)"
            ))),
        }
    }
}

impl std::fmt::Display for SampleMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SampleMethod::Exact => "exact",
            SampleMethod::Bruteforce => "bruteforce",
            SampleMethod::Bangbang => "bangbang",
        };
        f.write_str(s)
    }
}

/// A sampled path on a time grid.
///
/// Invariants: `times` is strictly increasing and starts at 0;
/// `times[absorbed_index] == sigma` and every value from `absorbed_index` on
/// equals the level. Paths flagged `truncation_suspect` hit the simulation
/// horizon without a clean absorption and report `sigma == horizon`; callers
/// doing law-level work should filter them (the configured `tail_delta`
/// bounds how often that happens).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathGrid {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub sigma: f64,
    pub absorbed_index: usize,
    pub truncation_suspect: bool,
    /// Exact running supremum over the whole path, available only from the
    /// bridge sampler (grid maxima underestimate by `O(sqrt(dt))`).
    pub sup_exact: Option<f64>,
}

impl PathGrid {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn alive_at(&self, t: f64) -> bool {
        t < self.sigma
    }

    /// Piecewise-linear readout; constant at the level from `sigma` on.
    pub fn value_at(&self, t: f64) -> f64 {
        if t >= self.sigma {
            return *self.values.last().expect("paths are nonempty");
        }
        if t <= self.times[0] {
            return self.values[0];
        }
        let idx = self.times.partition_point(|&u| u <= t);
        if idx >= self.times.len() {
            return *self.values.last().expect("paths are nonempty");
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (x0, x1) = (self.values[idx - 1], self.values[idx]);
        x0 + (x1 - x0) * (t - t0) / (t1 - t0)
    }

    /// Linear segments of the path clipped to `[0, min(t_cap, sigma)]`.
    pub fn segments_until(&self, t_cap: f64) -> Vec<((f64, f64), (f64, f64))> {
        let end = t_cap.min(self.sigma);
        let mut out = Vec::new();
        for i in 1..=self.absorbed_index {
            let (t0, x0) = (self.times[i - 1], self.values[i - 1]);
            let (mut t1, mut x1) = (self.times[i], self.values[i]);
            if t0 >= end {
                break;
            }
            if t1 > end {
                x1 = x0 + (x1 - x0) * (end - t0) / (t1 - t0);
                t1 = end;
            }
            out.push(((t0, x0), (t1, x1)));
            if t1 >= end {
                break;
            }
        }
        out
    }

    /// First time the path reaches `level` from below, located by linear
    /// interpolation between grid knots; `None` if the grid never records a
    /// value at or above the level.
    pub fn first_passage_time(&self, level: f64) -> Option<f64> {
        if self.values[0] >= level {
            return Some(self.times[0]);
        }
        for i in 1..self.times.len() {
            if self.values[i] >= level {
                let (t0, x0) = (self.times[i - 1], self.values[i - 1]);
                let (t1, x1) = (self.times[i], self.values[i]);
                if x1 == x0 {
                    return Some(t1);
                }
                return Some(t0 + (t1 - t0) * (level - x0) / (x1 - x0));
            }
        }
        None
    }
}

fn open_unit(rng: &mut ChaCha12Rng) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

/// Draw the absorption time from its closed-form distribution by inverting
/// the CDF at a uniform draw.
pub fn sample_sigma(params: ModelParams, rng: &mut ChaCha12Rng) -> Result<f64> {
    sigma_cdf_inverse(params, open_unit(rng))
}

/// Exact maximum of a Brownian bridge over one segment: given endpoint
/// values `a`, `b` over a time interval of length `delta` and a uniform `u`,
/// inverts `P(max <= m) = 1 - exp(-2(m-a)(m-b)/delta)`.
pub fn bridge_segment_max(a: f64, b: f64, delta: f64, u: f64) -> f64 {
    let q = -delta * (1.0 - u).ln() * 0.5;
    0.5 * ((a + b) + ((a - b) * (a - b) + 4.0 * q).sqrt())
}

/// Absorption time plus a driftless Brownian bridge from `(0,0)` to
/// `(sigma, z)`; the drift cancels in the conditioning, so the construction
/// is exact in law at the grid times and at `sigma` itself.
///
/// Draw order: one uniform for `sigma`; then per grid step one standard
/// normal for the next bridge value followed by one uniform for the exact
/// maximum over that segment; the final partial segment to `(sigma, z)`
/// draws only its maximum uniform.
pub fn sample_exact_path(
    params: ModelParams,
    config: &SamplerConfig,
    stream: RngStream,
) -> Result<PathGrid> {
    config.check_dt()?;
    let mut rng = stream.rng();
    let sigma = sample_sigma(params, &mut rng)?;
    let dt = config.dt;
    let z = params.z;

    let mut times = vec![0.0];
    let mut values = vec![0.0];
    let mut sup = 0.0f64;
    let mut t = 0.0;
    let mut x = 0.0;
    loop {
        let t_next = t + dt;
        if t_next >= sigma {
            break;
        }
        let remain = sigma - t;
        let mean = x + dt * (z - x) / remain;
        let var = (dt * (remain - dt) / remain).max(0.0);
        let g: f64 = rng.sample(StandardNormal);
        let x_next = mean + var.sqrt() * g;
        let u = open_unit(&mut rng);
        sup = sup.max(bridge_segment_max(x, x_next, dt, u));
        times.push(t_next);
        values.push(x_next);
        t = t_next;
        x = x_next;
    }
    let u = open_unit(&mut rng);
    sup = sup.max(bridge_segment_max(x, z, sigma - t, u));
    times.push(sigma);
    values.push(z);

    let absorbed_index = times.len() - 1;
    Ok(PathGrid {
        times,
        values,
        sigma,
        absorbed_index,
        truncation_suspect: false,
        sup_exact: Some(sup),
    })
}

/// Crossing time of `level` on the chord from `(t0,x0)` to `(t1,x1)`.
fn chord_crossing(t0: f64, x0: f64, t1: f64, x1: f64, level: f64) -> f64 {
    if x1 == x0 {
        return t1;
    }
    (t0 + (t1 - t0) * (level - x0) / (x1 - x0)).clamp(t0, t1)
}

/// Forward simulation of the drifting motion on a regular grid over
/// `[0, horizon]`, absorbing at the last observed crossing of the level.
///
/// Draw order: per grid step one standard normal for the increment, then,
/// when crossing refinement is on and the step stays strictly on one side of
/// the level, one uniform to test a within-step bridge touch.
///
/// A path whose terminal value is within `2 sqrt(dt)` of the level (or below
/// it) may still cross after the horizon; it is flagged as truncation
/// suspect, with the absorption estimate left at the best grid guess.
pub fn sample_bruteforce_path(
    params: ModelParams,
    config: &SamplerConfig,
    stream: RngStream,
) -> Result<PathGrid> {
    config.check_dt()?;
    config.check_horizon(params)?;
    let mut rng = stream.rng();
    let dt = config.dt;
    let z = params.z;
    let lambda = params.lambda;
    let n_steps = (config.horizon / dt).ceil() as usize;
    let sqrt_dt = dt.sqrt();

    let mut raw = Vec::with_capacity(n_steps + 1);
    raw.push(0.0f64);
    let mut last_cross: Option<f64> = None;
    for i in 0..n_steps {
        let t0 = i as f64 * dt;
        let t1 = t0 + dt;
        let x0 = raw[i];
        let g: f64 = rng.sample(StandardNormal);
        let x1 = x0 + lambda * dt + sqrt_dt * g;
        raw.push(x1);
        let d0 = x0 - z;
        let d1 = x1 - z;
        if d0 == 0.0 || d1 == 0.0 || (d0 < 0.0) != (d1 < 0.0) {
            last_cross = Some(chord_crossing(t0, x0, t1, x1, z));
        } else if config.refine_crossings {
            // P(bridge from x0 to x1 touches z within the step)
            let p_touch = (-2.0 * d0 * d1 / dt).exp();
            let u = open_unit(&mut rng);
            if u < p_touch {
                last_cross = Some(t0 + 0.5 * dt);
            }
        }
    }

    let terminal = *raw.last().unwrap();
    let truncation_suspect = terminal < z + 2.0 * sqrt_dt;
    let sigma = match last_cross {
        Some(s) => s,
        None => n_steps as f64 * dt, // never reached the level: fully truncated
    };
    let truncation_suspect = truncation_suspect || last_cross.is_none();

    // assemble the grid with an explicit knot at the absorption estimate,
    // values clamped to the level from there on
    let mut times = Vec::with_capacity(n_steps + 2);
    let mut values = Vec::with_capacity(n_steps + 2);
    let mut absorbed_index = 0;
    let mut inserted = false;
    for i in 0..=n_steps {
        let t = i as f64 * dt;
        if !inserted && t >= sigma {
            if t > sigma {
                times.push(sigma);
                values.push(z);
            }
            inserted = true;
            absorbed_index = times.len() - if t > sigma { 1 } else { 0 };
        }
        times.push(t);
        values.push(if t >= sigma { z } else { raw[i] });
    }
    if !inserted {
        // absorption estimate sits exactly on the final grid time
        absorbed_index = times.len() - 1;
    }

    Ok(PathGrid { times, values, sigma, absorbed_index, truncation_suspect, sup_exact: None })
}

/// The same law built from its other characterization: unit-noise motion
/// with drift `lambda` pointed toward the level, killed once the local time
/// accumulated at the level (approximated by occupation of a band of
/// half-width `epsilon_loc`) exceeds an independent Exp(`lambda`) threshold.
/// The path is snapped to the level at the kill time.
///
/// Draw order: one uniform for the exponential threshold, then one standard
/// normal per grid step.
pub fn sample_killed_bangbang_path(
    params: ModelParams,
    config: &SamplerConfig,
    stream: RngStream,
) -> Result<PathGrid> {
    config.check_dt()?;
    config.check_horizon(params)?;
    config.check_band()?;
    let mut rng = stream.rng();
    let dt = config.dt;
    let eps = config.epsilon_loc;
    let z = params.z;
    let lambda = params.lambda;
    let n_steps = (config.horizon / dt).ceil() as usize;
    let sqrt_dt = dt.sqrt();

    let threshold = -open_unit(&mut rng).ln() / lambda;
    let mut times = vec![0.0f64];
    let mut values = vec![0.0f64];
    let mut local = 0.0f64;
    let mut killed_at: Option<f64> = None;
    let mut x = 0.0f64;
    for _ in 0..n_steps {
        let t0 = *times.last().unwrap();
        if (x - z).abs() < eps {
            let rate = 0.5 / eps; // band occupation converts to local time at 1/(2 eps)
            let need = threshold - local;
            if need <= rate * dt {
                killed_at = Some(t0 + need / rate);
                break;
            }
            local += rate * dt;
        }
        let drift = if x > z {
            -lambda
        } else if x < z {
            lambda
        } else {
            0.0
        };
        let g: f64 = rng.sample(StandardNormal);
        x += drift * dt + sqrt_dt * g;
        times.push(t0 + dt);
        values.push(x);
    }

    let (sigma, truncation_suspect) = match killed_at {
        Some(s) => (s, false),
        None => (*times.last().unwrap(), true),
    };
    if *times.last().unwrap() < sigma {
        times.push(sigma);
        values.push(z);
    } else {
        *values.last_mut().unwrap() = z;
    }
    let absorbed_index = times.len() - 1;
    Ok(PathGrid { times, values, sigma, absorbed_index, truncation_suspect, sup_exact: None })
}

/// Sample one path with the given construction.
pub fn sample_path(
    params: ModelParams,
    config: &SamplerConfig,
    method: SampleMethod,
    stream: RngStream,
) -> Result<PathGrid> {
    match method {
        SampleMethod::Exact => sample_exact_path(params, config, stream),
        SampleMethod::Bruteforce => sample_bruteforce_path(params, config, stream),
        SampleMethod::Bangbang => sample_killed_bangbang_path(params, config, stream),
    }
}

/// Sample `n` paths in parallel. Path `i` always uses stream
/// `base.stream_id + i`, so the result is independent of the thread schedule
/// and a batch can be split or extended without replaying earlier paths.
pub fn path_batch(
    params: ModelParams,
    config: &SamplerConfig,
    method: SampleMethod,
    base: RngStream,
    n: usize,
) -> Result<Vec<PathGrid>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            sample_path(params, config, method, RngStream::new(base.seed, base.stream_id + i as u64))
        })
        .collect()
}

/// Sample `n` paths and reduce each to a summary without ever holding more
/// than a handful of paths in memory. Stream assignment matches
/// [`path_batch`], so `map_path_batch(.., |p| Ok(p.clone()))` and
/// `path_batch(..)` agree path for path; the difference is purely that the
/// path is dropped as soon as `f` has looked at it, which is what makes
/// hundred-thousand-path runs at fine steps feasible.
pub fn map_path_batch<T, F>(
    params: ModelParams,
    config: &SamplerConfig,
    method: SampleMethod,
    base: RngStream,
    n: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&PathGrid) -> Result<T> + Send + Sync,
{
    map_path_batch_indexed(params, config, method, base, n, move |_, p| f(p))
}

/// [`map_path_batch`] with the path index passed to the reducer. Callers
/// that need extra randomness per path (for example bridge refinement)
/// derive it from the index; streams `base.stream_id + n` and up are never
/// touched by the sampler itself, so `base.stream_id + n + i` is a safe
/// auxiliary stream for path `i`.
pub fn map_path_batch_indexed<T, F>(
    params: ModelParams,
    config: &SamplerConfig,
    method: SampleMethod,
    base: RngStream,
    n: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &PathGrid) -> Result<T> + Send + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let stream = RngStream::new(base.seed, base.stream_id + i as u64);
            let path = sample_path(params, config, method, stream)?;
            f(i, &path)
        })
        .collect()
}

/// Resample a path on a finer grid wherever it comes close to `level`,
/// drawing the new interior knots from the Gaussian bridge between the
/// existing knots. Conditioning on both endpoints cancels any constant
/// drift, so for the exact and brute-force constructions the refined grid
/// has the same law as sampling the whole path at the fine step from the
/// start. It is wrong for the bang-bang construction, whose drift switches
/// sign inside a segment.
///
/// Segments with both endpoints farther than `window` from the level are
/// kept whole: a within-segment visit to the level from endpoint distance
/// `w` has probability `exp(-2 w^2 / dt)`, so `window` should be the band
/// of interest plus a few multiples of `sqrt(dt)`. Knots at and after the
/// absorption index are frozen state, not a bridge, and are copied
/// verbatim. The stored exact supremum is dropped: it was drawn
/// conditionally on the coarse knots and does not describe the refined
/// ones.
pub fn refine_near_level(
    path: &PathGrid,
    level: f64,
    window: f64,
    dt_fine: f64,
    rng: &mut ChaCha12Rng,
) -> Result<PathGrid> {
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::usage(format!("refinement window must be positive, got {window}")));
    }
    if !(dt_fine.is_finite() && dt_fine > 0.0) {
        return Err(Error::usage(format!("refinement step must be positive, got {dt_fine}")));
    }
    let mut times = Vec::with_capacity(path.times.len());
    let mut values = Vec::with_capacity(path.values.len());
    let mut absorbed_index = path.absorbed_index;
    times.push(path.times[0]);
    values.push(path.values[0]);
    for k in 1..path.times.len() {
        let (t0, x0) = (path.times[k - 1], path.values[k - 1]);
        let (t1, x1) = (path.times[k], path.values[k]);
        let len = t1 - t0;
        let near = (x0 - level).abs().min((x1 - level).abs()) <= window;
        if near && k <= path.absorbed_index && len > 1.5 * dt_fine {
            let m = (len / dt_fine).ceil() as usize;
            let h = len / m as f64;
            let mut t = t0;
            let mut x = x0;
            for _ in 1..m {
                let remain = t1 - t;
                let mean = x + h * (x1 - x) / remain;
                let var = (h * (remain - h) / remain).max(0.0);
                let g: f64 = rng.sample(StandardNormal);
                x = mean + var.sqrt() * g;
                t += h;
                times.push(t);
                values.push(x);
            }
        }
        times.push(t1);
        values.push(x1);
        if k == path.absorbed_index {
            absorbed_index = times.len() - 1;
        }
    }
    Ok(PathGrid {
        times,
        values,
        sigma: path.sigma,
        absorbed_index,
        truncation_suspect: path.truncation_suspect,
        sup_exact: None,
    })
}

/// Absorption times of `n` paths, streamed.
pub fn sigma_batch(
    params: ModelParams,
    config: &SamplerConfig,
    method: SampleMethod,
    base: RngStream,
    n: usize,
) -> Result<Vec<f64>> {
    map_path_batch(params, config, method, base, n, |p| Ok(p.sigma))
}

/// Metadata written next to a path dump; enough to reproduce the path
/// byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSidecar {
    pub lambda: f64,
    pub z: f64,
    pub method: SampleMethod,
    pub seed: u64,
    pub stream_id: u64,
    pub dt: f64,
    pub sigma: f64,
    pub truncation_suspect: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_exact: Option<f64>,
}

pub fn path_sidecar(
    params: ModelParams,
    config: &SamplerConfig,
    method: SampleMethod,
    stream: RngStream,
    path: &PathGrid,
) -> PathSidecar {
    PathSidecar {
        lambda: params.lambda,
        z: params.z,
        method,
        seed: stream.seed,
        stream_id: stream.stream_id,
        dt: config.dt,
        sigma: path.sigma,
        truncation_suspect: path.truncation_suspect,
        sup_exact: path.sup_exact,
    }
}

/// Write a path as two-column CSV. Values use the shortest representation
/// that round-trips, so the output is byte-stable across runs.
pub fn write_path_csv<W: std::io::Write>(mut w: W, path: &PathGrid) -> Result<()> {
    writeln!(w, "t,value")?;
    for (t, x) in path.times.iter().zip(&path.values) {
        writeln!(w, "{t},{x}")?;
    }
    Ok(())
}
