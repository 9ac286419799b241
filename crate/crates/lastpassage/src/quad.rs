//! Adaptive quadrature used both by the transition-kernel integrals and as
//! the independent oracle for every closed-form antiderivative in the crate.
//!
//! One panel is a 15-point Kronrod rule with the embedded 7-point Gauss rule
//! supplying the error estimate; panels split by bisection until each local
//! estimate clears its share of the absolute budget. Integrands with kinks
//! (every kernel integrand has one at the level `z`) must be split there
//! explicitly via [`integrate_with_splits`]; the adaptive refinement then
//! never straddles the kink.
//!
//! Semi-infinite integrals march doubling windows and stop once a window's
//! contribution and the integrand at its far edge both fall below truncation
//! level (`1e-16` scale), which is sound here because every integrand decays
//! at Gaussian speed.

// 15-point Kronrod abscissae (positive half) and weights; the embedded
// 7-point Gauss rule lives on the odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Accumulated error estimate (sum of per-panel Kronrod-Gauss gaps).
    pub abs_error: f64,
    pub evals: usize,
    /// Set if any integrand evaluation returned a non-finite value.
    pub nonfinite: bool,
}

/// Single G7K15 panel: returns (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, nonfinite: &mut bool) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        *nonfinite = true;
    }
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = half * XGK[i];
        let f1 = f(center - x);
        let f2 = f(center + x);
        if !f1.is_finite() || !f2.is_finite() {
            *nonfinite = true;
        }
        kron += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let value = kron * half;
    let err = ((kron - gauss) * half).abs();
    (value, err)
}

/// Adaptive integral of `f` over the finite interval `[a, b]`.
///
/// `abs_tol` is an absolute target for the error ESTIMATE; panels bisect
/// until each carries at most its proportional share, or until depth 60.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> QuadResult {
    integrate_with_splits(f, a, b, &[], abs_tol)
}

/// Adaptive integral with mandatory panel boundaries at the interior points
/// of `splits` (kinks, peaks). Split points outside `(a, b)` are ignored.
pub fn integrate_with_splits<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    splits: &[f64],
    abs_tol: f64,
) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, abs_error: 0.0, evals: 0, nonfinite: false };
    }
    let mut cuts: Vec<f64> = vec![a, b];
    cuts.extend(splits.iter().copied().filter(|s| *s > a && *s < b));
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();

    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0usize;
    let mut nonfinite = false;
    let per_panel_tol = abs_tol / (cuts.len() - 1) as f64;
    for w in cuts.windows(2) {
        let r = adapt(&f, w[0], w[1], per_panel_tol, 0, &mut nonfinite);
        total += r.0;
        err += r.1;
        evals += r.2;
    }
    QuadResult { value: total, abs_error: err, evals, nonfinite }
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    nonfinite: &mut bool,
) -> (f64, f64, usize) {
    let (v, e) = gk15(f, a, b, nonfinite);
    if e <= tol || depth >= 60 || (b - a) < 1e-15 * (1.0 + a.abs()) {
        return (v, e, 15);
    }
    let m = 0.5 * (a + b);
    let left = adapt(f, a, m, 0.5 * tol, depth + 1, nonfinite);
    let right = adapt(f, m, b, 0.5 * tol, depth + 1, nonfinite);
    (left.0 + right.0, left.1 + right.1, left.2 + right.2 + 15)
}

/// Adaptive integral of `f` over `[a, inf)` for integrands with (at least
/// exponential) decay. Marches doubling windows and truncates once both the
/// window contribution and the integrand at the window edge drop below
/// `1e-16 * (1 + |accumulated|)` -- but only after some window has carried
/// visible mass, so a bump far from `a` (e.g. a density concentrated around
/// a large mean) is not missed by an early run of near-zero windows.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64) -> QuadResult {
    let mut lo = a;
    let mut width = 1.0_f64.max(1e-3 * (1.0 + a.abs()));
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    let mut nonfinite = false;
    let mut seen_mass = false;
    for _ in 0..64 {
        let hi = lo + width;
        let r = adapt(&f, lo, hi, abs_tol / 8.0, 0, &mut nonfinite);
        total += r.0;
        err += r.1;
        evals += r.2;
        let floor = 1e-16 * (1.0 + total.abs());
        seen_mass = seen_mass || r.0.abs() >= floor;
        if seen_mass && r.0.abs() < floor && f(hi).abs() < floor {
            break;
        }
        lo = hi;
        width *= 2.0;
    }
    QuadResult { value: total, abs_error: err, evals, nonfinite }
}
