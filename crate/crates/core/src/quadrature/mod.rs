//! Globally adaptive Gauss–Kronrod integration for two-scale integrands.
//!
//! The integrands of this crate combine a ~10¹² rad/s sinc² envelope with EIT
//! structure ~10⁹ rad/s wide and, for coincidence scans, cosine factors whose
//! phase runs through thousands of radians. A uniform grid fine enough for the
//! notch would need millions of nodes per evaluation, so instead the interval is
//! pre-split at caller-supplied breakpoints (and, optionally, into panels no
//! wider than a fraction of the local oscillation period) and then refined
//! where the 10/21-point Gauss–Kronrod error estimate is largest.

pub mod special;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Default cap on the number of panels.
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 1_000_000;

/// Values that can be integrated: real or complex scalars.
pub trait Integrable:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn norm(self) -> f64;
}

impl Integrable for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl Integrable for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("integration interval [{a}, {b}] is empty or not finite")]
    InvalidInterval { a: f64, b: f64 },
    #[error("tolerances must be positive and finite (abs_tol = {abs_tol}, rel_tol = {rel_tol})")]
    InvalidTolerance { abs_tol: f64, rel_tol: f64 },
    #[error("subdivision cap must be at least 1")]
    InvalidCap,
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("envelope half-width must be positive, got {0}")]
    InvalidEnvelope(f64),
}

/// Tolerances and limits for one integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Upper bound on the width of the initial panels. Callers with an
    /// oscillating factor pass `π/(4·phase slope)`.
    pub max_panel_width: Option<f64>,
}

impl QuadratureOptions {
    /// Defaults scaled to an integrand whose integral is of order `scale`.
    pub fn for_scale(scale: f64) -> Self {
        Self {
            abs_tol: 1e-12 * scale.abs(),
            rel_tol: 1e-7,
            ..Self::default()
        }
    }

    pub fn with_max_panel_width(mut self, width: Option<f64>) -> Self {
        self.max_panel_width = width;
        self
    }

    fn validate(&self) -> Result<(), QuadratureError> {
        let ok = |t: f64| t.is_finite() && t > 0.0;
        if !ok(self.abs_tol) || !ok(self.rel_tol) {
            return Err(QuadratureError::InvalidTolerance {
                abs_tol: self.abs_tol,
                rel_tol: self.rel_tol,
            });
        }
        if self.max_subdivisions == 0 {
            return Err(QuadratureError::InvalidCap);
        }
        Ok(())
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value)
    }
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-7,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
            max_panel_width: None,
        }
    }
}

/// Outcome of an integration. `converged == false` is a result, not an error:
/// callers decide what to do with it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureReport<T> {
    pub value: T,
    pub abs_error_estimate: f64,
    /// Number of panels in the final partition.
    pub subdivisions: usize,
    pub converged: bool,
    /// Interior breakpoints used for the initial partition.
    pub breakpoints_used: Vec<f64>,
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_206_189_895,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
// Gauss weights for the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    roundoff: bool,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by position so the refinement order is fully determined
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn gk21<T, F>(f: &F, a: f64, b: f64) -> Result<Panel<T>, QuadratureError>
where
    T: Integrable,
    F: Fn(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| {
        let v = f(x);
        if v.norm().is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { x })
        }
    };

    let fc = eval(center)?;
    let mut res_k = fc * WGK[10];
    let mut res_g = T::zero();
    let mut res_abs = fc.norm() * WGK[10];
    let mut fv = [(T::zero(), T::zero()); 10];
    for (j, slot) in fv.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        res_k = res_k + (f1 + f2) * WGK[j];
        res_abs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            res_g = res_g + (f1 + f2) * WG[j / 2];
        }
        *slot = (f1, f2);
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).norm();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        res_asc += WGK[j] * ((f1 - mean).norm() + (f2 - mean).norm());
    }

    let h = half.abs();
    let res_abs = res_abs * h;
    let res_asc = res_asc * h;
    let error = rescale_error((res_k - res_g).norm() * h, res_abs, res_asc);
    Ok(Panel {
        a,
        b,
        value: res_k * half,
        error,
        roundoff: error <= 50.0 * f64::EPSILON * res_abs * 1.000_001,
    })
}

fn initial_partition(a: f64, b: f64, hints: &[f64], max_width: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut interior: Vec<f64> = hints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();

    let mut edges = Vec::with_capacity(interior.len() + 2);
    edges.push(a);
    edges.extend_from_slice(&interior);
    edges.push(b);

    let Some(w) = max_width.filter(|w| w.is_finite() && *w > 0.0) else {
        return (edges, interior);
    };
    let mut fine = Vec::with_capacity(edges.len());
    fine.push(a);
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let n = ((hi - lo) / w).ceil().max(1.0) as usize;
        for k in 1..n {
            fine.push(lo + (hi - lo) * (k as f64) / (n as f64));
        }
        fine.push(hi);
    }
    (fine, interior)
}

/// Integrates `f` over `[a, b]`.
///
/// The initial partition is `a`, the hints that fall strictly inside the
/// interval, and `b`, further split to respect `max_panel_width`. Panels are
/// then bisected in order of decreasing error estimate until the total error
/// drops below `max(abs_tol, rel_tol·|value|)` or the panel cap is reached.
pub fn integrate<T, F>(
    f: F,
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
    hints: &[f64],
) -> Result<QuadratureReport<T>, QuadratureError>
where
    T: Integrable,
    F: Fn(f64) -> T,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    opts.validate()?;

    let (edges, interior) = initial_partition(a, b, hints, opts.max_panel_width);
    let cap = opts.max_subdivisions;
    if edges.len() - 1 > cap {
        // the oscillation guard alone already exceeds the budget
        return Ok(QuadratureReport {
            value: T::zero(),
            abs_error_estimate: f64::INFINITY,
            subdivisions: 0,
            converged: false,
            breakpoints_used: interior,
        });
    }

    let mut heap = BinaryHeap::with_capacity(edges.len());
    let mut frozen = Vec::new();
    let mut value = T::zero();
    let mut error = 0.0;
    for pair in edges.windows(2) {
        let p = gk21(&f, pair[0], pair[1])?;
        value = value + p.value;
        error += p.error;
        heap.push(p);
    }

    let mut panels = heap.len();
    let mut converged = error <= opts.tolerance(value.norm());
    while !converged && panels < cap {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if worst.roundoff || !(mid > worst.a && mid < worst.b) {
            // splitting cannot improve a panel at the rounding floor
            frozen.push(worst);
            continue;
        }
        let left = gk21(&f, worst.a, mid)?;
        let right = gk21(&f, mid, worst.b)?;
        value = value + (left.value + right.value) - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        panels += 1;
        converged = error <= opts.tolerance(value.norm());
    }

    // Re-sum in abscissa order; the running sums above drift with history.
    let mut all: Vec<Panel<T>> = heap.into_vec();
    all.extend(frozen);
    all.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = T::zero();
    let mut error = 0.0;
    for p in &all {
        value = value + p.value;
        error += p.error;
    }
    Ok(QuadratureReport {
        value,
        abs_error_estimate: error,
        subdivisions: all.len(),
        converged: error <= opts.tolerance(value.norm()),
        breakpoints_used: interior,
    })
}

/// Closed-form remainder of an integrand outside `[-m, m]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate<T> {
    /// Best estimate of the integral over `|ν| > m`.
    pub value: T,
    /// Bound on `|true tail − value|`.
    pub bound: f64,
}

/// Shape of a whole-line integrand for [`infinite_domain_wrap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeScales {
    /// Zero spacing of the slowly decaying envelope (`2π/Dl` for `sinc²(νDl/2)`).
    pub envelope_halfwidth: f64,
    /// Width of the narrowest structure that must sit well inside the window.
    pub feature_scale: f64,
    /// Largest truncation the model is trusted at.
    pub max_half_width: f64,
}

impl EnvelopeScales {
    pub fn new(envelope_halfwidth: f64) -> Self {
        Self {
            envelope_halfwidth,
            feature_scale: 0.0,
            max_half_width: f64::INFINITY,
        }
    }
}

const MIN_LOBES: f64 = 8.0;

/// Integrates over the whole real line.
///
/// The domain is truncated to `[-m, m]`, with `m` at least eight envelope
/// lobes and ten feature widths. The caller's `tail` supplies the remainder
/// beyond `m` and a bound on its inaccuracy; the bound is added to the error
/// estimate. When that bound alone is above tolerance the window is widened
/// (up to `max_half_width`) and the integral is redone once.
pub fn infinite_domain_wrap<T, F, G>(
    f: F,
    scales: &EnvelopeScales,
    tail: G,
    opts: &QuadratureOptions,
    hints: &[f64],
) -> Result<QuadratureReport<T>, QuadratureError>
where
    T: Integrable,
    F: Fn(f64) -> T,
    G: Fn(f64) -> TailEstimate<T>,
{
    let w = scales.envelope_halfwidth;
    if !(w.is_finite() && w > 0.0) {
        return Err(QuadratureError::InvalidEnvelope(w));
    }
    let lobes = MIN_LOBES.max((10.0 * scales.feature_scale.abs() / w).ceil());
    let mut m = (w * lobes).min(scales.max_half_width);

    let mut report = wrapped_once(&f, m, &tail, opts, hints)?;
    let t = tail(m);
    let budget = 0.5 * opts.tolerance(report.value.norm());
    if t.bound > budget && m < scales.max_half_width {
        // the bound falls off at least like 1/m, usually 1/m²
        let mut grown = m;
        while grown < scales.max_half_width && tail(grown).bound > budget {
            grown *= 2.0;
        }
        m = grown.min(scales.max_half_width);
        report = wrapped_once(&f, m, &tail, opts, hints)?;
    }
    Ok(report)
}

fn wrapped_once<T, F, G>(
    f: &F,
    m: f64,
    tail: &G,
    opts: &QuadratureOptions,
    hints: &[f64],
) -> Result<QuadratureReport<T>, QuadratureError>
where
    T: Integrable,
    F: Fn(f64) -> T,
    G: Fn(f64) -> TailEstimate<T>,
{
    let inner = integrate(f, -m, m, opts, hints)?;
    let t = tail(m);
    let value = inner.value + t.value;
    let error = inner.abs_error_estimate + t.bound;
    Ok(QuadratureReport {
        value,
        abs_error_estimate: error,
        subdivisions: inner.subdivisions,
        converged: inner.converged && error <= opts.tolerance(value.norm()),
        breakpoints_used: inner.breakpoints_used,
    })
}
