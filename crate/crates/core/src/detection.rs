//! Measurable quantities: singles spectrum and rate, biphoton amplitude,
//! coincidence rate versus idler delay, and the dip/oscillation diagnostics.
//!
//! The signal photon may pass through an EIT cell and an ideal band-pass
//! filter before detection; both are described by [`SignalPath`]. Without a
//! filter the integrals run over the whole line with analytic sinc² tails,
//! which is cheap for the bare source but expensive once the cell is present
//! and the idler delay reaches nanoseconds (the cosine factor then has ~10⁷
//! periods under the envelope). Figure presets therefore use a filter.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::medium::{MediumError, MediumParams, SlowLightSummary};
use crate::quadrature::{
    self, special, EnvelopeScales, Integrable, QuadratureError, QuadratureOptions, QuadratureReport,
    TailEstimate,
};
use crate::spdc::{phase_matching, unfiltered_spectrum, SpdcError, SpdcParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectionError {
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error(transparent)]
    Spdc(#[from] SpdcError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("integral did not converge at {abscissa_name} = {abscissa:e} (error estimate {error_estimate:e})")]
    NonConvergence {
        abscissa_name: String,
        abscissa: f64,
        error_estimate: f64,
    },
    #[error("invalid scan grid: {0}")]
    InvalidGrid(String),
    #[error("invalid band-pass half-width {0}")]
    InvalidFilter(f64),
    #[error("baseline rate needs a degenerate source (W_s = {w_s:e}, W_i = {w_i:e})")]
    NonDegenerate { w_s: f64, w_i: f64 },
    #[error("scan is flat: plateau {plateau:e}, minimum {min:e}")]
    FlatScan { plateau: f64, min: f64 },
    #[error("{0} is not available for this scan")]
    Unsupported(&'static str),
}

/// Ideal rectangular filter `|ν| ≤ half_width` in front of the signal detector
/// (or the cell).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPass {
    half_width: f64,
}

impl BandPass {
    pub fn new(half_width: f64) -> Result<Self, DetectionError> {
        if half_width.is_finite() && half_width > 0.0 {
            Ok(Self { half_width })
        } else {
            Err(DetectionError::InvalidFilter(half_width))
        }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    fn passes(&self, nu: f64) -> bool {
        nu.abs() <= self.half_width
    }
}

/// What stands between the crystal and the signal detector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SignalPath {
    pub medium: Option<MediumParams>,
    pub filter: Option<BandPass>,
}

impl SignalPath {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn through(medium: MediumParams) -> Self {
        Self {
            medium: Some(medium),
            filter: None,
        }
    }

    pub fn with_filter(mut self, filter: BandPass) -> Self {
        self.filter = Some(filter);
        self
    }

    /// Complex transfer function of the path at signal offset `ν`.
    pub fn transfer(&self, nu: f64, w_s: f64) -> Complex64 {
        if let Some(f) = &self.filter {
            if !f.passes(nu) {
                return Complex64::new(0.0, 0.0);
            }
        }
        match &self.medium {
            Some(m) => m.transmission_complex(nu, w_s),
            None => Complex64::new(1.0, 0.0),
        }
    }

    /// `ln |transfer|²`, finite where the exponential itself would underflow.
    pub fn log_power_transfer(&self, nu: f64, w_s: f64) -> f64 {
        if let Some(f) = &self.filter {
            if !f.passes(nu) {
                return f64::NEG_INFINITY;
            }
        }
        match &self.medium {
            Some(m) => {
                let omega = w_s + nu;
                let chi = m.chi(m.omega_ac() - omega);
                -chi.im * omega * m.cell_length() / m.constants().c()
            }
            None => 0.0,
        }
    }
}

/// `S(ν) = S₀(ν)·|T(ν)|²`.
pub fn singles_spectrum(nu: f64, path: &SignalPath, spdc: &SpdcParams) -> f64 {
    unfiltered_spectrum(nu, spdc) * path.transfer(nu, spdc.w_s()).norm_sqr()
}

/// `ln S(ν)`; keeps the Autler–Townes dips resolvable below `f64` underflow.
pub fn singles_log_spectrum(nu: f64, path: &SignalPath, spdc: &SpdcParams) -> f64 {
    unfiltered_spectrum(nu, spdc).ln() + path.log_power_transfer(nu, spdc.w_s())
}

// ---------------------------------------------------------------------------
// integration plumbing

/// Phase-rate bookkeeping for one integrand: `base` is the slope that holds
/// everywhere (delay, `Dl`), `medium_factor` how many copies of the cell phase
/// enter.
#[derive(Debug, Clone, Copy)]
struct Oscillation {
    base: f64,
    medium_factor: f64,
}

/// `|dφ/dν|` of the cell phase `χ′ωL/(2c)` at offset `ν`.
fn cell_phase_slope(m: &MediumParams, nu: f64, w_s: f64) -> f64 {
    let h = 1e-4 * m.omega_c_rabi().min(m.gamma_c());
    let phase = |x: f64| {
        let omega = w_s + x;
        m.chi(m.omega_ac() - omega).re * omega * m.cell_length() / (2.0 * m.constants().c())
    };
    ((phase(nu + h) - phase(nu - h)) / (2.0 * h)).abs()
}

struct Plan {
    lo: f64,
    hi: f64,
    hints: Vec<f64>,
    max_panel_width: Option<f64>,
    scales: Option<EnvelopeScales>,
}

fn width_for(slope: f64) -> Option<f64> {
    (slope > 0.0).then(|| PI / (4.0 * slope))
}

fn plan(path: &SignalPath, spdc: &SpdcParams, osc: Option<Oscillation>) -> Plan {
    let w_s = spdc.w_s();
    let shift = spdc.w_i() - spdc.w_s();
    let env = spdc.envelope_halfwidth();
    let mut hints = Vec::new();

    let (lo, hi, scales) = match &path.filter {
        Some(f) => {
            let b = f.half_width();
            hints.extend([-b, b, shift - b, shift + b]);
            (-b, b, None)
        }
        None => {
            hints.extend((1..=8).flat_map(|k| [-(k as f64) * env, k as f64 * env]));
            let mut scales = EnvelopeScales::new(env);
            if let Some(m) = &path.medium {
                let center = m.omega_ac() - w_s;
                scales.feature_scale = m.omega_c_rabi() + center.abs() + shift.abs();
                scales.max_half_width = 0.5 * w_s;
            }
            (f64::NEG_INFINITY, f64::INFINITY, Some(scales))
        }
    };
    hints.push(0.0);

    let mut max_panel_width = osc.and_then(|o| width_for(o.base));
    if let Some(m) = &path.medium {
        let center = m.omega_ac() - w_s;
        let o = m.omega_c_rabi();
        for c in [center, shift - center] {
            hints.extend([c, c - o, c + o, c - 0.5 * o, c + 0.5 * o, c - 2.0 * o, c + 2.0 * o]);
        }
        if let Some(osc) = osc.filter(|o| o.medium_factor > 0.0) {
            // Resolve the cell phase finely where it is steep, and keep the
            // panels elsewhere no wider than the residual phase rate allows.
            let inner_slope = osc.base + osc.medium_factor * cell_phase_slope(m, center, w_s);
            let a = m.prefactor_k() * w_s * m.cell_length() / (2.0 * m.constants().c());
            let reach = (osc.medium_factor * a / osc.base.max(1e-300)).sqrt();
            let radius = (4.0 * (o + m.gamma_c())).max(reach).min(0.25 * w_s);
            let outer_slope = osc.base
                + osc.medium_factor
                    * cell_phase_slope(m, center + radius, w_s).max(cell_phase_slope(m, center - radius, w_s))
                    * 1.5;
            let step = PI / (4.0 * inner_slope);
            for c in [center, shift - center] {
                let (a0, b0) = ((c - radius).max(lo), (c + radius).min(hi));
                if b0 > a0 {
                    let n = ((b0 - a0) / step).ceil() as usize;
                    // the panel cap is checked by the integrator
                    let n = n.min(quadrature::DEFAULT_MAX_SUBDIVISIONS);
                    hints.extend((0..=n).map(|k| a0 + (b0 - a0) * k as f64 / n as f64));
                }
            }
            max_panel_width = width_for(outer_slope);
        }
    }
    Plan {
        lo,
        hi,
        hints,
        max_panel_width,
        scales,
    }
}

fn run_plan<T, F, G>(
    f: F,
    plan: &Plan,
    tail: G,
    opts: &QuadratureOptions,
    abscissa: (&str, f64),
) -> Result<QuadratureReport<T>, DetectionError>
where
    T: Integrable,
    F: Fn(f64) -> T,
    G: Fn(f64) -> TailEstimate<T>,
{
    let opts = opts.with_max_panel_width(plan.max_panel_width);
    let report = match &plan.scales {
        None => quadrature::integrate(f, plan.lo, plan.hi, &opts, &plan.hints)?,
        Some(scales) => quadrature::infinite_domain_wrap(f, scales, tail, &opts, &plan.hints)?,
    };
    if report.converged {
        Ok(report)
    } else {
        Err(DetectionError::NonConvergence {
            abscissa_name: abscissa.0.to_string(),
            abscissa: abscissa.1,
            error_estimate: report.abs_error_estimate,
        })
    }
}

/// Bound on `|ln T|` beyond `m`, counting the idler-side partner frequency
/// (`None`: not yet small there).
fn medium_epsilon(path: &SignalPath, spdc: &SpdcParams, m: f64) -> Option<f64> {
    match &path.medium {
        None => Some(0.0),
        Some(med) => {
            let shift = (spdc.w_i() - spdc.w_s()).abs();
            med.phase_bound_beyond(m - shift, spdc.w_s())
        }
    }
}

/// Bound on `−ln |T|` beyond `m`.
fn medium_attenuation(path: &SignalPath, spdc: &SpdcParams, m: f64) -> Option<f64> {
    match &path.medium {
        None => Some(0.0),
        Some(med) => med.absorption_bound_beyond(m, spdc.w_s()),
    }
}

/// Two-sided `∫_{|ν|>m} |Φ(νDl)||Φ((s − ν)Dl)| dν` for a shifted copy.
fn shifted_envelope_bound(spdc: &SpdcParams, m: f64) -> f64 {
    let s = (spdc.w_i() - spdc.w_s()).abs();
    if s == 0.0 {
        return special::sinc2_tail(0.5 * spdc.dl(), m);
    }
    if m < 2.0 * s {
        return f64::INFINITY;
    }
    // |Φ(x)| ≤ 2/|x| and |s − ν| ≥ |ν|/2
    16.0 / (spdc.dl() * spdc.dl() * m)
}

// ---------------------------------------------------------------------------
// rates

/// `R_s = ∫S(ν)dν` with unit detection efficiency.
pub fn singles_rate(
    path: &SignalPath,
    spdc: &SpdcParams,
    opts: &QuadratureOptions,
) -> Result<QuadratureReport<f64>, DetectionError> {
    let a = 0.5 * spdc.dl();
    let tail = |m: f64| {
        let base = special::sinc2_tail(a, m);
        // only |T|² enters, so the attenuation alone bounds the deviation
        let bound = match medium_attenuation(path, spdc, m) {
            Some(eps) => 2.0 * eps * base,
            None => f64::INFINITY,
        };
        TailEstimate { value: base, bound }
    };
    let p = plan(path, spdc, None);
    run_plan(|nu| singles_spectrum(nu, path, spdc), &p, tail, opts, ("singles", 0.0))
}

/// Two-photon amplitude envelope `Ψ(t₁, t₂)` with the carrier
/// `e^{−i(W_s t₁ + W_i t₂)}` removed. Only `t₁ − t₂` matters.
pub fn biphoton_amplitude(
    t1: f64,
    t2: f64,
    path: &SignalPath,
    spdc: &SpdcParams,
    opts: &QuadratureOptions,
) -> Result<QuadratureReport<Complex64>, DetectionError> {
    let t = t1 - t2;
    let dl = spdc.dl();
    let w_s = spdc.w_s();
    let f = |nu: f64| phase_matching(nu * dl) * path.transfer(nu, w_s) * Complex64::from_polar(1.0, -nu * t);
    let a = 0.5 * dl;
    let tail = |m: f64| {
        // Φ(νDl)e^{−iνt} = e^{−iν(t + Dl/2)} sinc(νDl/2); the odd part cancels
        let value = Complex64::new(special::sinc_cos_tail(a, t + a, m), 0.0);
        let bound = match medium_epsilon(path, spdc, m) {
            // |T − 1| ≤ ε(m)·m/|ν| beyond m, against |Φ| ≤ 2/|νDl|
            Some(eps) => 4.0 * eps / dl,
            None => f64::INFINITY,
        };
        TailEstimate { value, bound }
    };
    let osc = Oscillation {
        base: t.abs() + dl,
        medium_factor: 1.0,
    };
    let p = plan(path, spdc, Some(osc));
    run_plan(f, &p, tail, opts, ("t1-t2", t))
}

/// Integrand of the coincidence rate at idler delay `δτ`.
fn coincidence_integrand(delta_tau: f64, path: SignalPath, spdc: SpdcParams) -> impl Fn(f64) -> f64 {
    let dl = spdc.dl();
    let w_s = spdc.w_s();
    let shift = spdc.w_i() - spdc.w_s();
    move |nu: f64| {
        let phi = phase_matching(nu * dl);
        let t = path.transfer(nu, w_s);
        let direct = (phi * t).norm_sqr();
        let partner = nu.mul_add(-1.0, shift);
        let cross = phi.conj()
            * phase_matching(partner * dl)
            * t.conj()
            * path.transfer(partner, w_s)
            * Complex64::from_polar(1.0, -(2.0 * nu - shift) * delta_tau);
        direct - cross.re
    }
}

/// Coincidence rate `R_cc(δτ)` for a general (possibly non-degenerate) source.
pub fn coincidence_rate(
    delta_tau: f64,
    path: &SignalPath,
    spdc: &SpdcParams,
    opts: &QuadratureOptions,
) -> Result<QuadratureReport<f64>, DetectionError> {
    let dl = spdc.dl();
    let a = 0.5 * dl;
    let degenerate = spdc.is_degenerate();
    let tail = |m: f64| {
        let direct = special::sinc2_tail(a, m);
        let (cross, mut bound) = if degenerate {
            (special::sinc2_cos_tail(a, dl - 2.0 * delta_tau, m), 0.0)
        } else {
            (0.0, shifted_envelope_bound(spdc, m))
        };
        match medium_epsilon(path, spdc, m) {
            Some(eps) if eps > 0.0 => {
                let att = medium_attenuation(path, spdc, m).unwrap_or(eps);
                bound += 2.0 * att * direct + (2.0 * eps).exp_m1() * shifted_envelope_bound(spdc, m);
            }
            Some(_) => {}
            None => bound = f64::INFINITY,
        }
        TailEstimate {
            value: direct - cross,
            bound,
        }
    };
    let osc = Oscillation {
        base: 2.0 * delta_tau.abs() + dl,
        medium_factor: 2.0,
    };
    let p = plan(path, spdc, Some(osc));
    run_plan(
        coincidence_integrand(delta_tau, *path, *spdc),
        &p,
        tail,
        opts,
        ("delta_tau", delta_tau),
    )
}

/// Coincidence rate without the cell, `∫sinc²(νDl/2)[1 − cos ν(Dl − 2δτ)]dν`.
pub fn baseline_rate(
    delta_tau: f64,
    spdc: &SpdcParams,
    opts: &QuadratureOptions,
) -> Result<QuadratureReport<f64>, DetectionError> {
    if !spdc.is_degenerate() {
        return Err(DetectionError::NonDegenerate {
            w_s: spdc.w_s(),
            w_i: spdc.w_i(),
        });
    }
    let dl = spdc.dl();
    let a = 0.5 * dl;
    let b = dl - 2.0 * delta_tau;
    let f = move |nu: f64| unfiltered_spectrum(nu, spdc) * (1.0 - (nu * b).cos());
    let tail = |m: f64| TailEstimate {
        value: special::sinc2_tail(a, m) - special::sinc2_cos_tail(a, b, m),
        bound: 0.0,
    };
    let osc = Oscillation {
        base: b.abs(),
        medium_factor: 0.0,
    };
    let p = plan(&SignalPath::vacuum(), spdc, Some(osc));
    run_plan(f, &p, tail, opts, ("delta_tau", delta_tau))
}

/// Closed-form baseline `(2π/Dl)·[1 − max(0, 1 − |Dl − 2δτ|/Dl)]`.
pub fn baseline_rate_closed_form(delta_tau: f64, spdc: &SpdcParams) -> f64 {
    let dl = spdc.dl();
    spdc.rate_scale() * (1.0 - (1.0 - (dl - 2.0 * delta_tau).abs() / dl).max(0.0))
}

// ---------------------------------------------------------------------------
// scans

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `χ′` and `χ″` versus `ν`.
    Susceptibility,
    /// `S(ν)` versus `ν`.
    SinglesSpectrum,
    /// `R_cc(δτ)`.
    Coincidence,
    /// Cell-free `R_cc(δτ)`.
    Baseline,
}

impl Observable {
    pub fn abscissa_name(&self) -> &'static str {
        match self {
            Observable::Susceptibility | Observable::SinglesSpectrum => "nu",
            Observable::Coincidence | Observable::Baseline => "delta_tau",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Observable::Susceptibility => "susceptibility",
            Observable::SinglesSpectrum => "singles",
            Observable::Coincidence => "coincidence",
            Observable::Baseline => "baseline",
        }
    }

    pub fn is_rate(&self) -> bool {
        matches!(self, Observable::Coincidence | Observable::Baseline)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Normalization {
    #[serde(rename = "raw")]
    Raw,
    /// Divide by the mean of the outer points (fraction per side).
    #[serde(rename = "plateau=1")]
    Plateau { fraction: f64 },
    #[serde(rename = "peak=1")]
    Peak,
}

impl Normalization {
    pub const DEFAULT_PLATEAU_FRACTION: f64 = 0.1;

    pub fn plateau() -> Self {
        Normalization::Plateau {
            fraction: Self::DEFAULT_PLATEAU_FRACTION,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::Plateau { .. } => "plateau=1",
            Normalization::Peak => "peak=1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub abscissa: f64,
    pub value: f64,
    /// Quadrature error estimate, or the imaginary part for susceptibility scans.
    pub secondary: f64,
}

/// Everything a scan depended on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    pub medium: Option<MediumParams>,
    pub filter: Option<BandPass>,
    pub spdc: SpdcParams,
    pub quadrature: QuadratureOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub observable: Observable,
    pub abscissa_name: &'static str,
    pub points: Vec<ScanPoint>,
    pub params_fingerprint: Fingerprint,
    pub normalization: Normalization,
    /// The raw values were divided by this.
    pub normalization_factor: f64,
}

impl ScanResult {
    pub fn abscissae(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.abscissa).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// `n` evenly spaced points from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>, DetectionError> {
    if n < 2 || !(min.is_finite() && max.is_finite() && min < max) {
        return Err(DetectionError::InvalidGrid(format!("[{min}, {max}] with {n} points")));
    }
    let step = (max - min) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { max } else { min + step * i as f64 })
        .collect())
}

fn plateau_level(values: &[f64], fraction: f64) -> f64 {
    let k = ((values.len() as f64 * fraction).round() as usize).clamp(1, values.len().div_ceil(2));
    let outer: f64 = values[..k].iter().sum::<f64>() + values[values.len() - k..].iter().sum::<f64>();
    outer / (2 * k) as f64
}

/// Evaluates `observable` on `grid`, in parallel, merged in grid order.
pub fn scan(
    observable: Observable,
    grid: &[f64],
    path: &SignalPath,
    spdc: &SpdcParams,
    opts: &QuadratureOptions,
    normalization: Normalization,
) -> Result<ScanResult, DetectionError> {
    if grid.len() < 2 {
        return Err(DetectionError::InvalidGrid("fewer than two points".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DetectionError::InvalidGrid("abscissae must be finite and strictly increasing".into()));
    }
    if observable == Observable::Susceptibility && path.medium.is_none() {
        return Err(DetectionError::Unsupported("a susceptibility scan without a medium"));
    }

    let eval = |x: f64| -> Result<ScanPoint, DetectionError> {
        let (value, secondary) = match observable {
            Observable::Susceptibility => {
                let m = path.medium.as_ref().expect("checked above");
                let chi = crate::medium::susceptibility(m.omega_ac() - spdc.w_s() - x, m)?;
                (chi.chi_real, chi.chi_imag)
            }
            Observable::SinglesSpectrum => (singles_spectrum(x, path, spdc), 0.0),
            Observable::Coincidence => {
                let r = coincidence_rate(x, path, spdc, opts)?;
                (r.value, r.abs_error_estimate)
            }
            Observable::Baseline => {
                let r = baseline_rate(x, spdc, opts)?;
                (r.value, r.abs_error_estimate)
            }
        };
        Ok(ScanPoint {
            abscissa: x,
            value,
            secondary,
        })
    };
    let results: Vec<Result<ScanPoint, DetectionError>> = grid.par_iter().map(|&x| eval(x)).collect();
    let mut points = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let values: Vec<f64> = points.iter().map(|p| p.value).collect();
    let factor = match normalization {
        Normalization::Raw => 1.0,
        Normalization::Plateau { fraction } => plateau_level(&values, fraction),
        Normalization::Peak => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    };
    if !(factor.is_finite() && factor > 0.0) {
        return Err(DetectionError::FlatScan {
            plateau: factor,
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        });
    }
    if factor != 1.0 {
        let scale_secondary = observable != Observable::Susceptibility;
        for p in &mut points {
            p.value /= factor;
            if scale_secondary {
                p.secondary /= factor;
            }
        }
    }

    Ok(ScanResult {
        observable,
        abscissa_name: observable.abscissa_name(),
        points,
        params_fingerprint: Fingerprint {
            medium: path.medium,
            filter: path.filter,
            spdc: *spdc,
            quadrature: *opts,
        },
        normalization,
        normalization_factor: factor,
    })
}

// ---------------------------------------------------------------------------
// diagnostics

/// Knobs for [`dip_metrics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DipOptions {
    /// Share of points on each side averaged into the plateau.
    pub plateau_fraction: f64,
    /// A local maximum counts as an oscillation when it differs from the
    /// plateau by more than this fraction.
    pub oscillation_threshold: f64,
}

impl Default for DipOptions {
    fn default() -> Self {
        Self {
            plateau_fraction: Normalization::DEFAULT_PLATEAU_FRACTION,
            oscillation_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DipMetrics {
    pub dip_center: f64,
    /// Visibility `(plateau − min)/plateau`, clamped to `[0, 1]`.
    pub dip_depth: f64,
    pub plateau: f64,
    pub oscillation_count: usize,
    pub oscillation_abscissae: Vec<f64>,
    pub predicted_oscillation_flag: bool,
}

/// Oscillation predicate `Δω_tr·(Dl − 2φ′_d − 2δτ) > 1`.
pub fn oscillation_predicted(delta_tau: f64, window: &SlowLightSummary, spdc: &SpdcParams) -> bool {
    window.delta_omega_tr * (spdc.dl() - 2.0 * window.phi_d_prime_at_0 - 2.0 * delta_tau) > 1.0
}

/// Strict interior local maxima further than `threshold·plateau` from the plateau.
pub fn oscillation_maxima(points: &[ScanPoint], plateau: f64, threshold: f64) -> Vec<f64> {
    points
        .windows(3)
        .filter(|w| {
            w[1].value > w[0].value
                && w[1].value > w[2].value
                && (w[1].value - plateau).abs() > threshold * plateau.abs()
        })
        .map(|w| w[1].abscissa)
        .collect()
}

/// Local minima of `values`, treating a run of equal values as one point
/// (the centre of the run). Endpoints are not minima.
pub fn local_minima(abscissae: &[f64], values: &[f64]) -> Vec<f64> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] != values[start] {
            runs.push((start, i - 1));
            start = i;
        }
    }
    runs.windows(3)
        .filter(|w| values[w[1].0] < values[w[0].0] && values[w[1].0] < values[w[2].0])
        .map(|w| 0.5 * (abscissae[w[1].0] + abscissae[w[1].1]))
        .collect()
}

/// Dip position and depth, plus oscillation diagnostics when the cell's
/// slow-light figures are supplied.
pub fn dip_metrics(
    scan: &ScanResult,
    window: Option<&SlowLightSummary>,
    spdc: &SpdcParams,
    options: &DipOptions,
) -> Result<DipMetrics, DetectionError> {
    if !scan.observable.is_rate() {
        return Err(DetectionError::Unsupported("dip metrics on a non-rate scan"));
    }
    let pts = &scan.points;
    let values: Vec<f64> = pts.iter().map(|p| p.value).collect();
    let plateau = plateau_level(&values, options.plateau_fraction);
    let (imin, &vmin) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("scan has points");
    if plateau - vmin < 1e-12 * plateau.abs() {
        return Err(DetectionError::FlatScan { plateau, min: vmin });
    }

    let mut dip_center = pts[imin].abscissa;
    let mut dip_value = vmin;
    if imin > 0 && imin + 1 < pts.len() {
        let (x0, x1, x2) = (pts[imin - 1].abscissa, pts[imin].abscissa, pts[imin + 1].abscissa);
        let (y0, y1, y2) = (values[imin - 1], values[imin], values[imin + 1]);
        let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
        let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
        if den != 0.0 {
            let x = x1 - 0.5 * num / den;
            if x > x0 && x < x2 {
                dip_center = x;
                // value of the fitted parabola at its vertex
                let l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
                let l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
                let l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
                dip_value = (y0 * l0 + y1 * l1 + y2 * l2).min(vmin);
            }
        }
    }
    let dip_depth = ((plateau - dip_value) / plateau).clamp(0.0, 1.0);

    let oscillation_abscissae = oscillation_maxima(pts, plateau, options.oscillation_threshold);
    let predicted_oscillation_flag = match window {
        Some(w) => oscillation_predicted(pts[0].abscissa, w, spdc),
        None => false,
    };
    Ok(DipMetrics {
        dip_center,
        dip_depth,
        plateau,
        oscillation_count: oscillation_abscissae.len(),
        oscillation_abscissae,
        predicted_oscillation_flag,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentAgreement {
    pub segments: usize,
    pub agreeing: usize,
}

impl SegmentAgreement {
    pub fn fraction(&self) -> f64 {
        if self.segments == 0 {
            0.0
        } else {
            self.agreeing as f64 / self.segments as f64
        }
    }
}

/// Cuts the scan into consecutive segments of `segment_width` and compares,
/// per segment, the predicate at the segment centre with whether the segment
/// holds an oscillation maximum. Segments with fewer than three points are
/// skipped.
pub fn oscillation_agreement(
    scan: &ScanResult,
    window: &SlowLightSummary,
    spdc: &SpdcParams,
    segment_width: f64,
    options: &DipOptions,
) -> Result<SegmentAgreement, DetectionError> {
    if !(segment_width.is_finite() && segment_width > 0.0) {
        return Err(DetectionError::InvalidGrid(format!("segment width {segment_width}")));
    }
    let values = scan.values();
    let plateau = plateau_level(&values, options.plateau_fraction);
    let maxima = oscillation_maxima(&scan.points, plateau, options.oscillation_threshold);
    let x0 = scan.points[0].abscissa;
    let x1 = scan.points[scan.points.len() - 1].abscissa;
    let n = ((x1 - x0) / segment_width).floor().max(1.0) as usize;
    let width = (x1 - x0) / n as f64;

    let mut out = SegmentAgreement {
        segments: 0,
        agreeing: 0,
    };
    for k in 0..n {
        let a = x0 + width * k as f64;
        let b = if k + 1 == n { x1 } else { a + width };
        let in_seg = |x: f64| x >= a && (x < b || (k + 1 == n && x <= b));
        let count = scan.points.iter().filter(|p| in_seg(p.abscissa)).count();
        if count < 3 {
            continue;
        }
        let measured = maxima.iter().any(|&x| in_seg(x));
        let predicted = oscillation_predicted(0.5 * (a + b), window, spdc);
        out.segments += 1;
        if measured == predicted {
            out.agreeing += 1;
        }
    }
    Ok(out)
}
