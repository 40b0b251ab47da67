//! Λ-type three-level medium: Hamiltonian, EIT eigenvalue, linear
//! susceptibility, transmission through the cell and slow-light figures.
//!
//! Detuning is `Δ = ω_ac − ω_probe` everywhere, with `ω_probe = W_s + ν`.
//! The number density and dipole moment only ever enter through the lumped
//! prefactor `K = N|μ|²/(ħε₀)` (rad/s), which is therefore the model parameter;
//! `N` and `μ` can be attached as metadata and are checked against `K`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Probe carrier for the Rb87 D1 line (795 nm), rad/s.
pub const RB87_D1_CARRIER: f64 = 2.369e15;

const DEGENERATE_FLOOR: f64 = 1e-300;
const PREFACTOR_CONSISTENCY: f64 = 1e-9;
const GAMMA_C_BRACKET: (f64, f64) = (1e2, 1e12);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MediumError {
    #[error("invalid medium parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("prefactor_K = {given} disagrees with N·μ²/(ħε₀) = {implied}")]
    InconsistentPrefactor { given: f64, implied: f64 },
    #[error("degenerate susceptibility denominator at Δ = {delta}")]
    DegenerateDenominator { delta: f64 },
    #[error("transparency window undefined: |T(0)|² = {peak} < 1/2")]
    WidthUndefined { peak: f64 },
    #[error("no γ_c in ({lo:e}, {hi:e}) rad/s gives a window width of {target:e} rad/s")]
    NoRoot { target: f64, lo: f64, hi: f64 },
    #[error("finite-difference polarization did not settle (successive differences {d1:e}, {d2:e})")]
    FiniteDifference { d1: f64, d2: f64 },
}

/// CODATA 2018 constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    hbar: f64,
    epsilon0: f64,
    c: f64,
}

impl PhysicalConstants {
    pub const CODATA: Self = Self {
        hbar: 1.054_571_817e-34,
        epsilon0: 8.854_187_812_8e-12,
        c: 299_792_458.0,
    };

    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn epsilon0(&self) -> f64 {
        self.epsilon0
    }
    pub fn c(&self) -> f64 {
        self.c
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Validated parameters of the vapor cell. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MediumParams {
    #[serde(rename = "prefactor_K")]
    prefactor_k: f64,
    gamma_b: f64,
    gamma_c: f64,
    omega_c_rabi: f64,
    omega_ac: f64,
    #[serde(rename = "L")]
    cell_length: f64,
    #[serde(rename = "density_N")]
    density_n: Option<f64>,
    dipole_mu: Option<f64>,
    #[serde(skip)]
    constants: PhysicalConstants,
}

fn require(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), MediumError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(MediumError::InvalidParameter { name, value, reason })
    }
}

impl MediumParams {
    pub fn new(
        prefactor_k: f64,
        gamma_b: f64,
        gamma_c: f64,
        omega_c_rabi: f64,
        omega_ac: f64,
        cell_length: f64,
    ) -> Result<Self, MediumError> {
        require("prefactor_K", prefactor_k, prefactor_k >= 0.0, "must be non-negative")?;
        require("gamma_b", gamma_b, gamma_b >= 0.0, "must be non-negative")?;
        require("gamma_c", gamma_c, gamma_c > 0.0, "must be positive")?;
        require("gamma_b", gamma_b, gamma_b < gamma_c, "must be below gamma_c")?;
        require("omega_c_rabi", omega_c_rabi, omega_c_rabi > 0.0, "must be positive")?;
        require("omega_ac", omega_ac, omega_ac > 0.0, "must be positive")?;
        require("L", cell_length, cell_length > 0.0, "must be positive")?;
        Ok(Self {
            prefactor_k,
            gamma_b,
            gamma_c,
            omega_c_rabi,
            omega_ac,
            cell_length,
            density_n: None,
            dipole_mu: None,
            constants: PhysicalConstants::CODATA,
        })
    }

    /// Attaches the number density and dipole moment, which must reproduce `K`.
    pub fn with_density_and_dipole(mut self, density_n: f64, dipole_mu: f64) -> Result<Self, MediumError> {
        require("density_N", density_n, density_n > 0.0, "must be positive")?;
        require("dipole_mu", dipole_mu, dipole_mu > 0.0, "must be positive")?;
        let pc = self.constants;
        let implied = density_n * dipole_mu * dipole_mu / (pc.hbar * pc.epsilon0);
        if (implied - self.prefactor_k).abs() > PREFACTOR_CONSISTENCY * implied {
            return Err(MediumError::InconsistentPrefactor {
                given: self.prefactor_k,
                implied,
            });
        }
        self.density_n = Some(density_n);
        self.dipole_mu = Some(dipole_mu);
        Ok(self)
    }

    /// Same medium with a different prefactor (drops `N`, `μ` metadata).
    pub fn with_prefactor(&self, prefactor_k: f64) -> Result<Self, MediumError> {
        Self::new(
            prefactor_k,
            self.gamma_b,
            self.gamma_c,
            self.omega_c_rabi,
            self.omega_ac,
            self.cell_length,
        )
    }

    pub fn prefactor_k(&self) -> f64 {
        self.prefactor_k
    }
    pub fn gamma_b(&self) -> f64 {
        self.gamma_b
    }
    pub fn gamma_c(&self) -> f64 {
        self.gamma_c
    }
    pub fn omega_c_rabi(&self) -> f64 {
        self.omega_c_rabi
    }
    pub fn omega_ac(&self) -> f64 {
        self.omega_ac
    }
    pub fn cell_length(&self) -> f64 {
        self.cell_length
    }
    pub fn density_n(&self) -> Option<f64> {
        self.density_n
    }
    pub fn dipole_mu(&self) -> Option<f64> {
        self.dipole_mu
    }
    pub fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    fn denominator(&self, delta: f64) -> Complex64 {
        let d1 = Complex64::new(delta, -self.gamma_c);
        let d2 = Complex64::new(delta, -self.gamma_b);
        d1 * d2 - self.omega_c_rabi * self.omega_c_rabi
    }

    fn checked_denominator(&self, delta: f64) -> Result<Complex64, MediumError> {
        let d = self.denominator(delta);
        if d.norm() < DEGENERATE_FLOOR {
            Err(MediumError::DegenerateDenominator { delta })
        } else {
            Ok(d)
        }
    }

    /// `χ(Δ)` without the degeneracy check. The denominator cannot vanish for
    /// real `Δ` once `γ_c > 0` and `Ω_c > 0`, which construction guarantees.
    pub fn chi(&self, delta: f64) -> Complex64 {
        Complex64::new(delta, -self.gamma_b) * self.prefactor_k / self.denominator(delta)
    }

    /// Complex transmission `T = exp(iχωL/(2c))` at probe frequency `W_s + ν`.
    pub fn transmission_complex(&self, nu: f64, w_s: f64) -> Complex64 {
        let omega = w_s + nu;
        let chi = self.chi(self.omega_ac - omega);
        let z = Complex64::i() * chi * (omega * self.cell_length / (2.0 * self.constants.c));
        z.exp()
    }

    /// Sup of `|iχωL/(2c)|` over probe offsets `|ν| ≥ m`, or `None` when `m`
    /// is still inside the Autler–Townes structure.
    pub fn phase_bound_beyond(&self, m: f64, w_s: f64) -> Option<f64> {
        let detuning = (self.omega_ac - w_s).abs();
        let d = m - detuning;
        let floor = self.gamma_c * self.gamma_b + self.omega_c_rabi * self.omega_c_rabi;
        if d <= 0.0 || d * d <= 2.0 * floor + self.gamma_c * d {
            return None;
        }
        // (W_s + ν)(|Δ| + γ_b)/(Δ² − γ_cγ_b − Ω²) is decreasing in |ν| past this point
        let chi = self.prefactor_k * (d + self.gamma_b) / (d * d - floor);
        Some(chi * (w_s.abs() + m) * self.cell_length / (2.0 * self.constants.c))
    }

    /// Sup of the attenuation exponent `χ″ωL/(2c)` over `|ν| ≥ m`, or `None`
    /// when `m` is still inside the Autler–Townes structure.
    pub fn absorption_bound_beyond(&self, m: f64, w_s: f64) -> Option<f64> {
        let detuning = (self.omega_ac - w_s).abs();
        let d = m - detuning;
        let floor = self.gamma_c * self.gamma_b + self.omega_c_rabi * self.omega_c_rabi;
        if d <= 0.0 || d * d <= 3.0 * floor {
            return None;
        }
        // χ″ = K[Δ²γ_c + γ_b(γ_cγ_b + Ω²)]/|D|² with |D| ≥ Δ² − γ_cγ_b − Ω²;
        // times ω it still falls off like 1/|Δ| past this point
        let d2 = d * d;
        let chi = self.prefactor_k * (d2 * self.gamma_c + self.gamma_b * floor) / (d2 - floor).powi(2);
        Some(chi * (w_s.abs() + m) * self.cell_length / (2.0 * self.constants.c))
    }
}

/// `χ = χ′ + iχ″`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Susceptibility {
    pub chi_real: f64,
    pub chi_imag: f64,
}

impl Susceptibility {
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.chi_real, self.chi_imag)
    }
}

impl From<Complex64> for Susceptibility {
    fn from(z: Complex64) -> Self {
        Self {
            chi_real: z.re,
            chi_imag: z.im,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transmission {
    pub magnitude: f64,
    pub phase: f64,
}

impl Transmission {
    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

/// `H/ħ` in the basis `{|a⟩, |c⟩, |b⟩}` from raw couplings.
pub fn hamiltonian_entries(
    omega_p_rabi: Complex64,
    omega_c_rabi: Complex64,
    delta: f64,
    gamma_c: f64,
    gamma_b: f64,
) -> [[Complex64; 3]; 3] {
    let zero = Complex64::new(0.0, 0.0);
    [
        [zero, omega_p_rabi.conj(), zero],
        [omega_p_rabi, Complex64::new(delta, -gamma_c), omega_c_rabi.conj()],
        [zero, omega_c_rabi, Complex64::new(delta, -gamma_b)],
    ]
}

/// `H/ħ` for the given medium, with a real coupling Rabi frequency.
pub fn hamiltonian(omega_p_rabi: Complex64, delta: f64, medium: &MediumParams) -> [[Complex64; 3]; 3] {
    hamiltonian_entries(
        omega_p_rabi,
        Complex64::new(medium.omega_c_rabi, 0.0),
        delta,
        medium.gamma_c,
        medium.gamma_b,
    )
}

/// EIT eigenvalue `ζ/ħ = −|Ω_p|²(Δ − iγ_b)/[(Δ − iγ_c)(Δ − iγ_b) − |Ω_c|²]`.
pub fn eigenvalue_zeta(omega_p_rabi: Complex64, delta: f64, medium: &MediumParams) -> Result<Complex64, MediumError> {
    let d = medium.checked_denominator(delta)?;
    Ok(-Complex64::new(delta, -medium.gamma_b) * omega_p_rabi.norm_sqr() / d)
}

pub fn susceptibility(delta: f64, medium: &MediumParams) -> Result<Susceptibility, MediumError> {
    let d = medium.checked_denominator(delta)?;
    Ok((Complex64::new(delta, -medium.gamma_b) * medium.prefactor_k / d).into())
}

/// Transmission through the cell for a signal photon at `W_s + ν`.
pub fn transmission(nu: f64, w_s: f64, medium: &MediumParams) -> Result<Transmission, MediumError> {
    let omega = w_s + nu;
    let chi = susceptibility(medium.omega_ac - omega, medium)?;
    Ok(transmission_factor(chi.to_complex(), omega * medium.cell_length / medium.constants.c))
}

/// `exp(iχ·ωL/(2c))` split into modulus and phase, given `ωL/c`.
fn transmission_factor(chi: Complex64, omega_l_over_c: f64) -> Transmission {
    let k = 0.5 * omega_l_over_c;
    Transmission {
        magnitude: (-chi.im * k).exp(),
        phase: chi.re * k,
    }
}

/// Both routes to the induced polarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarizationCheck {
    pub closed_form: Complex64,
    pub finite_difference: Complex64,
    pub relative_discrepancy: f64,
}

/// Induced polarization from `P = ε₀χE` and from the derivative of the EIT
/// eigenvalue with respect to `Ω_p*`.
///
/// With `K = N|μ|²/(ħε₀)` and `Ω_p = μE/ħ`, the derivative route reads
/// `P = −ε₀K(E/Ω_p)·∂(ζ/ħ)/∂Ω_p*`. The Wirtinger derivative is taken by
/// central differences along the real and imaginary axes at three step sizes.
pub fn polarization_check(
    omega_p_rabi: Complex64,
    delta: f64,
    medium: &MediumParams,
    field_amplitude: f64,
) -> Result<PolarizationCheck, MediumError> {
    require("field_amplitude_E", field_amplitude, true, "must be finite")?;
    if let Some(mu) = medium.dipole_mu {
        let implied = mu * field_amplitude / medium.constants.hbar;
        let given = omega_p_rabi.norm();
        if (given - implied).abs() > PREFACTOR_CONSISTENCY * implied.abs().max(given) {
            return Err(MediumError::InvalidParameter {
                name: "omega_p_rabi",
                value: given,
                reason: "must equal dipole_mu·E/hbar",
            });
        }
    }
    let chi = susceptibility(delta, medium)?.to_complex();
    let closed_form = chi * (medium.constants.epsilon0 * field_amplitude);
    if omega_p_rabi.norm() == 0.0 {
        let zero = Complex64::new(0.0, 0.0);
        return Ok(PolarizationCheck {
            closed_form,
            finite_difference: zero,
            relative_discrepancy: 0.0,
        });
    }

    let zeta = |w: Complex64| eigenvalue_zeta(w, delta, medium);
    let wirtinger = |h: f64| -> Result<Complex64, MediumError> {
        let dx = (zeta(omega_p_rabi + h)? - zeta(omega_p_rabi - h)?) / (2.0 * h);
        let ih = Complex64::new(0.0, h);
        let dy = (zeta(omega_p_rabi + ih)? - zeta(omega_p_rabi - ih)?) / (2.0 * h);
        Ok((dx + Complex64::i() * dy) * 0.5)
    };
    let h = 1e-3 * omega_p_rabi.norm();
    let g1 = wirtinger(h)?;
    let g2 = wirtinger(h / 2.0)?;
    let g4 = wirtinger(h / 4.0)?;
    let d1 = (g1 - g2).norm();
    let d2 = (g2 - g4).norm();
    // quadratic convergence, or already at the rounding floor
    let floor = 1e-9 * g4.norm();
    if !(d2 <= floor || (d1 > 0.0 && d2 <= d1 / 3.0)) {
        return Err(MediumError::FiniteDifference { d1, d2 });
    }

    let scale = -medium.constants.epsilon0 * medium.prefactor_k * field_amplitude;
    let finite_difference = g4 / omega_p_rabi * scale;
    let norm = closed_form.norm().max(finite_difference.norm());
    let relative_discrepancy = if norm == 0.0 {
        0.0
    } else {
        (closed_form - finite_difference).norm() / norm
    };
    Ok(PolarizationCheck {
        closed_form,
        finite_difference,
        relative_discrepancy,
    })
}

/// `∂χ′/∂ω_probe` at `Δ = 0`, per unit `K`.
fn dispersion_slope_per_k(omega_c: f64, gamma_c: f64, gamma_b: f64) -> f64 {
    let o2 = omega_c * omega_c;
    (o2 - gamma_b * gamma_b) / (o2 + gamma_c * gamma_b).powi(2)
}

/// Group velocity `c/(1 + (ω_p/2)·∂χ′/∂ω_probe)` at the two-photon resonance.
pub fn group_velocity(medium: &MediumParams, omega_p: f64) -> f64 {
    let slope = medium.prefactor_k * dispersion_slope_per_k(medium.omega_c_rabi, medium.gamma_c, medium.gamma_b);
    medium.constants.c / (1.0 + 0.5 * omega_p * slope)
}

/// Prefactor `K` that yields the group velocity `v_g`.
pub fn prefactor_for_group_velocity(
    v_g: f64,
    omega_c_rabi: f64,
    omega_p: f64,
    gamma_c: f64,
    gamma_b: f64,
) -> Result<f64, MediumError> {
    let c = PhysicalConstants::CODATA.c;
    require("v_g", v_g, v_g > 0.0 && v_g <= c, "must lie in (0, c]")?;
    require("omega_p", omega_p, omega_p > 0.0, "must be positive")?;
    let slope = dispersion_slope_per_k(omega_c_rabi, gamma_c, gamma_b);
    require("gamma_b", gamma_b, slope > 0.0, "must be below omega_c_rabi")?;
    Ok(2.0 * (c / v_g - 1.0) / (omega_p * slope))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlowLightSummary {
    pub v_g: f64,
    pub tau_d: f64,
    /// FWHM of `|T(ν)|²`; `+∞` when the cell never absorbs half the light.
    pub delta_omega_tr: f64,
    pub phi_d_prime_at_0: f64,
}

fn power_transmission(medium: &MediumParams, nu: f64, w_s: f64) -> f64 {
    medium.transmission_complex(nu, w_s).norm_sqr()
}

/// Offset `|ν|` on one side (`sign = ±1`) where `|T|²` first drops to 1/2.
fn half_power_edge(medium: &MediumParams, w_s: f64, sign: f64) -> f64 {
    let p = |x: f64| power_transmission(medium, sign * x, w_s) - 0.5;
    let o = medium.omega_c_rabi;
    // the Autler–Townes peaks sit near |Δ| = Ω_c, so march finely through them;
    // very narrow peaks absorb over a band much wider than γ_c, hence the floor
    let linear_end = 2.0 * (o + (medium.omega_ac - w_s).abs());
    let step = (medium.gamma_c.min(o) / 4.0).max(1e-5 * linear_end);
    let far_end = 1e6 * linear_end;

    let mut lo = 0.0;
    let mut hi = f64::NAN;
    let mut x = 0.0;
    while x < far_end {
        let next = if x < linear_end { x + step } else { x * 1.5 };
        if p(next) <= 0.0 {
            hi = next;
            break;
        }
        lo = next;
        x = next;
    }
    if hi.is_nan() {
        return f64::INFINITY;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Full width at half maximum of `|T(ν)|²` about `ν = 0`.
pub fn transparency_width(medium: &MediumParams, w_s: f64) -> Result<f64, MediumError> {
    let peak = power_transmission(medium, 0.0, w_s);
    if peak < 0.5 {
        return Err(MediumError::WidthUndefined { peak });
    }
    Ok(half_power_edge(medium, w_s, 1.0) + half_power_edge(medium, w_s, -1.0))
}

/// Slow-light figures for a signal carrier `W_s`.
pub fn slow_light_summary(medium: &MediumParams, w_s: f64) -> Result<SlowLightSummary, MediumError> {
    let c = medium.constants.c;
    let l = medium.cell_length;
    let v_g = group_velocity(medium, w_s);
    let tau_d = l / v_g - l / c;
    let delta_omega_tr = transparency_width(medium, w_s)?;

    let phi_d = |nu: f64| medium.chi(medium.omega_ac - w_s - nu).re * w_s * l / (2.0 * c);
    let h = 1e-4 * medium.omega_c_rabi.min(medium.gamma_c);
    let phi_d_prime_at_0 = (phi_d(h) - phi_d(-h)) / (2.0 * h);

    Ok(SlowLightSummary {
        v_g,
        tau_d,
        delta_omega_tr,
        phi_d_prime_at_0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationTargets {
    pub v_g: f64,
    pub delta_omega_tr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationKnowns {
    pub omega_c_rabi: f64,
    pub omega_p: f64,
    pub cell_length: f64,
    pub gamma_b: f64,
}

/// Resonant medium (`ω_ac = ω_p`) whose group velocity and window width hit
/// the targets.
///
/// `K` follows from `v_g` in closed form once `γ_c` is fixed; `γ_c` is then
/// found by bisection in `ln γ_c`, using that the window narrows as `γ_c`
/// grows.
pub fn calibrate(targets: CalibrationTargets, knowns: CalibrationKnowns) -> Result<MediumParams, MediumError> {
    let c = PhysicalConstants::CODATA.c;
    require("v_g", targets.v_g, targets.v_g > 0.0 && targets.v_g < c, "must lie in (0, c)")?;
    require(
        "delta_omega_tr",
        targets.delta_omega_tr,
        targets.delta_omega_tr > 0.0,
        "must be positive",
    )?;

    let build = |gamma_c: f64| -> Result<MediumParams, MediumError> {
        let k = prefactor_for_group_velocity(targets.v_g, knowns.omega_c_rabi, knowns.omega_p, gamma_c, knowns.gamma_b)?;
        MediumParams::new(
            k,
            knowns.gamma_b,
            gamma_c,
            knowns.omega_c_rabi,
            knowns.omega_p,
            knowns.cell_length,
        )
    };
    // width minus target, with opaque cells counted as zero width
    let excess = |gamma_c: f64| -> Result<f64, MediumError> {
        let m = build(gamma_c)?;
        match transparency_width(&m, knowns.omega_p) {
            Ok(w) => Ok(w - targets.delta_omega_tr),
            Err(MediumError::WidthUndefined { .. }) => Ok(-targets.delta_omega_tr),
            Err(e) => Err(e),
        }
    };

    let (lo0, hi0) = GAMMA_C_BRACKET;
    let no_root = MediumError::NoRoot {
        target: targets.delta_omega_tr,
        lo: lo0,
        hi: hi0,
    };
    // The width is not monotone over the whole bracket: once γ_c dwarfs Ω_c
    // the cell stops absorbing half the light and the width diverges again.
    // Take the first crossing from below, which is the EIT branch.
    let ln_lo = lo0.max(knowns.gamma_b * (1.0 + 1e-12)).ln();
    let ln_hi = hi0.ln();
    let n = 40;
    let mut bracket = None;
    let mut prev = (ln_lo, excess(ln_lo.exp())?);
    for i in 1..=n {
        let x = ln_lo + (ln_hi - ln_lo) * i as f64 / n as f64;
        let fx = excess(x.exp())?;
        if prev.1 > 0.0 && fx <= 0.0 {
            bracket = Some((prev.0, x));
            break;
        }
        prev = (x, fx);
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Err(no_root);
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid.exp())? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    build((0.5 * (lo + hi)).exp())
}
