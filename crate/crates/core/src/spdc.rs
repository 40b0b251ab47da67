//! Collinear type-II down-conversion source.
//!
//! Only the product `Dl` of the inverse group-velocity mismatch and the crystal
//! length reaches the counting rates. All slowly varying prefactors are
//! dropped, so spectra are dimensionless and rates are in arbitrary units.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Default `Dl`, in seconds.
pub const DEFAULT_DL: f64 = 3e-12;

const TAYLOR_LIMIT: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpdcError {
    #[error("invalid source parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpdcParams {
    #[serde(rename = "Dl")]
    dl: f64,
    #[serde(rename = "W_s")]
    w_s: f64,
    #[serde(rename = "W_i")]
    w_i: f64,
}

impl SpdcParams {
    /// Source with carriers `W_s`, `W_i`; the pump is `W_s + W_i` by construction.
    pub fn new(dl: f64, w_s: f64, w_i: f64) -> Result<Self, SpdcError> {
        let check = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SpdcError::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive and finite",
                })
            }
        };
        check("Dl", dl)?;
        check("W_s", w_s)?;
        check("W_i", w_i)?;
        Ok(Self { dl, w_s, w_i })
    }

    /// Degenerate source, `W_s = W_i = ω_pump/2`.
    pub fn degenerate(dl: f64, carrier: f64) -> Result<Self, SpdcError> {
        Self::new(dl, carrier, carrier)
    }

    /// Splits `(D, l)` into the product used downstream.
    pub fn from_crystal(d: f64, l: f64, w_s: f64, w_i: f64) -> Result<Self, SpdcError> {
        Self::new(d * l, w_s, w_i)
    }

    pub fn dl(&self) -> f64 {
        self.dl
    }
    pub fn w_s(&self) -> f64 {
        self.w_s
    }
    pub fn w_i(&self) -> f64 {
        self.w_i
    }
    pub fn omega_pump(&self) -> f64 {
        self.w_s + self.w_i
    }
    pub fn is_degenerate(&self) -> bool {
        self.w_s == self.w_i
    }

    /// Zero spacing of the sinc² envelope, `2π/Dl`.
    pub fn envelope_halfwidth(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.dl
    }

    /// `∫S₀(ν)dν = 2π/Dl`, the natural scale of every rate.
    pub fn rate_scale(&self) -> f64 {
        self.envelope_halfwidth()
    }
}

/// Phase-matching function `Φ(x) = (1 − e^{−ix})/(ix) = e^{−ix/2} sinc(x/2)`.
///
/// The sign of the exponent is chosen so that `Φ(0) = 1`; its Fourier
/// transform is then a rectangle on `−Dl < t₁ − t₂ < 0`.
pub fn phase_matching(x: f64) -> Complex64 {
    // the polar form has no cancellation near the origin
    Complex64::from_polar(sinc(0.5 * x), -0.5 * x)
}

/// `sin u / u` with the limit 1 at the origin.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < TAYLOR_LIMIT {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// Unfiltered spectrum `S₀(ν) = sinc²(νDl/2)`.
pub fn unfiltered_spectrum(nu: f64, params: &SpdcParams) -> f64 {
    sinc(0.5 * nu * params.dl).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn phase_matching_examples() {
        assert_eq!(phase_matching(0.0), Complex64::new(1.0, 0.0));
        assert!(phase_matching(2.0 * PI).norm() < 1e-15);
        assert!((phase_matching(PI).norm_sqr() - 4.0 / (PI * PI)).abs() < 1e-15);
        assert!((4.0 / (PI * PI) - 0.405_285).abs() < 1e-6);
    }

    #[test]
    fn taylor_branch_is_continuous() {
        let at = 2.0 * TAYLOR_LIMIT;
        let below = phase_matching(at * (1.0 - 1e-12));
        let above = phase_matching(at * (1.0 + 1e-12));
        assert!((below - above).norm() < 1e-15);
        let below = phase_matching(-at * (1.0 - 1e-12));
        let above = phase_matching(-at * (1.0 + 1e-12));
        assert!((below - above).norm() < 1e-15);
    }

    #[test]
    fn polar_form_matches_definition() {
        for x in [1e-3, 0.5, 1.0, 3.0, -2.5, 40.0] {
            let def = (Complex64::new(1.0, 0.0) - Complex64::new(0.0, -x).exp()) / Complex64::new(0.0, x);
            assert!((phase_matching(x) - def).norm() < 1e-13);
        }
    }

    #[test]
    fn spectrum_examples() {
        let p = SpdcParams::degenerate(DEFAULT_DL, 2.369e15).unwrap();
        let dl = p.dl();
        assert_eq!(unfiltered_spectrum(0.0, &p), 1.0);
        assert!(unfiltered_spectrum(2.0 * PI / dl, &p) < 1e-30);
        assert!((unfiltered_spectrum(PI / dl, &p) - 4.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(SpdcParams::new(0.0, 1.0, 1.0).is_err());
        assert!(SpdcParams::new(1e-12, -1.0, 1.0).is_err());
        let p = SpdcParams::from_crystal(1e-10, 0.03, 2.0, 3.0).unwrap();
        assert!((p.dl() - 3e-12).abs() < 1e-25);
        assert_eq!(p.omega_pump(), 5.0);
        assert!(!p.is_degenerate());
    }
}
