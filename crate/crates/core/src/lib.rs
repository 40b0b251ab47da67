//! Two-photon interference with an EIT vapor cell in the signal arm.
//!
//! The crate is split along the physical chain:
//!
//! - [`medium`]: the Λ-type three-level medium (Hamiltonian, EIT eigenvalue,
//!   linear susceptibility, transmission coefficient, slow-light figures and
//!   calibration of the lumped prefactor and coherence decay rate).
//! - [`spdc`]: the collinear degenerate type-II down-conversion source
//!   (phase-matching function and unfiltered spectrum).
//! - [`quadrature`]: adaptive Gauss–Kronrod integration with breakpoint hints,
//!   oscillation-aware panel widths and analytic tails for the sinc² envelope.
//! - [`detection`]: singles spectra and rates, biphoton amplitudes,
//!   coincidence-rate scans and dip/oscillation diagnostics.
//!
//! All frequencies are angular frequencies in rad/s, all times in seconds.

pub mod detection;
pub mod medium;
pub mod quadrature;
pub mod spdc;

pub use detection::{
    BandPass, DetectionError, DipMetrics, Normalization, Observable, ScanPoint, ScanResult,
    SignalPath,
};
pub use medium::{
    MediumError, MediumParams, PhysicalConstants, SlowLightSummary, Susceptibility, Transmission,
};
pub use quadrature::{QuadratureOptions, QuadratureReport};
pub use spdc::{SpdcError, SpdcParams};
