//! Property checks for the three-level medium against independent oracles.

use approx::assert_relative_eq;
use eitspdc_core::medium::{
    eigenvalue_zeta, hamiltonian, polarization_check, susceptibility, transmission, MediumParams, PhysicalConstants,
};
use nalgebra::{Complex, Matrix3};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_medium(rng: &mut ChaCha8Rng) -> MediumParams {
    let gamma_c = 10f64.powf(rng.random_range(5.0..9.0));
    let gamma_b = if rng.random_bool(0.5) {
        0.0
    } else {
        gamma_c * rng.random_range(0.0..0.5)
    };
    let omega_c = 10f64.powf(rng.random_range(7.0..10.5));
    let k = 10f64.powf(rng.random_range(2.0..7.0));
    MediumParams::new(k, gamma_b, gamma_c, omega_c, 2.369e15, 0.1).unwrap()
}

#[test]
fn absorption_is_never_negative() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100_000 {
        let m = random_medium(&mut rng);
        let delta = rng.random_range(-1.0..1.0) * 10f64.powf(rng.random_range(0.0..12.0));
        let chi = susceptibility(delta, &m).unwrap();
        assert!(chi.chi_imag >= 0.0, "χ″ = {} at Δ = {delta} for {m:?}", chi.chi_imag);
    }
}

#[test]
fn resonant_transparency_and_small_gamma_b() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let m = random_medium(&mut rng);
        let clean = MediumParams::new(m.prefactor_k(), 0.0, m.gamma_c(), m.omega_c_rabi(), m.omega_ac(), 0.1).unwrap();
        let chi = susceptibility(0.0, &clean).unwrap();
        assert_eq!((chi.chi_real, chi.chi_imag), (0.0, 0.0));

        let chi_b = susceptibility(0.0, &m).unwrap().to_complex().norm();
        let o2 = m.omega_c_rabi().powi(2);
        assert!(chi_b <= m.prefactor_k() * m.gamma_b() / o2 * (1.0 + 1e-12));
    }
}

#[test]
fn resonant_symmetry_on_log_grid() {
    let m = MediumParams::new(4.6e5, 0.0, 3.8e7, 4.47e9, 2.369e15, 0.1).unwrap();
    for k in 0..400 {
        let nu = 10f64.powf(3.0 + 9.0 * k as f64 / 399.0);
        let p = susceptibility(-nu, &m).unwrap();
        let n = susceptibility(nu, &m).unwrap();
        assert_relative_eq!(p.chi_imag, n.chi_imag, max_relative = 1e-12);
        assert_relative_eq!(p.chi_real, -n.chi_real, max_relative = 1e-12);
    }
}

#[test]
fn autler_townes_peaks_at_plus_minus_omega_c() {
    let gamma_c = 1e7;
    let omega_c = 1e9;
    let m = MediumParams::new(1e5, 0.0, gamma_c, omega_c, 2.369e15, 0.1).unwrap();
    for sign in [-1.0, 1.0] {
        // dense scan over the half-line, argmax of χ″
        let n = 200_001;
        let (mut best, mut at) = (f64::NEG_INFINITY, 0.0);
        for i in 0..n {
            let delta = sign * 3.0 * omega_c * i as f64 / (n - 1) as f64;
            let im = susceptibility(delta, &m).unwrap().chi_imag;
            if im > best {
                best = im;
                at = delta;
            }
        }
        assert!((at - sign * omega_c).abs() <= 2.0 * gamma_c, "peak at {at}");
    }
}

fn smallest_eigenvalue(h: [[Complex64; 3]; 3]) -> Complex64 {
    let m = Matrix3::from_fn(|i, j| Complex::new(h[i][j].re, h[i][j].im));
    let eig = m.schur().eigenvalues().expect("complex Schur form is triangular");
    eig.iter()
        .copied()
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
        .map(|z: Complex<f64>| Complex64::new(z.re, z.im))
        .unwrap()
}

#[test]
fn eigenvalue_gap_scales_as_fourth_power() {
    let m = MediumParams::new(1.0, 0.0, 1.0, 1.0, 1e6, 1.0).unwrap();
    let delta = 1.0;
    let mut p = 0.1 * m.omega_c_rabi();
    let mut gaps = Vec::new();
    for _ in 0..5 {
        let omega_p = Complex64::new(p, 0.0);
        let exact = smallest_eigenvalue(hamiltonian(omega_p, delta, &m));
        let formula = eigenvalue_zeta(omega_p, delta, &m).unwrap();
        gaps.push((p, (exact - formula).norm()));
        p /= 2.0;
    }
    for w in gaps.windows(2) {
        let slope = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
        assert!((slope - 4.0).abs() <= 0.2, "slope {slope} from {gaps:?}");
    }
}

#[test]
fn zeta_agrees_with_small_eigenvalue_unit_example() {
    let m = MediumParams::new(1.0, 0.0, 1.0, 1.0, 1e6, 1.0).unwrap();
    let omega_p = Complex64::new(0.1, 0.0);
    let exact = smallest_eigenvalue(hamiltonian(omega_p, 1.0, &m));
    let formula = eigenvalue_zeta(omega_p, 1.0, &m).unwrap();
    assert!((exact - formula).norm() < 10.0 * 0.1f64.powi(4));
}

#[test]
fn polarization_finite_difference_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps0 = PhysicalConstants::CODATA.epsilon0();
    for _ in 0..100 {
        let m = random_medium(&mut rng);
        let delta = rng.random_range(-3.0..3.0) * m.omega_c_rabi();
        let omega_p = Complex64::from_polar(
            m.omega_c_rabi() * 10f64.powf(rng.random_range(-4.0..-1.0)),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let e = rng.random_range(0.1..100.0);
        let p = polarization_check(omega_p, delta, &m, e).unwrap();
        assert!(p.relative_discrepancy < 1e-6, "{p:?}");
        let chi = susceptibility(delta, &m).unwrap().to_complex();
        assert!((p.closed_form - chi * eps0 * e).norm() <= 1e-15 * p.closed_form.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn zeta_is_minus_rabi_squared_chi_over_k(
        k in 1e2f64..1e7,
        gamma_c in 1e5f64..1e9,
        b_frac in 0.0f64..0.9,
        omega_c in 1e7f64..1e10,
        delta in -1e11f64..1e11,
        p_re in -1e8f64..1e8,
        p_im in -1e8f64..1e8,
    ) {
        let m = MediumParams::new(k, b_frac * gamma_c, gamma_c, omega_c, 2.369e15, 0.1).unwrap();
        let omega_p = Complex64::new(p_re, p_im);
        let zeta = eigenvalue_zeta(omega_p, delta, &m).unwrap();
        let chi = susceptibility(delta, &m).unwrap().to_complex();
        let want = -chi * omega_p.norm_sqr() / k;
        prop_assert!((zeta - want).norm() <= 1e-12 * want.norm().max(1e-300));
    }

    #[test]
    fn transmission_is_passive(
        k in 0.0f64..1e7,
        gamma_c in 1e5f64..1e9,
        b_frac in 0.0f64..0.9,
        omega_c in 1e7f64..1e10,
        nu in -1e12f64..1e12,
        detuning in -1e10f64..1e10,
    ) {
        let m = MediumParams::new(k, b_frac * gamma_c, gamma_c, omega_c, 2.369e15, 0.1).unwrap();
        let t = transmission(nu, 2.369e15 + detuning, &m).unwrap();
        prop_assert!(t.magnitude <= 1.0);
        prop_assert!((t.magnitude - m.transmission_complex(nu, 2.369e15 + detuning).norm()).abs() <= 1e-12);
    }

    #[test]
    fn resonant_phase_is_odd(nu in 1e3f64..1e12) {
        // ω L/(2c) is not even in ν, so compare χ′-phases at the fixed carrier
        let m = MediumParams::new(4.6e5, 0.0, 3.8e7, 4.47e9, 2.369e15, 0.1).unwrap();
        let w = m.omega_ac();
        let scale = |x: f64| (w + x) * m.cell_length() / (2.0 * PhysicalConstants::CODATA.c());
        let p = transmission(nu, w, &m).unwrap().phase / scale(nu);
        let n = transmission(-nu, w, &m).unwrap().phase / scale(-nu);
        prop_assert!((p + n).abs() <= 1e-10 * p.abs().max(1e-300));
    }
}
