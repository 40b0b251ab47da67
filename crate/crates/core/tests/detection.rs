//! Rates and amplitudes against analytic and independently written oracles.

use eitspdc_core::detection::*;
use eitspdc_core::medium::*;
use eitspdc_core::quadrature::{self, special, QuadratureOptions};
use eitspdc_core::spdc::{sinc, unfiltered_spectrum, SpdcParams, DEFAULT_DL};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn source() -> SpdcParams {
    SpdcParams::degenerate(DEFAULT_DL, RB87_D1_CARRIER).unwrap()
}

fn opts() -> QuadratureOptions {
    QuadratureOptions::for_scale(source().rate_scale())
}

fn omega_c() -> f64 {
    2.0 * 5f64.sqrt() * 1e9
}

fn calibrated() -> MediumParams {
    static M: OnceLock<MediumParams> = OnceLock::new();
    *M.get_or_init(|| {
        calibrate(
            CalibrationTargets {
                v_g: 1.064e7,
                delta_omega_tr: 5.527e9,
            },
            CalibrationKnowns {
                omega_c_rabi: omega_c(),
                omega_p: RB87_D1_CARRIER,
                cell_length: 0.1,
                gamma_b: 0.0,
            },
        )
        .unwrap()
    })
}

fn triangle(delta_tau: f64, dl: f64) -> f64 {
    1.0 - (1.0 - (dl - 2.0 * delta_tau).abs() / dl).max(0.0)
}

#[test]
fn coincidence_without_cell_is_the_baseline() {
    let s = source();
    let dl = s.dl();
    let tight = QuadratureOptions {
        rel_tol: 1e-12,
        ..opts()
    };
    let scale = s.rate_scale();
    for tau in linear_grid(-dl, 2.0 * dl, 51).unwrap() {
        let c = coincidence_rate(tau, &SignalPath::vacuum(), &s, &tight).unwrap();
        let b = baseline_rate(tau, &s, &tight).unwrap();
        // relative to the plateau; at the notch both are zero
        assert!((c.value - b.value).abs() <= 1e-9 * scale, "δτ = {tau:e}: {} vs {}", c.value, b.value);
    }
}

#[test]
fn baseline_matches_triangle_and_is_symmetric() {
    let s = source();
    let dl = s.dl();
    let grid = linear_grid(-dl, 2.0 * dl, 201).unwrap();
    let r = scan(Observable::Baseline, &grid, &SignalPath::vacuum(), &s, &opts(), Normalization::Raw).unwrap();
    for p in &r.points {
        let want = triangle(p.abscissa, dl);
        assert!((p.value / s.rate_scale() - want).abs() <= 1e-6, "δτ = {:e}", p.abscissa);
        assert!(p.value >= -1e-9 * s.rate_scale());
    }
    for u in [0.1, 0.3, 0.5, 0.9, 1.3].map(|f| f * dl) {
        let a = baseline_rate(0.5 * dl + u, &s, &opts()).unwrap().value;
        let b = baseline_rate(0.5 * dl - u, &s, &opts()).unwrap().value;
        assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()));
    }
    let d = dip_metrics(&r, None, &s, &DipOptions::default()).unwrap();
    assert!((d.dip_center - 0.5 * dl).abs() <= dl * 3.0 / 200.0);
    assert!((d.dip_depth - 1.0).abs() <= 1e-6);
    assert_eq!(d.oscillation_count, 0);
}

#[test]
fn vacuum_coincidence_examples() {
    let s = source();
    let dl = s.dl();
    let p = SignalPath::vacuum();
    let r = coincidence_rate(0.5 * dl, &p, &s, &opts()).unwrap();
    assert!(r.value.abs() <= 1e-9 * s.rate_scale());
    let r = coincidence_rate(0.25 * dl, &p, &s, &opts()).unwrap();
    assert!((r.value - PI / dl).abs() <= 1e-7 * PI / dl);
}

/// Degenerate resonant form: `∫ sinc²(νDl/2) e^{−χ″W_sL/c} {1 − cos[ν(Dl−2δτ) − 2φ_d]} dν`.
fn printed_form_integrand(delta_tau: f64, m: MediumParams, s: SpdcParams) -> impl Fn(f64) -> f64 {
    let k = s.w_s() * m.cell_length() / PhysicalConstants::CODATA.c();
    move |nu: f64| {
        let chi = susceptibility(m.omega_ac() - s.w_s() - nu, &m).unwrap();
        let phi_d = 0.5 * chi.chi_real * k;
        let x = 0.5 * nu * s.dl();
        sinc(x).powi(2) * (-chi.chi_imag * k).exp() * (1.0 - (nu * (s.dl() - 2.0 * delta_tau) - 2.0 * phi_d).cos())
    }
}

fn dense_hints(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil() as usize;
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

#[test]
fn general_form_matches_printed_degenerate_form_with_filter() {
    let s = source();
    let m = calibrated();
    let b = omega_c();
    let path = SignalPath::through(m).with_filter(BandPass::new(b).unwrap());
    for tau in [-20e-9, -9.7e-9, -3e-9, 0.0, 1.5e-12, 12e-9] {
        let got = coincidence_rate(tau, &path, &s, &opts()).unwrap().value;
        let slope = 2.0 * tau.abs() + s.dl() + 4.0 * 9.1e-9;
        let hints = dense_hints(-b, b, PI / (8.0 * slope));
        let want = quadrature::integrate(printed_form_integrand(tau, m, s), -b, b, &opts(), &hints).unwrap();
        assert!(want.converged);
        assert!((got - want.value).abs() <= 1e-6 * want.value, "δτ = {tau:e}: {got} vs {}", want.value);
    }
}

#[test]
fn general_form_matches_printed_degenerate_form_over_whole_line() {
    let s = source();
    let m = calibrated();
    let path = SignalPath::through(m);
    let a = 0.5 * s.dl();
    for tau in [0.0, 1e-12] {
        let got = coincidence_rate(tau, &path, &s, &opts()).unwrap().value;
        let reach = 400.0 * s.envelope_halfwidth();
        let mut hints = dense_hints(-5e10, 5e10, PI / (8.0 * 4.0 * 9.1e-9));
        hints.extend(dense_hints(-reach, reach, PI / (4.0 * s.dl())));
        let inner = quadrature::integrate(printed_form_integrand(tau, m, s), -reach, reach, &opts(), &hints).unwrap();
        assert!(inner.converged);
        // beyond the reach the cell is transparent to ~10⁻⁸
        let b = s.dl() - 2.0 * tau;
        let tail = special::sinc2_tail(a, reach) - special::sinc2_cos_tail(a, b, reach);
        let want = inner.value + tail;
        assert!((got - want).abs() <= 1e-6 * want, "δτ = {tau:e}: {got} vs {want}");
    }
}

#[test]
fn coincidence_rates_are_not_negative() {
    let s = source();
    let m = calibrated();
    let path = SignalPath::through(m).with_filter(BandPass::new(omega_c()).unwrap());
    let grid = linear_grid(-30e-9, 30e-9, 41).unwrap();
    let r = scan(Observable::Coincidence, &grid, &path, &s, &opts(), Normalization::Raw).unwrap();
    let plateau = r.points[0].value;
    assert!(r.points.iter().all(|p| p.value >= -1e-9 * plateau));
}

#[test]
fn biphoton_rectangle_without_cell() {
    let s = source();
    let dl = s.dl();
    let plateau = 2.0 * PI / dl;
    let p = SignalPath::vacuum();
    let inside = biphoton_amplitude(0.0, 0.5 * dl, &p, &s, &opts()).unwrap();
    assert!((inside.value.norm() - plateau).abs() <= 1e-6 * plateau, "{}", inside.value);
    let outside = biphoton_amplitude(dl, 0.0, &p, &s, &opts()).unwrap();
    assert!(outside.value.norm() < 1e-3 * plateau, "{}", outside.value);
    let outside = biphoton_amplitude(0.0, 2.0 * dl, &p, &s, &opts()).unwrap();
    assert!(outside.value.norm() < 1e-3 * plateau);
    // only the difference of the arrival times matters
    let shifted = biphoton_amplitude(1e-9, 1e-9 + 0.5 * dl, &p, &s, &opts()).unwrap();
    assert!((shifted.value - inside.value).norm() <= 1e-9 * plateau);
}

#[test]
fn biphoton_is_delayed_by_the_cell() {
    let s = source();
    let m = calibrated();
    let window = slow_light_summary(&m, s.w_s()).unwrap();
    let path = SignalPath::through(m).with_filter(BandPass::new(omega_c()).unwrap());
    let grid = linear_grid(-5e-9, 25e-9, 121).unwrap();
    let amp = |t: f64| biphoton_amplitude(t, 0.0, &path, &s, &opts()).unwrap().value.norm();
    let peak = grid.iter().map(|&t| amp(t)).fold(0.0, f64::max);
    assert!(amp(window.tau_d) > 0.1 * peak);
    assert!(amp(-2.0 * s.dl()) < 0.1 * peak);
}

#[test]
fn biphoton_matches_direct_fourier_sum() {
    // filtered, so a plain midpoint sum over the band is an independent oracle
    let s = source();
    let m = calibrated();
    let b = omega_c();
    let path = SignalPath::through(m).with_filter(BandPass::new(b).unwrap());
    let t = 7e-9;
    let n = 400_000;
    let h = 2.0 * b / n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let nu = -b + (i as f64 + 0.5) * h;
        let phi = Complex64::from_polar(sinc(0.5 * nu * s.dl()), -0.5 * nu * s.dl());
        sum += phi * m.transmission_complex(nu, s.w_s()) * Complex64::from_polar(1.0, -nu * t);
    }
    sum *= h;
    let got = biphoton_amplitude(t, 0.0, &path, &s, &opts()).unwrap().value;
    assert!((got - sum).norm() <= 1e-5 * sum.norm(), "{got} vs {sum}");
}

#[test]
fn singles_spectrum_examples_and_dips() {
    let s = source();
    let m = calibrated();
    let p = SignalPath::through(m);
    assert!((singles_spectrum(0.0, &p, &s) - 1.0).abs() < 1e-15);
    let vac = SignalPath::vacuum();
    for nu in [-3e12, -1e11, 0.0, 4e9, 2e12] {
        assert_eq!(singles_spectrum(nu, &vac, &s), unfiltered_spectrum(nu, &s));
    }
    let o = omega_c();
    let grid = linear_grid(-4.0 * o, 4.0 * o, 8001).unwrap();
    for values in [
        grid.iter().map(|&nu| singles_spectrum(nu, &p, &s)).collect::<Vec<_>>(),
        grid.iter().map(|&nu| singles_log_spectrum(nu, &p, &s)).collect(),
    ] {
        let minima = local_minima(&grid, &values);
        assert_eq!(minima.len(), 2, "{minima:?}");
        assert!((minima[0] + o).abs() <= 0.05 * o);
        assert!((minima[1] - o).abs() <= 0.05 * o);
    }
}

#[test]
fn singles_rate_against_dense_grid() {
    let s = source();
    let m = calibrated();
    let p = SignalPath::through(m);
    let r = singles_rate(&p, &s, &opts()).unwrap();
    let full = 2.0 * PI / s.dl();
    assert!(r.value < full);

    // removed weight ∫S₀(1 − |T|²) by composite Simpson on two nested grids
    let removed = |nu: f64| unfiltered_spectrum(nu, &s) * (1.0 - m.transmission_complex(nu, s.w_s()).norm_sqr());
    let simpson = |lo: f64, hi: f64, n: usize| {
        let h = (hi - lo) / n as f64;
        let mut acc = removed(lo) + removed(hi);
        for i in 1..n {
            acc += removed(lo + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let inner = 2e10;
    let outer = 5e12;
    let weight = simpson(-inner, inner, 400_000) + simpson(inner, outer, 200_000) + simpson(-outer, -inner, 200_000);
    let want = full - weight;
    assert!((r.value - want).abs() <= 1e-6 * full, "{} vs {want}", r.value);
}

#[test]
fn scans_do_not_depend_on_thread_count() {
    let s = source();
    let m = calibrated();
    let path = SignalPath::through(m).with_filter(BandPass::new(omega_c()).unwrap());
    let grid = linear_grid(-15e-9, 5e-9, 24).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| scan(Observable::Coincidence, &grid, &path, &s, &opts(), Normalization::plateau()).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one, four);
    for (a, b) in one.points.iter().zip(&four.points) {
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}

#[test]
fn scan_rejects_bad_grids_and_names_failing_point() {
    let s = source();
    let p = SignalPath::vacuum();
    assert!(scan(Observable::Baseline, &[0.0], &p, &s, &opts(), Normalization::Raw).is_err());
    assert!(scan(Observable::Baseline, &[1.0, 0.0], &p, &s, &opts(), Normalization::Raw).is_err());
    assert!(scan(Observable::Susceptibility, &[0.0, 1.0], &p, &s, &opts(), Normalization::Raw).is_err());

    let starved = QuadratureOptions {
        max_subdivisions: 20,
        ..opts()
    };
    let path = SignalPath::through(calibrated()).with_filter(BandPass::new(omega_c()).unwrap());
    match scan(Observable::Coincidence, &[-2e-8, 0.0], &path, &s, &starved, Normalization::Raw) {
        Err(DetectionError::NonConvergence { abscissa_name, .. }) => assert_eq!(abscissa_name, "delta_tau"),
        other => panic!("expected non-convergence, got {other:?}"),
    }
}
