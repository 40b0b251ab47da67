use eitspdc_core::quadrature::{self, EnvelopeScales, QuadratureOptions, TailEstimate};
use eitspdc_core::spdc::{phase_matching, unfiltered_spectrum, SpdcParams, DEFAULT_DL};
use proptest::prelude::*;
use std::f64::consts::PI;

fn source() -> SpdcParams {
    SpdcParams::degenerate(DEFAULT_DL, 2.369e15).unwrap()
}

#[test]
fn phase_matching_modulus_is_the_spectrum() {
    let s = source();
    let n = 10_000;
    for i in 0..n {
        let x = -50.0 + 100.0 * i as f64 / (n - 1) as f64;
        let nu = x / s.dl();
        let diff = (phase_matching(x).norm_sqr() - unfiltered_spectrum(nu, &s)).abs();
        assert!(diff <= 1e-12, "x = {x}: {diff:e}");
    }
}

#[test]
fn spectrum_integrates_to_rate_scale() {
    let s = source();
    let a = 0.5 * s.dl();
    let opts = QuadratureOptions::for_scale(s.rate_scale());
    // reference tail: ∫_{|ν|>m} sin²(aν)/(aν)² ≤ 2/(a²m), computed here by
    // direct long-range quadrature rather than the library's closed form
    let tail = |m: f64| {
        let far = quadrature::integrate(
            |nu: f64| unfiltered_spectrum(nu, &s),
            m,
            4000.0 * m,
            &QuadratureOptions { abs_tol: 1e-9 * s.rate_scale(), ..opts },
            &[],
        )
        .unwrap();
        TailEstimate {
            value: 2.0 * (far.value + 1.0 / (a * a * 4000.0 * m) * 0.5),
            bound: 2.0 * (far.abs_error_estimate + 0.5 / (a * a * 4000.0 * m)),
        }
    };
    let r = quadrature::infinite_domain_wrap(
        |nu: f64| unfiltered_spectrum(nu, &s),
        &EnvelopeScales::new(s.envelope_halfwidth()),
        tail,
        &opts,
        &[],
    )
    .unwrap();
    let exact = 2.0 * PI / s.dl();
    assert!((r.value - exact).abs() <= 1e-8 * exact, "{} vs {exact}", r.value);
}

proptest! {
    #[test]
    fn phase_matching_is_bounded_and_conjugate_symmetric(x in -1e4f64..1e4) {
        let p = phase_matching(x);
        prop_assert!(p.norm() <= 1.0 + 1e-15);
        prop_assert!((phase_matching(-x) - p.conj()).norm() <= 1e-15);
    }

    #[test]
    fn phase_matching_zeros_at_multiples_of_two_pi(k in 1i32..200) {
        let x = 2.0 * PI * k as f64;
        prop_assert!(phase_matching(x).norm() <= 1e-14);
    }
}
