//! Figure presets. Each is a plain config; copies live in `presets/*.conf`.

use crate::config::RawConfig;

pub const NAMES: &[&str] = &["fig3a", "fig3b", "fig5a", "fig5b", "fig6"];

/// `2√5×10⁹` rad/s, the coupling Rabi frequency of every EIT preset.
pub const OMEGA_C: &str = "4.472135954999579e9";

const CALIBRATED_RB87: &[(&str, &str)] = &[
    ("target_v_g", "1.064e7"),
    ("target_delta_omega_tr", "5.527e9"),
    ("omega_c_rabi", OMEGA_C),
    ("L", "1e-1"),
    ("gamma_b", "0"),
];

pub fn preset(name: &str) -> Option<RawConfig> {
    let (key, specific): (&'static str, &[(&str, &str)]) = match name {
        "fig3a" => (
            "fig3a",
            &[
                ("observable", "singles"),
                ("Dl", "3e-12"),
                ("min", "-6e12"),
                ("max", "6e12"),
                ("steps", "601"),
                ("normalization", "raw"),
            ],
        ),
        "fig3b" => (
            "fig3b",
            &[
                ("observable", "singles"),
                ("Dl", "3e-12"),
                ("min", "-2e10"),
                ("max", "2e10"),
                ("steps", "2001"),
                ("normalization", "raw"),
            ],
        ),
        "fig5a" => (
            "fig5a",
            &[
                ("observable", "baseline"),
                ("Dl", "3e-12"),
                ("min", "-3e-12"),
                ("max", "6e-12"),
                ("steps", "201"),
                ("normalization", "plateau"),
            ],
        ),
        "fig5b" => (
            "fig5b",
            &[
                ("observable", "coincidence"),
                ("Dl", "3e-12"),
                ("filter_half_width", OMEGA_C),
                ("min", "-3e-8"),
                ("max", "3e-8"),
                ("steps", "601"),
                ("normalization", "plateau"),
            ],
        ),
        "fig6" => (
            "fig6",
            &[
                ("observable", "coincidence"),
                ("Dl", "3e-12"),
                ("detuning", "1e8"),
                ("filter_half_width", OMEGA_C),
                ("min", "-3e-8"),
                ("max", "3e-8"),
                ("steps", "601"),
                ("normalization", "plateau"),
            ],
        ),
        _ => return None,
    };
    let mut pairs: Vec<(&str, &str)> = specific.to_vec();
    if name != "fig3a" && name != "fig5a" {
        pairs.extend_from_slice(CALIBRATED_RB87);
    }
    Some(RawConfig::from_pairs(key, &pairs))
}
