//! Flat `key = value` run configuration.
//!
//! Parsing happens in two steps: [`RawConfig`] collects the lines (and any
//! command-line overrides), [`RawConfig::resolve`] validates them, applies
//! defaults and runs the medium calibration if targets were given. Unknown and
//! duplicate keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use eitspdc_core::detection::{BandPass, Normalization, Observable, SignalPath};
use eitspdc_core::medium::{
    calibrate, group_velocity, CalibrationKnowns, CalibrationTargets, MediumError, MediumParams,
    PhysicalConstants, RB87_D1_CARRIER,
};
use eitspdc_core::quadrature::{QuadratureOptions, DEFAULT_MAX_SUBDIVISIONS};
use eitspdc_core::spdc::{SpdcParams, DEFAULT_DL};
use thiserror::Error;

/// Every key the parser accepts.
pub const KNOWN_KEYS: &[&str] = &[
    "observable",
    "Dl",
    "W_s",
    "W_i",
    "detuning",
    "omega_ac",
    "prefactor_K",
    "target_v_g",
    "target_delta_omega_tr",
    "omega_p",
    "gamma_b",
    "gamma_c",
    "omega_c_rabi",
    "L",
    "density_N",
    "dipole_mu",
    "filter_half_width",
    "min",
    "max",
    "steps",
    "normalization",
    "plateau_fraction",
    "rel_tol",
    "abs_tol",
    "max_subdivisions",
    "out",
    "format",
];

const MEDIUM_KEYS: &[&str] = &[
    "prefactor_K",
    "target_v_g",
    "target_delta_omega_tr",
    "omega_p",
    "gamma_b",
    "gamma_c",
    "omega_c_rabi",
    "L",
    "density_N",
    "dipole_mu",
    "omega_ac",
    "detuning",
];

/// Where a value came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag(&'static str),
    Preset(&'static str),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag(name) => write!(f, "flag {name}"),
            Origin::Preset(name) => write!(f, "preset {name}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` already set on line {first}")]
    Duplicate { line: usize, first: usize, key: String },
    #[error("{origin}: {key} = {value}: {reason}")]
    InvalidValue {
        origin: Origin,
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Inconsistent(String),
    #[error("medium parameters rejected: {0}")]
    Medium(#[from] MediumError),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Unvalidated key/value pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: n,
                    text: line.to_string(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line: n,
                    text: line.to_string(),
                });
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line: n,
                    key: key.to_string(),
                });
            }
            if let Some(prev) = raw.entries.get(key) {
                let Origin::Line(first) = prev.origin else { unreachable!() };
                return Err(ConfigError::Duplicate {
                    line: n,
                    first,
                    key: key.to_string(),
                });
            }
            raw.entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    origin: Origin::Line(n),
                },
            );
        }
        Ok(raw)
    }

    pub fn from_pairs(name: &'static str, pairs: &[(&str, &str)]) -> Self {
        let mut raw = RawConfig::default();
        for (k, v) in pairs {
            debug_assert!(KNOWN_KEYS.contains(k), "preset key {k}");
            raw.entries.insert(
                k.to_string(),
                Entry {
                    value: v.to_string(),
                    origin: Origin::Preset(name),
                },
            );
        }
        raw
    }

    /// Sets `key`, replacing any value from the file.
    pub fn set(&mut self, key: &str, value: impl Into<String>, flag: &'static str) {
        debug_assert!(KNOWN_KEYS.contains(&key));
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.into(),
                origin: Origin::Flag(flag),
            },
        );
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        let e = &self.entries[key];
        ConfigError::InvalidValue {
            origin: e.origin.clone(),
            key: key.to_string(),
            value: e.value.clone(),
            reason: reason.into(),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(self.invalid(key, "not a finite number")),
        }
    }

    fn positive(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.float(key)? {
            Some(v) if v <= 0.0 => Err(self.invalid(key, "must be positive")),
            v => Ok(v),
        }
    }

    fn non_negative(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.float(key)? {
            Some(v) if v < 0.0 => Err(self.invalid(key, "must be non-negative")),
            v => Ok(v),
        }
    }

    fn integer(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value
            .parse::<usize>()
            .map(Some)
            .map_err(|_| self.invalid(key, "not a non-negative integer"))
    }

    /// Validates, applies defaults and calibrates.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let observable = match self.get("observable") {
            None => None,
            Some("susceptibility") => Some(Observable::Susceptibility),
            Some("singles") => Some(Observable::SinglesSpectrum),
            Some("coincidence") => Some(Observable::Coincidence),
            Some("baseline") => Some(Observable::Baseline),
            Some(_) => {
                return Err(self.invalid(
                    "observable",
                    "expected susceptibility, singles, coincidence or baseline",
                ))
            }
        };

        let dl = self.positive("Dl")?.unwrap_or(DEFAULT_DL);
        let w_s = self.positive("W_s")?.unwrap_or(RB87_D1_CARRIER);
        let w_i = self.positive("W_i")?.unwrap_or(w_s);
        let spdc = SpdcParams::new(dl, w_s, w_i).map_err(|e| ConfigError::Inconsistent(e.to_string()))?;

        let medium = self.resolve_medium(w_s)?;

        let filter = match self.positive("filter_half_width")? {
            Some(b) => Some(BandPass::new(b).map_err(|e| ConfigError::Inconsistent(e.to_string()))?),
            None => None,
        };
        let path = SignalPath {
            medium: medium.as_ref().map(|m| m.params),
            filter,
        };

        let normalization = match self.get("normalization") {
            None | Some("raw") => {
                if self.has("plateau_fraction") {
                    return Err(self.invalid("plateau_fraction", "only meaningful with normalization = plateau"));
                }
                Normalization::Raw
            }
            Some("plateau") | Some("plateau=1") => {
                let fraction = self.positive("plateau_fraction")?.unwrap_or(Normalization::DEFAULT_PLATEAU_FRACTION);
                if fraction > 0.5 {
                    return Err(self.invalid("plateau_fraction", "must not exceed 0.5"));
                }
                Normalization::Plateau { fraction }
            }
            Some("peak") | Some("peak=1") => {
                if self.has("plateau_fraction") {
                    return Err(self.invalid("plateau_fraction", "only meaningful with normalization = plateau"));
                }
                Normalization::Peak
            }
            Some(_) => return Err(self.invalid("normalization", "expected raw, plateau or peak")),
        };

        let mut quadrature = QuadratureOptions::for_scale(spdc.rate_scale());
        if let Some(r) = self.positive("rel_tol")? {
            quadrature.rel_tol = r;
        }
        if let Some(a) = self.positive("abs_tol")? {
            quadrature.abs_tol = a;
        }
        quadrature.max_subdivisions = match self.integer("max_subdivisions")? {
            Some(0) => return Err(self.invalid("max_subdivisions", "must be at least 1")),
            Some(n) => n,
            None => DEFAULT_MAX_SUBDIVISIONS,
        };

        let steps = match self.integer("steps")? {
            Some(n) if n < 2 => return Err(self.invalid("steps", "need at least 2 points")),
            Some(n) => n,
            None => DEFAULT_STEPS,
        };
        let grid = match observable {
            Some(obs) => {
                let (dmin, dmax) = default_range(obs, &path, &spdc);
                let min = self.float("min")?.unwrap_or(dmin);
                let max = self.float("max")?.unwrap_or(dmax);
                if min >= max {
                    return Err(ConfigError::Inconsistent(format!("min = {min:e} must be below max = {max:e}")));
                }
                Some(GridSpec { min, max, steps })
            }
            None => None,
        };
        if observable == Some(Observable::Susceptibility) && medium.is_none() {
            return Err(ConfigError::Inconsistent(
                "observable = susceptibility needs a medium (prefactor_K or calibration targets)".into(),
            ));
        }
        if observable == Some(Observable::Baseline) && (medium.is_some() || filter.is_some()) {
            return Err(ConfigError::Inconsistent(
                "observable = baseline is the cell-free rate; drop the medium and filter keys".into(),
            ));
        }
        if observable == Some(Observable::Baseline) && !spdc.is_degenerate() {
            return Err(ConfigError::Inconsistent("observable = baseline needs W_i = W_s".into()));
        }

        let format = match self.get("format") {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(_) => return Err(self.invalid("format", "expected csv or json")),
        };
        let out = self.get("out").map(PathBuf::from);

        Ok(RunConfig {
            observable,
            spdc,
            medium,
            filter,
            grid,
            normalization,
            quadrature,
            format,
            out,
        })
    }

    fn resolve_medium(&self, w_s: f64) -> Result<Option<ResolvedMedium>, ConfigError> {
        if !MEDIUM_KEYS.iter().any(|k| self.has(k)) {
            return Ok(None);
        }
        let direct = self.has("prefactor_K");
        let targets = self.has("target_v_g") || self.has("target_delta_omega_tr");
        if direct == targets {
            return Err(ConfigError::Inconsistent(
                "medium needs exactly one of prefactor_K or the calibration targets (target_v_g, target_delta_omega_tr)"
                    .into(),
            ));
        }
        if self.has("omega_ac") && self.has("detuning") {
            return Err(ConfigError::Inconsistent("give omega_ac or detuning, not both".into()));
        }
        let need = |key: &'static str| -> Result<f64, ConfigError> {
            self.positive(key)?
                .ok_or_else(|| ConfigError::Inconsistent(format!("medium needs `{key}`")))
        };
        let omega_c = need("omega_c_rabi")?;
        let length = need("L")?;
        let gamma_b = self.non_negative("gamma_b")?.unwrap_or(0.0);
        let omega_ac = match (self.positive("omega_ac")?, self.float("detuning")?) {
            (Some(w), _) => w,
            // detuning is W_s − ω_ac
            (None, Some(d)) => w_s - d,
            (None, None) => w_s,
        };

        let (params, calibration) = if direct {
            if self.has("omega_p") {
                return Err(self.invalid("omega_p", "only used for calibration"));
            }
            let k = self.non_negative("prefactor_K")?.expect("checked above");
            let gamma_c = need("gamma_c")?;
            (MediumParams::new(k, gamma_b, gamma_c, omega_c, omega_ac, length)?, None)
        } else {
            if self.has("gamma_c") {
                return Err(self.invalid("gamma_c", "is solved for by calibration; remove it or give prefactor_K"));
            }
            let targets = CalibrationTargets {
                v_g: need("target_v_g")?,
                delta_omega_tr: need("target_delta_omega_tr")?,
            };
            let omega_p = self.positive("omega_p")?.unwrap_or(w_s);
            let knowns = CalibrationKnowns {
                omega_c_rabi: omega_c,
                omega_p,
                cell_length: length,
                gamma_b,
            };
            let resonant = calibrate(targets, knowns)?;
            let m = MediumParams::new(
                resonant.prefactor_k(),
                gamma_b,
                resonant.gamma_c(),
                omega_c,
                omega_ac,
                length,
            )?;
            (m, Some(Calibration { targets, omega_p }))
        };
        let params = match (self.positive("density_N")?, self.positive("dipole_mu")?) {
            (Some(n), Some(mu)) => params.with_density_and_dipole(n, mu)?,
            (None, None) => params,
            _ => {
                return Err(ConfigError::Inconsistent(
                    "density_N and dipole_mu must be given together".into(),
                ))
            }
        };
        Ok(Some(ResolvedMedium { params, calibration }))
    }
}

/// Default number of grid points.
pub const DEFAULT_STEPS: usize = 201;

fn default_range(observable: Observable, path: &SignalPath, spdc: &SpdcParams) -> (f64, f64) {
    let dl = spdc.dl();
    match (observable, &path.medium) {
        (Observable::Baseline, _) | (Observable::Coincidence, None) => (-dl, 2.0 * dl),
        (Observable::Coincidence, Some(m)) => {
            let c = PhysicalConstants::CODATA.c();
            let v_g = group_velocity(m, spdc.w_s());
            let tau_d = m.cell_length() / v_g - m.cell_length() / c;
            let half = (4.0 * tau_d).max(2.0 * dl);
            (-half, half)
        }
        (Observable::SinglesSpectrum, None) => {
            let w = 3.0 * spdc.envelope_halfwidth();
            (-w, w)
        }
        (Observable::SinglesSpectrum | Observable::Susceptibility, Some(m)) => {
            let w = 4.0 * m.omega_c_rabi();
            (-w, w)
        }
        (Observable::Susceptibility, None) => (-1.0, 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

/// Calibration inputs behind a resolved medium, kept for the output header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub targets: CalibrationTargets,
    pub omega_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedMedium {
    pub params: MediumParams,
    pub calibration: Option<Calibration>,
}

/// Fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub observable: Option<Observable>,
    pub spdc: SpdcParams,
    pub medium: Option<ResolvedMedium>,
    pub filter: Option<BandPass>,
    pub grid: Option<GridSpec>,
    pub normalization: Normalization,
    pub quadrature: QuadratureOptions,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn path(&self) -> SignalPath {
        SignalPath {
            medium: self.medium.map(|m| m.params),
            filter: self.filter,
        }
    }

    /// Resolved parameters as config lines, in a fixed order. Feeding them
    /// back through [`RawConfig::parse`] reproduces this configuration, minus
    /// the output destination.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let f = |v: f64| format!("{v:e}");
        let mut out = Vec::new();
        if let Some(obs) = self.observable {
            out.push(("observable", obs.name().to_string()));
        }
        out.push(("Dl", f(self.spdc.dl())));
        out.push(("W_s", f(self.spdc.w_s())));
        out.push(("W_i", f(self.spdc.w_i())));
        if let Some(m) = &self.medium {
            let p = &m.params;
            out.push(("prefactor_K", f(p.prefactor_k())));
            out.push(("gamma_b", f(p.gamma_b())));
            out.push(("gamma_c", f(p.gamma_c())));
            out.push(("omega_c_rabi", f(p.omega_c_rabi())));
            out.push(("omega_ac", f(p.omega_ac())));
            out.push(("L", f(p.cell_length())));
            if let (Some(n), Some(mu)) = (p.density_n(), p.dipole_mu()) {
                out.push(("density_N", f(n)));
                out.push(("dipole_mu", f(mu)));
            }
        }
        if let Some(b) = &self.filter {
            out.push(("filter_half_width", f(b.half_width())));
        }
        if let Some(g) = &self.grid {
            out.push(("min", f(g.min)));
            out.push(("max", f(g.max)));
            out.push(("steps", g.steps.to_string()));
        }
        match self.normalization {
            Normalization::Raw => out.push(("normalization", "raw".into())),
            Normalization::Peak => out.push(("normalization", "peak".into())),
            Normalization::Plateau { fraction } => {
                out.push(("normalization", "plateau".into()));
                out.push(("plateau_fraction", f(fraction)));
            }
        }
        out.push(("rel_tol", f(self.quadrature.rel_tol)));
        out.push(("abs_tol", f(self.quadrature.abs_tol)));
        out.push(("max_subdivisions", self.quadrature.max_subdivisions.to_string()));
        out
    }
}

/// Reads and resolves a config file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RawConfig::parse(text)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_baseline_config() {
        let c = parse_config("observable = baseline\nDl = 3e-12\n").unwrap();
        assert_eq!(c.observable, Some(Observable::Baseline));
        assert_eq!(c.spdc.dl(), 3e-12);
        assert_eq!(c.spdc.w_s(), RB87_D1_CARRIER);
        assert!(c.spdc.is_degenerate());
        assert!(c.medium.is_none());
        let g = c.grid.unwrap();
        assert_eq!((g.min, g.max, g.steps), (-3e-12, 6e-12, DEFAULT_STEPS));
        assert_eq!(c.normalization, Normalization::Raw);
        assert_eq!(c.quadrature.rel_tol, 1e-7);
    }

    #[test]
    fn negative_gamma_c_names_the_key() {
        let text = "prefactor_K = 1e5\ngamma_c = -1\nomega_c_rabi = 1e9\nL = 0.1\n";
        let err = parse_config(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gamma_c"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let err = parse_config("Dl = 3e-12\ngama_c = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 2, .. }));
        let err = parse_config("Dl = 3e-12\nDl = 4e-12\n").unwrap_err();
        assert!(matches!(err, ConfigError::Duplicate { line: 2, first: 1, .. }));
        let err = parse_config("just words\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = parse_config("# header\n\nDl = 2e-12  # trailing\n").unwrap();
        assert_eq!(c.spdc.dl(), 2e-12);
    }

    #[test]
    fn exactly_one_medium_strength() {
        let both = "prefactor_K = 1\ngamma_c = 1e7\ntarget_v_g = 1e7\ntarget_delta_omega_tr = 1e9\nomega_c_rabi = 1e9\nL = 0.1\n";
        assert!(matches!(parse_config(both), Err(ConfigError::Inconsistent(_))));
        let neither = "gamma_b = 0\nomega_c_rabi = 1e9\nL = 0.1\n";
        assert!(matches!(parse_config(neither), Err(ConfigError::Inconsistent(_))));
    }

    #[test]
    fn detuning_sets_the_transition() {
        let text = "prefactor_K = 1e5\ngamma_c = 1e7\nomega_c_rabi = 1e9\nL = 0.1\nW_s = 2e15\ndetuning = 1e8\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.medium.unwrap().params.omega_ac(), 2e15 - 1e8);
    }

    #[test]
    fn echo_round_trips() {
        let text = "observable = coincidence\nprefactor_K = 4.5e5\ngamma_c = 3.8e7\nomega_c_rabi = 4.47e9\nL = 0.1\n\
                    filter_half_width = 4.47e9\nnormalization = plateau\nsteps = 11\n";
        let c = parse_config(text).unwrap();
        let echoed: String = c.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let again = parse_config(&echoed).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn flags_override_file_values() {
        let mut raw = RawConfig::parse("observable = baseline\nsteps = 5\n").unwrap();
        raw.set("steps", "x", "--steps");
        let err = raw.resolve().unwrap_err();
        assert!(err.to_string().contains("flag --steps"), "{err}");
        raw.set("steps", "7", "--steps");
        assert_eq!(raw.resolve().unwrap().grid.unwrap().steps, 7);
    }

    #[test]
    fn baseline_rejects_medium() {
        let text = "observable = baseline\nprefactor_K = 1e5\ngamma_c = 1e7\nomega_c_rabi = 1e9\nL = 0.1\n";
        assert!(matches!(parse_config(text), Err(ConfigError::Inconsistent(_))));
    }
}
