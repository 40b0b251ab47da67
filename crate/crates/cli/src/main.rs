use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eitspdc::config::RawConfig;
use eitspdc::run::{self, RunError};
use eitspdc::{presets, ConfigError};

/// Two-photon interference through an EIT cell.
///
/// Set EITSPDC_THREADS to cap the number of worker threads.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// χ′ and χ″ against the signal offset ν.
    Susceptibility(Common),
    /// Single-photon spectrum S(ν).
    Singles(Common),
    /// Coincidence rate against the idler delay δτ.
    Coincidence(Common),
    /// Cell-free coincidence rate.
    Baseline(Common),
    /// Group velocity, delay and window width of the configured cell, as JSON.
    Summary {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Take the medium from a figure preset instead of a file.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
    },
    /// Runs a figure preset: fig3a, fig3b, fig5a, fig5b or fig6.
    Preset {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    max: Option<String>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<String>,
}

fn load(path: &Option<PathBuf>) -> Result<RawConfig, ConfigError> {
    match path {
        None => Ok(RawConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.clone(),
                source,
            })?;
            RawConfig::parse(&text)
        }
    }
}

fn named_preset(name: &str) -> Result<RawConfig, ConfigError> {
    presets::preset(name).ok_or_else(|| {
        ConfigError::Inconsistent(format!(
            "unknown preset `{name}` (expected one of {})",
            presets::NAMES.join(", ")
        ))
    })
}

fn apply(raw: &mut RawConfig, c: &Common) {
    let flags: [(&str, &Option<String>, &'static str); 5] = [
        ("format", &c.format, "--format"),
        ("steps", &c.steps, "--steps"),
        ("min", &c.min, "--min"),
        ("max", &c.max, "--max"),
        ("rel_tol", &c.tol, "--tol"),
    ];
    for (key, value, flag) in flags {
        if let Some(v) = value {
            raw.set(key, v.clone(), flag);
        }
    }
    if let Some(p) = &c.out {
        raw.set("out", p.to_string_lossy(), "--out");
    }
}

fn scan_command(mut raw: RawConfig, observable: &str, common: &Common) -> Result<(), RunError> {
    if let Some(existing) = raw.get("observable") {
        if existing != observable {
            return Err(ConfigError::Inconsistent(format!(
                "config selects observable = {existing} but the subcommand is {observable}"
            ))
            .into());
        }
    }
    raw.set("observable", observable, "subcommand");
    apply(&mut raw, common);
    let config = raw.resolve()?;
    let result = run::execute(&config)?;
    emit(&run::render(&config, &result), config.out.as_deref())
}

fn emit(text: &str, out: Option<&std::path::Path>) -> Result<(), RunError> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) => std::fs::write(p, text).map_err(|source| RunError::Io {
            path: p.display().to_string(),
            source,
        }),
    }
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var("EITSPDC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::Inconsistent(format!("EITSPDC_THREADS = {v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::Inconsistent(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    configure_threads()?;
    match cli.command {
        Command::Susceptibility(c) => scan_command(load(&c.config)?, "susceptibility", &c),
        Command::Singles(c) => scan_command(load(&c.config)?, "singles", &c),
        Command::Coincidence(c) => scan_command(load(&c.config)?, "coincidence", &c),
        Command::Baseline(c) => scan_command(load(&c.config)?, "baseline", &c),
        Command::Preset { name, common } => {
            if common.config.is_some() {
                return Err(ConfigError::Inconsistent("preset does not take --config".into()).into());
            }
            let raw = named_preset(&name)?;
            let observable = raw.get("observable").expect("presets select an observable").to_string();
            scan_command(raw, &observable, &common)
        }
        Command::Summary { config, preset } => {
            let raw = match preset {
                Some(name) => named_preset(&name)?,
                None => load(&config)?,
            };
            let summary = run::summarize(&raw.resolve()?)?;
            emit(&run::render_summary(&summary), None)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eitspdc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
