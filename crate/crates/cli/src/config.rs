//! Run configuration from command-line flags and a flat `key = value` file.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Parser;
use sav_mhd::stepper::{Params, SchemeOrder};
use sav_mhd::StaggeredGrid;
use serde::Serialize;

/// Keys accepted both as `--key value` and as `key = value` file lines.
pub const KEYS: [&str; 14] = [
    "mode",
    "scheme",
    "n",
    "dt",
    "dt-ladder",
    "t-final",
    "nu",
    "eta",
    "alpha",
    "k",
    "seed",
    "steps",
    "output",
    "format",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Convergence,
    Decay,
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(serialize_with = "scheme_number")]
    pub scheme: SchemeOrder,
    pub n: usize,
    /// Step size of decay and simulate runs.
    pub dt: Option<f64>,
    /// Step sizes of a convergence study, largest first.
    pub dt_ladder: Vec<f64>,
    pub steps: Option<u64>,
    pub params: Params,
    pub k: f64,
    pub seed: Option<u64>,
    /// Left out of report echoes so the destination does not change the bytes.
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub format: Format,
}

fn scheme_number<S: serde::Serializer>(s: &SchemeOrder, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_u8(s.as_u8())
}

#[derive(Debug)]
pub enum ConfigError {
    /// Malformed command line; clap renders and exits.
    Flags(clap::Error),
    /// A key with an unusable value, or an unknown key.
    Usage {
        key: String,
        message: String,
    },
    ConfigFile {
        path: PathBuf,
        message: String,
    },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Flags(e) => write!(f, "{e}"),
            ConfigError::Usage { key, message } => write!(f, "invalid `{key}`: {message}"),
            ConfigError::ConfigFile { path, message } => write!(f, "config file {}: {message}", path.display()),
        }
    }
}

impl std::error::Error for ConfigError {}

fn usage(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Usage {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Runs the SAV MHD solver: convergence studies, energy-decay runs and
/// single simulations.
///
/// Every flag except `--config` may also be given as a `key = value` line in
/// the config file; flags win. Convergence rows run in parallel, capped by
/// SAV_MHD_THREADS.
#[derive(Debug, Parser)]
#[command(name = "sav-mhd", version, allow_negative_numbers = true)]
struct Flags {
    /// Flat `key = value` file; `#` starts a comment line
    #[arg(long)]
    config: Option<PathBuf>,
    /// convergence | decay | simulate [default: simulate]
    #[arg(long)]
    mode: Option<String>,
    /// 1 (backward Euler) or 2 (BDF2) [default: 1]
    #[arg(long)]
    scheme: Option<String>,
    /// Cells per axis [default: 256 for convergence, 64 otherwise]
    #[arg(long)]
    n: Option<String>,
    /// Step size for decay and simulate runs [default: 0.01]
    #[arg(long)]
    dt: Option<String>,
    /// Halving ladder `a:b` for convergence runs, e.g. 1/2:1/64 [default: 1/2:1/64]
    #[arg(long = "dt-ladder")]
    dt_ladder: Option<String>,
    /// Final time T, also the SAV time scale [default: 1]
    #[arg(long = "t-final")]
    t_final: Option<String>,
    /// Viscosity [default: 0.01]
    #[arg(long)]
    nu: Option<String>,
    /// Magnetic diffusivity [default: 0.01]
    #[arg(long)]
    eta: Option<String>,
    /// Coupling constant [default: 1]
    #[arg(long)]
    alpha: Option<String>,
    /// Amplitude of the initial data [default: 0.01]
    #[arg(long)]
    k: Option<String>,
    /// Random solenoidal initial data instead of the manufactured solution
    #[arg(long)]
    seed: Option<String>,
    /// Number of steps [default: 20 for decay, T/dt for simulate]
    #[arg(long)]
    steps: Option<String>,
    /// Output file [default: standard output]
    #[arg(long)]
    output: Option<String>,
    /// csv | json [default: csv]
    #[arg(long)]
    format: Option<String>,
}

impl Flags {
    fn values(&self) -> [(&'static str, &Option<String>); 14] {
        [
            ("mode", &self.mode),
            ("scheme", &self.scheme),
            ("n", &self.n),
            ("dt", &self.dt),
            ("dt-ladder", &self.dt_ladder),
            ("t-final", &self.t_final),
            ("nu", &self.nu),
            ("eta", &self.eta),
            ("alpha", &self.alpha),
            ("k", &self.k),
            ("seed", &self.seed),
            ("steps", &self.steps),
            ("output", &self.output),
            ("format", &self.format),
        ]
    }
}

/// Parses the flat config format. Keys may use `_` in place of `-`.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(usage(&format!("line {}", lineno + 1), "expected `key = value`"));
        };
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(usage(&key, "unknown key"));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(usage(&key, "given more than once"));
        }
    }
    Ok(out)
}

/// Builds a [`RunConfig`] from `argv` (program name first), reading the file
/// named by `--config` if present.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let flags = Flags::try_parse_from(argv).map_err(ConfigError::Flags)?;
    let mut raw = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::ConfigFile {
                path: path.clone(),
                message: e.to_string(),
            })?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    for (key, value) in flags.values() {
        if let Some(v) = value {
            raw.insert(key.to_string(), v.clone());
        }
    }
    resolve(&raw)
}

/// A decimal number or a fraction `a/b`.
fn number(key: &str, text: &str) -> Result<f64, ConfigError> {
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(key, format!("`{text}` is not a number")))
    };
    let v = match text.split_once('/') {
        Some((a, b)) => parse(a)? / parse(b)?,
        None => parse(text)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(usage(key, format!("`{text}` is not finite")))
    }
}

fn positive(key: &str, text: &str) -> Result<f64, ConfigError> {
    let v = number(key, text)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(usage(key, format!("must be positive, got {text}")))
    }
}

fn integer<T: std::str::FromStr>(key: &str, text: &str) -> Result<T, ConfigError> {
    text.trim()
        .parse()
        .map_err(|_| usage(key, format!("`{text}` is not a non-negative integer")))
}

/// `a:b` is `a, a/2, a/4, …, b`; a single value is a one-row ladder.
pub fn parse_ladder(text: &str) -> Result<Vec<f64>, ConfigError> {
    const KEY: &str = "dt-ladder";
    let (a, b) = match text.split_once(':') {
        Some((a, b)) => (positive(KEY, a)?, positive(KEY, b)?),
        None => {
            let a = positive(KEY, text)?;
            (a, a)
        }
    };
    if b > a {
        return Err(usage(KEY, "ladder must decrease: a:b needs a ≥ b"));
    }
    let mut ladder = vec![a];
    while *ladder.last().unwrap() > b * (1.0 + 1e-12) {
        let next = ladder.last().unwrap() / 2.0;
        if next < b * (1.0 - 1e-12) {
            return Err(usage(KEY, format!("{b} is not {a} halved a whole number of times")));
        }
        ladder.push(next);
    }
    Ok(ladder)
}

fn steps_to(key: &str, t_final: f64, dt: f64) -> Result<u64, ConfigError> {
    let m = (t_final / dt).round();
    if m < 1.0 || (m * dt - t_final).abs() > 1e-12 * t_final {
        return Err(usage(
            key,
            format!("T = {t_final} is not a whole number of steps of {dt}"),
        ));
    }
    Ok(m as u64)
}

fn resolve(raw: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    let get = |key: &str| raw.get(key).map(String::as_str);
    let mode = match get("mode").unwrap_or("simulate") {
        "convergence" => Mode::Convergence,
        "decay" => Mode::Decay,
        "simulate" => Mode::Simulate,
        other => {
            return Err(usage(
                "mode",
                format!("`{other}` is not convergence, decay or simulate"),
            ))
        }
    };
    let scheme = match get("scheme").unwrap_or("1").trim() {
        "1" => SchemeOrder::First,
        "2" => SchemeOrder::Second,
        other => return Err(usage("scheme", format!("`{other}` is not 1 or 2"))),
    };
    let n = match get("n") {
        Some(v) => integer::<usize>("n", v)?,
        None if mode == Mode::Convergence => 256,
        None => 64,
    };
    if StaggeredGrid::new(n).is_err() {
        return Err(usage(
            "n",
            format!("need at least {} cells, got {n}", StaggeredGrid::MIN_CELLS),
        ));
    }
    let opt_positive = |key: &str, default: f64| get(key).map_or(Ok(default), |v| positive(key, v));
    let params = Params {
        nu: opt_positive("nu", 0.01)?,
        eta: opt_positive("eta", 0.01)?,
        alpha: opt_positive("alpha", 1.0)?,
        t_final: opt_positive("t-final", 1.0)?,
    };
    let k = opt_positive("k", 0.01)?;
    let seed = get("seed").map(|v| integer::<u64>("seed", v)).transpose()?;
    let steps = get("steps").map(|v| integer::<u64>("steps", v)).transpose()?;
    if steps == Some(0) {
        return Err(usage("steps", "must be at least 1"));
    }
    let format = match get("format").unwrap_or("csv") {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => return Err(usage("format", format!("`{other}` is not csv or json"))),
    };
    let output = get("output").map(PathBuf::from);

    let (dt, dt_ladder) = match mode {
        Mode::Convergence => {
            for key in ["dt", "steps", "seed"] {
                if raw.contains_key(key) {
                    return Err(usage(key, "not used by convergence runs"));
                }
            }
            let ladder = parse_ladder(get("dt-ladder").unwrap_or("1/2:1/64"))?;
            for &dt in &ladder {
                steps_to("dt-ladder", params.t_final, dt)?;
            }
            (None, ladder)
        }
        Mode::Decay | Mode::Simulate => {
            if raw.contains_key("dt-ladder") {
                return Err(usage("dt-ladder", "only used by convergence runs"));
            }
            let dt = opt_positive("dt", 0.01)?;
            if mode == Mode::Simulate && steps.is_none() {
                steps_to("dt", params.t_final, dt)?;
            }
            (Some(dt), Vec::new())
        }
    };

    Ok(RunConfig {
        mode,
        scheme,
        n,
        dt,
        dt_ladder,
        steps,
        params,
        k,
        seed,
        output,
        format,
    })
}
