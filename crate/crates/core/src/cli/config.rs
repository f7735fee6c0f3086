use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::imex::DEFAULT_BLOWUP;
use crate::modeq::{AlphaHat, AlphaRule, AlphaTilde};

use super::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "splitstab",
    version,
    about = "Stability analysis and simulation of IMEX flux splittings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bisect the largest stable CFL number for each ε.
    Scan(CommonArgs),
    /// Run the IMEX solver and write the final profile plus its L2 history.
    Simulate(SimulateArgs),
    /// Eigenvalues of the frequency matrices for k = 1..kmax.
    Analyze(CommonArgs),
    /// Spectral radius of the one-step amplification symbol over θ ∈ [0, π].
    Symbol(SymbolArgs),
    /// List the available splittings.
    Catalog,
}

/// Flags shared by all analysis commands. Values are kept as text so that
/// flags and config-file entries go through the same validation.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Splitting name (see `catalog`).
    #[arg(long)]
    pub splitting: Option<String>,
    /// Comma-separated ε values.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "eps_grid")]
    pub eps: Option<String>,
    /// Log-spaced ε grid `lo:hi:n`.
    #[arg(long)]
    pub eps_grid: Option<String>,
    /// Prototype speed parameter.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub dx: Option<String>,
    /// Advective CFL number a·Δt/Δx.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "dt")]
    pub nu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<String>,
    /// Implicit numerical viscosity: `zero` or `stiff-eig` (max |eig Ã|).
    #[arg(long)]
    pub alpha_tilde_rule: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub kmax: Option<String>,
    /// Final time.
    #[arg(long = "T", id = "t_final", allow_hyphen_values = true)]
    pub t_final: Option<String>,
    /// Output CSV path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plain-text `key=value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Initial data: `reference` (cos 4πx in the slow field) or `zero`.
    #[arg(long)]
    pub init: Option<String>,
    /// L2 growth factor that aborts the run.
    #[arg(long, allow_hyphen_values = true)]
    pub blowup: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SymbolArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of θ samples in [0, π].
    #[arg(long, allow_hyphen_values = true)]
    pub ntheta: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Scan,
    Simulate,
    Analyze,
    Symbol,
}

const COMMON_KEYS: [&str; 12] = [
    "splitting",
    "eps",
    "eps-grid",
    "a",
    "dx",
    "nu",
    "dt",
    "alpha-tilde-rule",
    "kmax",
    "T",
    "out",
    "config",
];
const EXTRA_KEYS: [&str; 3] = ["init", "blowup", "ntheta"];

pub const DEFAULT_SPLITTING: &str = "prototype";
pub const DEFAULT_A: f64 = 2.0;
pub const DEFAULT_EPS_GRID: (f64, f64, usize) = (1.0, 1e-6, 13);
pub const SCAN_DX: f64 = 1e-2;
pub const SCAN_KMAX: i64 = 64;
pub const ANALYZE_KMAX: i64 = 8;
/// Reference experiment: Δx = 1/200, Δt = Δx/10, T = 0.1.
pub const REFERENCE_DX: f64 = 1.0 / 200.0;
pub const REFERENCE_DT_OVER_DX: f64 = 0.1;
pub const REFERENCE_T: f64 = 0.1;
pub const DEFAULT_NTHETA: usize = 129;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Nu(f64),
    Dt(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitData {
    Reference,
    Zero,
}

/// Fully validated settings of one command invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub splitting: String,
    pub eps: Vec<f64>,
    /// False when `eps` is the built-in default grid.
    pub eps_given: bool,
    pub a: f64,
    pub dx: f64,
    /// `None` only for `scan`, where it bounds the bisection instead.
    pub step: Option<StepSize>,
    pub alpha: AlphaRule,
    pub t_final: f64,
    pub k_max: i64,
    pub out: Option<PathBuf>,
    pub ntheta: usize,
    pub init: InitData,
    pub blowup: f64,
}

impl RunConfig {
    /// Δt for advective speed `speed`.
    pub fn dt(&self, speed: f64) -> Option<f64> {
        self.step.map(|s| match s {
            StepSize::Nu(nu) => nu * self.dx / speed,
            StepSize::Dt(dt) => dt,
        })
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid("config", format!("line {}: expected key=value", n + 1)))?;
        let key = key.trim();
        let key = key.strip_prefix("--").unwrap_or(key);
        if key == "config" || !(COMMON_KEYS.contains(&key) || EXTRA_KEYS.contains(&key)) {
            return Err(invalid(
                "config",
                format!("line {}: unknown key `{key}`", n + 1),
            ));
        }
        if map
            .insert(key.to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(invalid(
                "config",
                format!("line {}: duplicate key `{key}`", n + 1),
            ));
        }
    }
    Ok(map)
}

fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid("config", format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn parse_f64(field: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| invalid(field, format!("`{s}` is not a number")))
}

fn positive(field: &str, s: &str) -> Result<f64, CliError> {
    let v = parse_f64(field, s)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(
            field,
            format!("must be positive and finite, got {s}"),
        ))
    }
}

/// `n` log-spaced points from `first` to `last`, both included.
pub fn log_grid(first: f64, last: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![first];
    }
    let (l0, l1) = (first.log10(), last.log10());
    (0..n)
        .map(|i| {
            if i == 0 {
                first
            } else if i == n - 1 {
                last
            } else {
                10f64.powf(l0 + (l1 - l0) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

fn parse_eps_list(s: &str) -> Result<Vec<f64>, CliError> {
    let eps = s
        .split(',')
        .map(|t| positive("eps", t))
        .collect::<Result<Vec<_>, _>>()?;
    if eps.is_empty() {
        return Err(invalid("eps", "empty list"));
    }
    Ok(eps)
}

fn parse_eps_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(invalid("eps-grid", format!("expected lo:hi:n, got `{s}`")));
    }
    let lo = positive("eps-grid", parts[0])?;
    let hi = positive("eps-grid", parts[1])?;
    let n: usize = parts[2].trim().parse().map_err(|_| {
        invalid(
            "eps-grid",
            format!("point count `{}` is not an integer", parts[2]),
        )
    })?;
    if n == 0 {
        return Err(invalid("eps-grid", "point count must be at least 1"));
    }
    Ok(log_grid(lo, hi, n))
}

fn common_to_map(c: &CommonArgs) -> BTreeMap<String, String> {
    let pairs: [(&str, Option<String>); 11] = [
        ("splitting", c.splitting.clone()),
        ("eps", c.eps.clone()),
        ("eps-grid", c.eps_grid.clone()),
        ("a", c.a.clone()),
        ("dx", c.dx.clone()),
        ("nu", c.nu.clone()),
        ("dt", c.dt.clone()),
        ("alpha-tilde-rule", c.alpha_tilde_rule.clone()),
        ("kmax", c.kmax.clone()),
        ("T", c.t_final.clone()),
        ("out", c.out.as_ref().map(|p| p.display().to_string())),
    ];
    pairs
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
}

/// Layers flag values over the config file and validates the result.
pub fn resolve(
    command: CommandKind,
    common: &CommonArgs,
    extra: &[(&str, Option<String>)],
) -> Result<RunConfig, CliError> {
    let mut flags = common_to_map(common);
    for (k, v) in extra {
        if let Some(v) = v {
            flags.insert(k.to_string(), v.clone());
        }
    }
    let mut merged = match &common.config {
        Some(path) => load_config_file(path)?,
        None => BTreeMap::new(),
    };
    // A flag for one member of an exclusive pair replaces both file entries.
    for pair in [["eps", "eps-grid"], ["nu", "dt"]] {
        if pair.iter().any(|k| flags.contains_key(*k)) {
            for k in pair {
                merged.remove(k);
            }
        }
    }
    merged.extend(flags);
    build(command, &merged)
}

fn build(command: CommandKind, m: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    let get = |k: &str| m.get(k).map(String::as_str);
    let scan = command == CommandKind::Scan;

    let splitting = get("splitting").unwrap_or(DEFAULT_SPLITTING).to_string();

    let (eps, eps_given) = match (get("eps"), get("eps-grid")) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "eps",
                "`eps` and `eps-grid` are mutually exclusive",
            ))
        }
        (Some(s), None) => (parse_eps_list(s)?, true),
        (None, Some(s)) => (parse_eps_grid(s)?, true),
        (None, None) => {
            let (lo, hi, n) = DEFAULT_EPS_GRID;
            (log_grid(lo, hi, n), false)
        }
    };

    let a = get("a")
        .map(|s| positive("a", s))
        .transpose()?
        .unwrap_or(DEFAULT_A);
    let dx = match get("dx") {
        Some(s) => positive("dx", s)?,
        None if scan => SCAN_DX,
        None => REFERENCE_DX,
    };
    let step = match (get("nu"), get("dt")) {
        (Some(_), Some(_)) => return Err(invalid("nu", "`nu` and `dt` are mutually exclusive")),
        (Some(s), None) => Some(StepSize::Nu(positive("nu", s)?)),
        (None, Some(s)) => Some(StepSize::Dt(positive("dt", s)?)),
        (None, None) if scan => None,
        (None, None) => Some(StepSize::Dt(REFERENCE_DT_OVER_DX * dx)),
    };
    let tilde = match get("alpha-tilde-rule") {
        None | Some("zero") => AlphaTilde::Zero,
        Some("stiff-eig") => AlphaTilde::StiffEig,
        Some(other) => {
            return Err(invalid(
                "alpha-tilde-rule",
                format!("expected `zero` or `stiff-eig`, got `{other}`"),
            ))
        }
    };
    let t_final = get("T")
        .map(|s| positive("T", s))
        .transpose()?
        .unwrap_or(REFERENCE_T);
    let k_max = match get("kmax") {
        Some(s) => {
            let k: i64 = s
                .trim()
                .parse()
                .map_err(|_| invalid("kmax", format!("`{s}` is not an integer")))?;
            if k < 1 {
                return Err(invalid("kmax", format!("must be at least 1, got {k}")));
            }
            k
        }
        None if scan => SCAN_KMAX,
        None => ANALYZE_KMAX,
    };
    let ntheta = match get("ntheta") {
        Some(s) => {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| invalid("ntheta", format!("`{s}` is not a non-negative integer")))?;
            if n < 2 {
                return Err(invalid("ntheta", format!("must be at least 2, got {n}")));
            }
            n
        }
        None => DEFAULT_NTHETA,
    };
    let init = match get("init") {
        None | Some("reference") => InitData::Reference,
        Some("zero") => InitData::Zero,
        Some(other) => {
            return Err(invalid(
                "init",
                format!("expected `reference` or `zero`, got `{other}`"),
            ))
        }
    };
    let blowup = get("blowup")
        .map(|s| positive("blowup", s))
        .transpose()?
        .unwrap_or(DEFAULT_BLOWUP);

    Ok(RunConfig {
        command,
        splitting,
        eps,
        eps_given,
        a,
        dx,
        step,
        alpha: AlphaRule {
            hat: AlphaHat::MaxEig,
            tilde,
        },
        t_final,
        k_max,
        out: get("out").map(PathBuf::from),
        ntheta,
        init,
        blowup,
    })
}
