//! Experiment configuration: TOML file, environment and flags.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file,
//! `RESET_LDP_SEED`, command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use reset_ldp_core::kernels::{KernelSpec, DEFAULT_NS, DEFAULT_TOLERANCE};
use reset_ldp_core::path::{TargetPath, TimeWindow};
use reset_ldp_core::process::DEFAULT_GRID_POINTS;
use reset_ldp_core::rare_event::{IsMode, IsOptions, Method, PhiChoice};

use crate::CliError;

pub const SEED_ENV: &str = "RESET_LDP_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Estimate,
    Rate,
    ValidateKernel,
    Converge,
    BoundCheck,
    SupLaw,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Estimate => "estimate",
            Experiment::Rate => "rate",
            Experiment::ValidateKernel => "validate-kernel",
            Experiment::Converge => "converge",
            Experiment::BoundCheck => "bound-check",
            Experiment::SupLaw => "sup-law",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "reset-ldp", version, about = "Rare-event experiments for Wiener processes with random resetting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one path and list its knots
    Simulate(Flags),
    /// Estimate tube probabilities at each T
    Estimate(Flags),
    /// Evaluate the rate functionals and the jump schedule of a path
    Rate(Flags),
    /// Check a reset kernel against the support and density conditions
    ValidateKernel(Flags),
    /// Empirical rate against T, with the predicted limit
    Converge(Flags),
    /// Compare the Poisson lower-tail bound with the exact CDF
    BoundCheck(Flags),
    /// Quantiles of the normalized running maximum
    SupLaw(Flags),
    /// Run the experiment named in the config file
    Run(Flags),
}

impl Command {
    fn split(self) -> (Option<Experiment>, Flags) {
        match self {
            Command::Simulate(f) => (Some(Experiment::Simulate), f),
            Command::Estimate(f) => (Some(Experiment::Estimate), f),
            Command::Rate(f) => (Some(Experiment::Rate), f),
            Command::ValidateKernel(f) => (Some(Experiment::ValidateKernel), f),
            Command::Converge(f) => (Some(Experiment::Converge), f),
            Command::BoundCheck(f) => (Some(Experiment::BoundCheck), f),
            Command::SupLaw(f) => (Some(Experiment::SupLaw), f),
            Command::Run(f) => (None, f),
        }
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "direct" => Ok(Method::Direct),
        "importance" | "is" => Ok(Method::Importance),
        _ => Err(format!("unknown method {s:?} (direct, importance)")),
    }
}

fn parse_is_mode(s: &str) -> Result<IsMode, String> {
    match s {
        "thinned" => Ok(IsMode::Thinned),
        "no-jump" | "no_jump" => Ok(IsMode::NoJump),
        "staircase" => Ok(IsMode::Staircase),
        _ => Err(format!("unknown importance mode {s:?} (thinned, no-jump, staircase)")),
    }
}

fn parse_phi(s: &str) -> Result<PhiChoice, String> {
    s.parse().map_err(|e: reset_ldp_core::Error| e.to_string())
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML experiment file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// uniform, deterministic_zero or power
    #[arg(long)]
    pub kernel: Option<String>,
    /// Exponent of the power kernel
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// `linear:v`, `tent:peak,end` or a CSV file with columns t,v
    #[arg(long)]
    pub path: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Time horizons, comma separated
    #[arg(long = "T", value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Replicas per estimate
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// direct or importance
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// thinned, no-jump or staircase
    #[arg(long, value_parser = parse_is_mode)]
    pub is_mode: Option<IsMode>,
    /// Drop the confining drift of the importance proposal
    #[arg(long)]
    pub no_confine: bool,
    /// Start of the time window on which the tube is enforced
    #[arg(long)]
    pub window_start: Option<f64>,
    /// Pre-reset values probed by validate-kernel
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub probes: Option<Vec<f64>>,
    /// Reset ordinals probed by validate-kernel
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<u64>>,
    /// Quadrature tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub c: Option<Vec<f64>>,
    /// Read c as a fraction of λ(1-δ)
    #[arg(long)]
    pub c_relative: bool,
    /// log, sqrt_loglog_times_g or sqrt
    #[arg(long, value_parser = parse_phi)]
    pub phi: Option<PhiChoice>,
}

/// A number or a list of numbers.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<Experiment>,
    seed: Option<u64>,
    workers: Option<usize>,
    kernel: Option<KernelSpec>,
    path: Option<String>,
    lambda: Option<OneOrMany>,
    epsilon: Option<f64>,
    #[serde(rename = "T", alias = "T_grid")]
    t: Option<OneOrMany>,
    n_replicas: Option<u64>,
    grid_points: Option<usize>,
    method: Option<Method>,
    is_mode: Option<IsMode>,
    confine: Option<bool>,
    window_start: Option<f64>,
    probes: Option<Vec<f64>>,
    ns: Option<Vec<u64>>,
    tol: Option<f64>,
    delta: Option<OneOrMany>,
    c: Option<OneOrMany>,
    c_relative: Option<bool>,
    phi: Option<PhiChoice>,
    output: Option<OutputPaths>,
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// Not serialized: outputs must not depend on it.
    #[serde(skip)]
    pub workers: usize,
    pub kernel: KernelSpec,
    pub path: Option<String>,
    pub lambda: Vec<f64>,
    pub epsilon: Option<f64>,
    #[serde(rename = "T")]
    pub t_grid: Vec<f64>,
    pub n_replicas: u64,
    pub grid_points: usize,
    pub method: Method,
    pub is_options: IsOptions,
    pub window_start: f64,
    pub probes: Vec<f64>,
    pub ns: Vec<u64>,
    pub tol: f64,
    pub delta: Vec<f64>,
    pub c: Vec<f64>,
    pub c_relative: bool,
    pub phi: PhiChoice,
    #[serde(skip)]
    pub output: OutputPaths,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let (t_grid, n_replicas) = match experiment {
            Experiment::SupLaw => (vec![1e2, 1e3, 1e4], 1000),
            Experiment::BoundCheck => (vec![1.0, 10.0, 100.0], 0),
            _ => (vec![1.0], 10_000),
        };
        Self {
            experiment,
            seed: 0,
            workers: default_workers(),
            kernel: KernelSpec::Uniform,
            path: None,
            lambda: vec![1.0],
            epsilon: None,
            t_grid,
            n_replicas,
            grid_points: DEFAULT_GRID_POINTS,
            method: Method::Direct,
            is_options: IsOptions::default(),
            window_start: 0.0,
            probes: vec![-1000.0, -10.0, -1.0, 1.0, 10.0, 1000.0],
            ns: DEFAULT_NS.to_vec(),
            tol: DEFAULT_TOLERANCE,
            delta: vec![0.0],
            c: vec![0.5],
            c_relative: false,
            phi: PhiChoice::Log,
            output: OutputPaths::default(),
        }
    }

    /// Resolves a parsed command line. `env_seed` is the value of
    /// [`SEED_ENV`], if set.
    pub fn resolve(command: Command, env_seed: Option<&str>) -> Result<Self, CliError> {
        let (named, flags) = command.split();
        let file = match &flags.config {
            Some(p) => read_file_config(p)?,
            None => FileConfig::default(),
        };
        let experiment = match (named, file.experiment) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Config(format!(
                    "subcommand {} conflicts with experiment = {:?} in the config file",
                    a.name(),
                    b.name()
                )))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => return Err(CliError::Config("`run` needs `experiment` in the config file".into())),
        };
        let mut cfg = Self::defaults(experiment);
        cfg.apply_file(file);
        if let Some(s) = env_seed {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?;
        }
        cfg.apply_flags(flags)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, f: FileConfig) {
        macro_rules! set {
            ($field:ident, $value:expr) => {
                if let Some(v) = $value {
                    self.$field = v;
                }
            };
        }
        set!(seed, f.seed);
        set!(workers, f.workers);
        set!(kernel, f.kernel);
        self.path = f.path.or(self.path.take());
        set!(lambda, f.lambda.map(OneOrMany::into_vec));
        self.epsilon = f.epsilon.or(self.epsilon);
        set!(t_grid, f.t.map(OneOrMany::into_vec));
        set!(n_replicas, f.n_replicas);
        set!(grid_points, f.grid_points);
        set!(method, f.method);
        if let Some(m) = f.is_mode {
            self.is_options.mode = m;
        }
        if let Some(c) = f.confine {
            self.is_options.confine = c;
        }
        set!(window_start, f.window_start);
        set!(probes, f.probes);
        set!(ns, f.ns);
        set!(tol, f.tol);
        set!(delta, f.delta.map(OneOrMany::into_vec));
        set!(c, f.c.map(OneOrMany::into_vec));
        set!(c_relative, f.c_relative);
        set!(phi, f.phi);
        set!(output, f.output);
    }

    fn apply_flags(&mut self, f: Flags) -> Result<(), CliError> {
        macro_rules! set {
            ($field:ident, $value:expr) => {
                if let Some(v) = $value {
                    self.$field = v;
                }
            };
        }
        set!(seed, f.seed);
        set!(workers, f.workers);
        if let Some(k) = f.kernel.as_deref() {
            self.kernel = match k {
                "uniform" => KernelSpec::Uniform,
                "deterministic_zero" | "deterministic-zero" => KernelSpec::DeterministicZero,
                "power" => match (f.alpha, self.kernel) {
                    (Some(alpha), _) | (None, KernelSpec::Power { alpha }) => KernelSpec::Power { alpha },
                    _ => return Err(CliError::Config("--kernel power needs --alpha".into())),
                },
                other => {
                    return Err(CliError::Config(format!(
                        "unknown kernel {other:?} (uniform, deterministic_zero, power)"
                    )))
                }
            };
        } else if let Some(alpha) = f.alpha {
            match self.kernel {
                KernelSpec::Power { .. } => self.kernel = KernelSpec::Power { alpha },
                _ => return Err(CliError::Config("--alpha applies only to the power kernel".into())),
            }
        }
        self.path = f.path.or(self.path.take());
        set!(lambda, f.lambda);
        self.epsilon = f.epsilon.or(self.epsilon);
        set!(t_grid, f.t);
        set!(n_replicas, f.n);
        set!(grid_points, f.grid_points);
        set!(method, f.method);
        if let Some(m) = f.is_mode {
            self.is_options.mode = m;
        }
        if f.no_confine {
            self.is_options.confine = false;
        }
        set!(window_start, f.window_start);
        set!(probes, f.probes);
        set!(ns, f.ns);
        set!(tol, f.tol);
        set!(delta, f.delta);
        set!(c, f.c);
        if f.c_relative {
            self.c_relative = true;
        }
        set!(phi, f.phi);
        if f.csv.is_some() {
            self.output.csv = f.csv;
        }
        if f.json.is_some() {
            self.output.json = f.json;
        }
        if f.svg.is_some() {
            self.output.svg = f.svg;
        }
        Ok(())
    }

    /// Domain checks that do not need the core types.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.workers == 0 {
            return bad("workers must be positive".into());
        }
        if self.lambda.is_empty() || self.lambda.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return bad("lambda must be one or more finite values >= 0".into());
        }
        if self.experiment != Experiment::BoundCheck && self.lambda.len() != 1 {
            return bad(format!("{} takes a single lambda", self.experiment.name()));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return bad("T must be one or more finite positive values".into());
        }
        if matches!(self.experiment, Experiment::Converge | Experiment::SupLaw | Experiment::Estimate)
            && self.t_grid.windows(2).any(|w| !(w[1] > w[0]))
        {
            return bad("T values must be increasing".into());
        }
        if self.experiment == Experiment::Simulate && self.t_grid.len() != 1 {
            return bad("simulate takes a single T".into());
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) || !e.is_finite() {
                return bad(format!("epsilon must be positive, got {e}"));
            }
        }
        if matches!(self.experiment, Experiment::Estimate | Experiment::Converge) {
            if self.epsilon.is_none() {
                return bad(format!("{} needs --epsilon", self.experiment.name()));
            }
            if self.path.is_none() {
                return bad(format!("{} needs --path", self.experiment.name()));
            }
        }
        if self.experiment == Experiment::Rate && self.path.is_none() {
            return bad("rate needs --path".into());
        }
        let needs_replicas = matches!(self.experiment, Experiment::Estimate | Experiment::Converge | Experiment::SupLaw);
        if needs_replicas && self.n_replicas == 0 {
            return bad("--n must be positive".into());
        }
        if self.grid_points < 2 {
            return bad("grid_points must be at least 2".into());
        }
        TimeWindow::new(self.window_start).map_err(|e| CliError::Config(e.to_string()))?;
        if self.experiment == Experiment::ValidateKernel {
            if self.probes.is_empty() || self.probes.iter().any(|x| *x == 0.0 || !x.is_finite()) {
                return bad("probes must be nonzero finite values".into());
            }
            if self.ns.is_empty() {
                return bad("ns must not be empty".into());
            }
            if !(self.tol > 0.0) {
                return bad("tol must be positive".into());
            }
        }
        if self.experiment == Experiment::BoundCheck && (self.delta.is_empty() || self.c.is_empty()) {
            return bad("bound-check needs delta and c values".into());
        }
        Ok(())
    }

    /// The target path, from shorthand or a CSV file.
    pub fn target_path(&self) -> Result<TargetPath, CliError> {
        let spec = self
            .path
            .as_deref()
            .ok_or_else(|| CliError::Config("no path given".into()))?;
        let file = Path::new(spec);
        if file.is_file() {
            let text = std::fs::read_to_string(file)
                .map_err(|e| CliError::Config(format!("cannot read {spec}: {e}")))?;
            return TargetPath::from_csv_str(&text).map_err(|e| CliError::Config(e.to_string()));
        }
        TargetPath::from_shorthand(spec).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn read_file_config(p: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(p)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))
}
