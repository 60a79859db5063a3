//! Argument parsing, config-file merging, and validation.
//!
//! Precedence per setting: individual flag > `--all-rates` (rate constants
//! only) > config file > built-in default.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use envara_core::grid_ops::Grid;
use envara_core::models::{ModelKind, Params};
use envara_core::solver::{Scheme, StepperConfig};

#[derive(Parser)]
#[command(name = "envara-rds", version, about = "Reaction-diffusion laboratory runner")]
pub struct Cli {
    /// JSON config file with the flat schema documented in the README.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Validate the configuration, print any violations, and exit.
    #[arg(long, global = true)]
    pub check: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Integrate a model and export trajectory artifacts.
    Simulate(SimulateArgs),
    /// Print the constant equilibria of the closed system.
    Equilibria(EquilibriaArgs),
    /// Integrate a model and export the energy-audit table.
    EnergyAudit(SimulateArgs),
    /// Epsilon-sweep convergence study of the fast-slow pair.
    Convergence(ConvergenceArgs),
    /// Invariance defects of the slow-manifold graphs over an epsilon sweep.
    SlowManifold(SlowManifoldArgs),
    /// Parse a reaction network file and print its structure.
    Parse(ParseArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Equilibria(_) => "equilibria",
            Command::EnergyAudit(_) => "energy-audit",
            Command::Convergence(_) => "convergence",
            Command::SlowManifold(_) => "slow-manifold",
            Command::Parse(_) => "parse",
        }
    }
}

/// Rate and scale constants (see the README for the JSON key mapping).
#[derive(Args, Clone, Default)]
pub struct RateArgs {
    /// Set every reaction rate (p1, p2, ms, mh, mw, r, eps1..eps7) at once.
    #[arg(long)]
    pub all_rates: Option<f64>,
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long)]
    pub p2: Option<f64>,
    #[arg(long)]
    pub ms: Option<f64>,
    #[arg(long)]
    pub mh: Option<f64>,
    #[arg(long)]
    pub mw: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub eps1: Option<f64>,
    #[arg(long)]
    pub eps2: Option<f64>,
    #[arg(long)]
    pub eps3: Option<f64>,
    #[arg(long)]
    pub eps4: Option<f64>,
    #[arg(long)]
    pub eps5: Option<f64>,
    #[arg(long)]
    pub eps6: Option<f64>,
    #[arg(long)]
    pub eps7: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub a0: Option<f64>,
    /// Merged death rate m_v (defaults to mh).
    #[arg(long)]
    pub mv: Option<f64>,
    /// Water stoichiometry of the Holling III reaction.
    #[arg(long)]
    pub k: Option<u32>,
    /// Total mass of the closed system (per unit domain measure).
    #[arg(long = "M0")]
    pub m0: Option<f64>,
    #[arg(long = "d-vs")]
    pub d_vs: Option<f64>,
    #[arg(long = "d-vh")]
    pub d_vh: Option<f64>,
    #[arg(long = "d-w")]
    pub d_w: Option<f64>,
    #[arg(long = "d-bs")]
    pub d_bs: Option<f64>,
    #[arg(long = "d-bh")]
    pub d_bh: Option<f64>,
    #[arg(long = "d-a")]
    pub d_a: Option<f64>,
}

#[derive(Args, Clone, Default)]
pub struct GridArgs {
    /// Spatial dimension (1 or 2).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Points per axis, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Axis lengths, comma-separated (default pi per axis).
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<f64>>,
}

#[derive(Args, Clone, Default)]
pub struct OutputArgs {
    /// Directory for artifacts (manifest.json is written first).
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Seed of the randomized presets and study data.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parallelism for sweep members.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Model kind (ClosedSix, RescaledOpen, ReducedThree, HollingI,
    /// Klausmeier, HollingIIFastSlow, HollingIIReduced, HollingIII, SlowFlow).
    #[arg(long)]
    pub model: Option<String>,
    /// Timescale parameter of the fast-slow kinds.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Initial preset: equilibrium | extinct |
    /// equilibrium-perturbed:AMP:MODE | random:AMP | file:DIR.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Time stepper: imex-euler | strang.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[arg(long)]
    pub positivity_floor_tol: Option<f64>,
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct EquilibriaArgs {
    /// Which equilibrium family: conserved | extinct.
    #[arg(long)]
    pub family: Option<String>,
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct ConvergenceArgs {
    /// Epsilon sweep, comma-separated and strictly decreasing.
    #[arg(long = "eps", value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Comparison time of the sweep.
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    /// Place the fast species on the critical manifold initially.
    #[arg(long)]
    pub prepared: bool,
    /// Relative amplitude of the rough initial spectra.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Time step override (default resolves the stiffest member).
    #[arg(long)]
    pub dt: Option<f64>,
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct SlowManifoldArgs {
    /// Epsilon sweep, comma-separated.
    #[arg(long = "eps", value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Project the first-order correction onto the slow subspace.
    #[arg(long)]
    pub project_correction: bool,
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct ParseArgs {
    /// Reaction network file in the DSL.
    pub file: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

/// Flat JSON schema; every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub model: Option<String>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub m_s: Option<f64>,
    pub m_h: Option<f64>,
    pub m_w: Option<f64>,
    pub r: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub eps3: Option<f64>,
    pub eps4: Option<f64>,
    pub eps5: Option<f64>,
    pub eps6: Option<f64>,
    pub eps7: Option<f64>,
    pub eps: Option<f64>,
    pub zeta: Option<f64>,
    pub a0: Option<f64>,
    pub m_v: Option<f64>,
    pub k: Option<u32>,
    pub m0: Option<f64>,
    pub d_vs: Option<f64>,
    pub d_vh: Option<f64>,
    pub d_w: Option<f64>,
    pub d_bs: Option<f64>,
    pub d_bh: Option<f64>,
    pub d_a: Option<f64>,
    pub dim: Option<usize>,
    pub n: Option<Vec<usize>>,
    pub lengths: Option<Vec<f64>>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub scheme: Option<String>,
    pub snapshot_every: Option<usize>,
    pub positivity_floor_tol: Option<f64>,
    pub initial: Option<String>,
    pub output_dir: Option<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub eps_list: Option<Vec<f64>>,
    pub t_final: Option<f64>,
    pub prepared: Option<bool>,
    pub amplitude: Option<f64>,
    pub family: Option<String>,
    pub project_correction: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &PathBuf) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub command: String,
    pub model_kind: ModelKind,
    pub params: Params,
    pub grid: Grid,
    pub stepper: StepperConfig,
    pub initial: String,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub eps_list: Vec<f64>,
    pub t_final: f64,
    pub prepared: bool,
    pub amplitude: f64,
    pub family: String,
    pub project_correction: bool,
    pub parse_file: Option<PathBuf>,
}

pub const DEFAULT_EPS_SWEEP: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];

fn merge_params(rates: &RateArgs, eps: Option<f64>, file: &FileConfig) -> Params {
    let d = Params::default();
    let rate = |flag: Option<f64>, all: Option<f64>, file_v: Option<f64>, def: f64| {
        flag.or(all).or(file_v).unwrap_or(def)
    };
    let plain = |flag: Option<f64>, file_v: Option<f64>, def: f64| flag.or(file_v).unwrap_or(def);
    let a = rates.all_rates;
    Params {
        p1: rate(rates.p1, a, file.p1, d.p1),
        p2: rate(rates.p2, a, file.p2, d.p2),
        m_s: rate(rates.ms, a, file.m_s, d.m_s),
        m_h: rate(rates.mh, a, file.m_h, d.m_h),
        m_w: rate(rates.mw, a, file.m_w, d.m_w),
        r: rate(rates.r, a, file.r, d.r),
        eps1: rate(rates.eps1, a, file.eps1, d.eps1),
        eps2: rate(rates.eps2, a, file.eps2, d.eps2),
        eps3: rate(rates.eps3, a, file.eps3, d.eps3),
        eps4: rate(rates.eps4, a, file.eps4, d.eps4),
        eps5: rate(rates.eps5, a, file.eps5, d.eps5),
        eps6: rate(rates.eps6, a, file.eps6, d.eps6),
        eps7: rate(rates.eps7, a, file.eps7, d.eps7),
        eps: plain(eps, file.eps, d.eps),
        zeta: plain(rates.zeta, file.zeta, d.zeta),
        a0: plain(rates.a0, file.a0, d.a0),
        m_v: rates.mv.or(file.m_v),
        d_vs: plain(rates.d_vs, file.d_vs, d.d_vs),
        d_vh: plain(rates.d_vh, file.d_vh, d.d_vh),
        d_w: plain(rates.d_w, file.d_w, d.d_w),
        d_bs: plain(rates.d_bs, file.d_bs, d.d_bs),
        d_bh: plain(rates.d_bh, file.d_bh, d.d_bh),
        d_a: plain(rates.d_a, file.d_a, d.d_a),
        k: rates.k.or(file.k).unwrap_or(d.k),
        m0: rates.m0.or(file.m0).unwrap_or(d.m0),
    }
}

fn merge_grid(args: &GridArgs, file: &FileConfig) -> Result<Grid, String> {
    let dim = args.dim.or(file.dim).unwrap_or(1);
    let n = args
        .n
        .clone()
        .or_else(|| file.n.clone())
        .unwrap_or_else(|| vec![256; dim]);
    let lengths = args
        .lengths
        .clone()
        .or_else(|| file.lengths.clone())
        .unwrap_or_else(|| vec![envara_core::grid_ops::DEFAULT_LENGTH; dim]);
    Grid::new(dim, &n, &lengths).map_err(|e| e.to_string())
}

fn merge_output(args: &OutputArgs, file: &FileConfig) -> (Option<PathBuf>, u64, Option<usize>) {
    let dir = args
        .output_dir
        .clone()
        .or_else(|| file.output_dir.as_ref().map(PathBuf::from));
    (dir, args.seed.or(file.seed).unwrap_or(0), args.jobs.or(file.jobs))
}

pub fn resolve(command: &Command, file: &FileConfig) -> Result<Resolved, String> {
    let mut resolved = match command {
        Command::Simulate(a) | Command::EnergyAudit(a) => {
            let params = merge_params(&a.rates, a.eps, file);
            let grid = merge_grid(&a.grid, file)?;
            let scheme_name = a
                .scheme
                .clone()
                .or_else(|| file.scheme.clone())
                .unwrap_or_else(|| "imex-euler".into());
            let stepper = StepperConfig {
                dt: a.dt.or(file.dt).unwrap_or(1e-3),
                t_end: a.t_end.or(file.t_end).unwrap_or(1.0),
                scheme: Scheme::from_str(&scheme_name).map_err(|e| e.to_string())?,
                snapshot_every: a.snapshot_every.or(file.snapshot_every).unwrap_or(100),
                positivity_floor_tol: a
                    .positivity_floor_tol
                    .or(file.positivity_floor_tol)
                    .unwrap_or(1e-12),
            };
            let model_name = a
                .model
                .clone()
                .or_else(|| file.model.clone())
                .unwrap_or_else(|| "ClosedSix".into());
            let (output_dir, seed, jobs) = merge_output(&a.output, file);
            Resolved {
                command: String::new(),
                model_kind: ModelKind::from_str(&model_name).map_err(|e| e.to_string())?,
                params,
                grid,
                stepper,
                initial: a
                    .initial
                    .clone()
                    .or_else(|| file.initial.clone())
                    .unwrap_or_else(|| "equilibrium-perturbed:0.1:1".into()),
                output_dir,
                seed,
                jobs,
                eps_list: DEFAULT_EPS_SWEEP.to_vec(),
                t_final: 1.0,
                prepared: true,
                amplitude: 0.4,
                family: "conserved".into(),
                project_correction: false,
                parse_file: None,
            }
        }
        Command::Equilibria(a) => {
            let params = merge_params(&a.rates, None, file);
            let (output_dir, seed, jobs) = merge_output(&a.output, file);
            Resolved {
                command: String::new(),
                model_kind: ModelKind::ClosedSix,
                params,
                grid: Grid::line(3, 1.0).map_err(|e| e.to_string())?,
                stepper: StepperConfig::default(),
                initial: "equilibrium".into(),
                output_dir,
                seed,
                jobs,
                eps_list: DEFAULT_EPS_SWEEP.to_vec(),
                t_final: 1.0,
                prepared: true,
                amplitude: 0.4,
                family: a
                    .family
                    .clone()
                    .or_else(|| file.family.clone())
                    .unwrap_or_else(|| "conserved".into()),
                project_correction: false,
                parse_file: None,
            }
        }
        Command::Convergence(a) => {
            let mut params = merge_params(&a.rates, None, file);
            // Study defaults: the fast species diffuses, the slow pair is
            // reaction-dominated (see the acceptance experiment design).
            if a.rates.p1.is_none() && a.rates.all_rates.is_none() && file.p1.is_none() {
                params.p1 = 0.5;
            }
            if a.rates.mh.is_none() && a.rates.all_rates.is_none() && file.m_h.is_none() {
                params.m_h = 0.3;
            }
            if a.rates.mw.is_none() && a.rates.all_rates.is_none() && file.m_w.is_none() {
                params.m_w = 0.5;
            }
            if a.rates.a0.is_none() && file.a0.is_none() {
                params.a0 = 0.5;
            }
            if a.rates.d_vs.is_none() && file.d_vs.is_none() {
                params.d_vs = 2.0;
            }
            if a.rates.d_vh.is_none() && file.d_vh.is_none() {
                params.d_vh = 0.0;
            }
            if a.rates.d_w.is_none() && file.d_w.is_none() {
                params.d_w = 0.0;
            }
            let grid = merge_grid(&a.grid, file)?;
            let (output_dir, seed, jobs) = merge_output(&a.output, file);
            let mut stepper = StepperConfig::default();
            stepper.dt = a.dt.or(file.dt).unwrap_or(0.0); // 0 = auto
            Resolved {
                command: String::new(),
                model_kind: ModelKind::HollingIIFastSlow,
                params,
                grid,
                stepper,
                initial: "study".into(),
                output_dir,
                seed,
                jobs,
                eps_list: a
                    .eps
                    .clone()
                    .or_else(|| file.eps_list.clone())
                    .unwrap_or_else(|| DEFAULT_EPS_SWEEP.to_vec()),
                t_final: a.t_final.or(file.t_final).unwrap_or(1.0),
                prepared: a.prepared || file.prepared.unwrap_or(false),
                amplitude: a.amplitude.or(file.amplitude).unwrap_or(0.4),
                family: "conserved".into(),
                project_correction: false,
                parse_file: None,
            }
        }
        Command::SlowManifold(a) => {
            let params = merge_params(&a.rates, None, file);
            let grid = merge_grid(&a.grid, file)?;
            let (output_dir, seed, jobs) = merge_output(&a.output, file);
            Resolved {
                command: String::new(),
                model_kind: ModelKind::HollingIIFastSlow,
                params,
                grid,
                stepper: StepperConfig::default(),
                initial: "study".into(),
                output_dir,
                seed,
                jobs,
                eps_list: a
                    .eps
                    .clone()
                    .or_else(|| file.eps_list.clone())
                    .unwrap_or_else(|| DEFAULT_EPS_SWEEP.to_vec()),
                t_final: 1.0,
                prepared: true,
                amplitude: 0.4,
                family: "conserved".into(),
                project_correction: a.project_correction || file.project_correction.unwrap_or(false),
                parse_file: None,
            }
        }
        Command::Parse(a) => {
            let (output_dir, seed, jobs) = merge_output(&a.output, file);
            Resolved {
                command: String::new(),
                model_kind: ModelKind::ClosedSix,
                params: Params::default(),
                grid: Grid::line(3, 1.0).map_err(|e| e.to_string())?,
                stepper: StepperConfig::default(),
                initial: "equilibrium".into(),
                output_dir,
                seed,
                jobs,
                eps_list: DEFAULT_EPS_SWEEP.to_vec(),
                t_final: 1.0,
                prepared: true,
                amplitude: 0.4,
                family: "conserved".into(),
                project_correction: false,
                parse_file: Some(a.file.clone()),
            }
        }
    };
    resolved.command = command.name().to_string();
    if let Some(declared) = &file.command {
        if declared != &resolved.command {
            return Err(format!(
                "config declares command '{declared}' but '{}' was invoked",
                resolved.command
            ));
        }
    }
    Ok(resolved)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Returns the list of violations; empty iff the run may start.
pub fn validate(cfg: &Resolved) -> Vec<String> {
    let mut v = Vec::new();
    let p = &cfg.params;
    match cfg.command.as_str() {
        "simulate" | "energy-audit" => {
            if let Err(e) = cfg.stepper.validate() {
                v.push(e.to_string());
            }
            if cfg.output_dir.is_none() {
                v.push("output_dir is required for this command".into());
            }
            if cfg.model_kind == ModelKind::HollingIII && p.k < 2 {
                v.push(format!("Holling III needs k >= 2, got {}", p.k));
            }
            if cfg.model_kind == ModelKind::HollingIIFastSlow && !(p.eps > 0.0) {
                v.push("the fast-slow model needs eps > 0".into());
            }
            if cfg.model_kind == ModelKind::SlowFlow {
                if !(p.p2 < p.m_s) {
                    v.push(format!(
                        "generalized spectral gap condition requires p2 < m_s (tilde): p2={} m_s={}",
                        p.p2, p.m_s
                    ));
                }
                if !(p.zeta > 0.0) {
                    v.push("zeta must be positive".into());
                } else if !(p.eps / p.zeta < 1.0) {
                    v.push(format!(
                        "timescale separation requires eps/zeta < 1, got {}",
                        p.eps / p.zeta
                    ));
                }
            }
            if let Err(e) = crate::presets::parse_preset(&cfg.initial) {
                v.push(e);
            } else if let Ok(crate::presets::Preset::File(dir)) =
                crate::presets::parse_preset(&cfg.initial)
            {
                if !dir.is_dir() {
                    v.push(format!("initial file preset: '{}' is not a directory", dir.display()));
                }
            }
            if matches!(
                crate::presets::parse_preset(&cfg.initial),
                Ok(crate::presets::Preset::Extinct)
            ) && !matches!(cfg.model_kind, ModelKind::ClosedSix | ModelKind::RescaledOpen)
            {
                v.push("the extinct preset applies to the closed/rescaled kinds only".into());
            }
        }
        "equilibria" => {
            if cfg.family != "conserved" && cfg.family != "extinct" {
                v.push(format!("unknown equilibrium family '{}'", cfg.family));
            }
            if cfg.family == "conserved" {
                for (val, name) in [
                    (p.p1, "p1"),
                    (p.p2, "p2"),
                    (p.eps1, "eps1"),
                    (p.eps2, "eps2"),
                    (p.r, "r"),
                ] {
                    if !(val > 0.0) {
                        v.push(format!("conserved equilibrium needs {name} > 0"));
                    }
                }
            }
        }
        "convergence" => {
            if cfg.eps_list.len() < 3 {
                v.push(format!(
                    "epsilon sweep needs at least 3 values, got {}",
                    cfg.eps_list.len()
                ));
            }
            if cfg.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
                v.push("epsilon sweep must be strictly decreasing".into());
            }
            if cfg.eps_list.iter().any(|&e| !(e > 0.0)) {
                v.push("epsilon values must be positive".into());
            }
            if !(cfg.t_final > 0.0) {
                v.push(format!("T must be positive, got {}", cfg.t_final));
            }
            if !(cfg.amplitude >= 0.0 && cfg.amplitude < 1.0) {
                v.push(format!("amplitude must lie in [0, 1), got {}", cfg.amplitude));
            }
        }
        "slow-manifold" => {
            if !(p.p2 < p.m_s) {
                v.push(format!(
                    "generalized spectral gap condition requires p2 < m_s (tilde): p2={} m_s={}",
                    p.p2, p.m_s
                ));
            }
            if cfg.eps_list.is_empty() {
                v.push("epsilon sweep must not be empty".into());
            }
            if cfg.eps_list.iter().any(|&e| !(e > 0.0)) {
                v.push("epsilon values must be positive".into());
            }
            if cfg.eps_list.len() >= 2 && cfg.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
                v.push("epsilon sweep must be strictly decreasing".into());
            }
        }
        "parse" => {
            if let Some(f) = &cfg.parse_file {
                if !f.is_file() {
                    v.push(format!("network file '{}' does not exist", f.display()));
                }
            }
        }
        _ => {}
    }
    v
}

/// Resolved-config echo for the manifest.
pub fn config_echo(cfg: &Resolved) -> serde_json::Value {
    let p = &cfg.params;
    let grid = &cfg.grid;
    serde_json::json!({
        "command": cfg.command,
        "model": cfg.model_kind.name(),
        "params": {
            "p1": p.p1, "p2": p.p2, "m_s": p.m_s, "m_h": p.m_h, "m_w": p.m_w, "r": p.r,
            "eps1": p.eps1, "eps2": p.eps2, "eps3": p.eps3, "eps4": p.eps4,
            "eps5": p.eps5, "eps6": p.eps6, "eps7": p.eps7,
            "eps": p.eps, "zeta": p.zeta, "a0": p.a0, "m_v": p.m_v,
            "d_vs": p.d_vs, "d_vh": p.d_vh, "d_w": p.d_w,
            "d_bs": p.d_bs, "d_bh": p.d_bh, "d_a": p.d_a,
            "k": p.k, "m0": p.m0,
        },
        "grid": {
            "dim": grid.dim(),
            "n": (0..grid.dim()).map(|a| grid.n(a)).collect::<Vec<_>>(),
            "lengths": (0..grid.dim()).map(|a| grid.length(a)).collect::<Vec<_>>(),
        },
        "stepper": {
            "dt": cfg.stepper.dt,
            "t_end": cfg.stepper.t_end,
            "scheme": cfg.stepper.scheme.name(),
            "snapshot_every": cfg.stepper.snapshot_every,
            "positivity_floor_tol": cfg.stepper.positivity_floor_tol,
        },
        "initial": cfg.initial,
        "seed": cfg.seed,
        "jobs": cfg.jobs,
        "eps_list": cfg.eps_list,
        "t_final": cfg.t_final,
        "prepared": cfg.prepared,
        "amplitude": cfg.amplitude,
        "family": cfg.family,
        "project_correction": cfg.project_correction,
    })
}
