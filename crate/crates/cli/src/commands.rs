//! Command execution and artifact writing.

use std::path::{Path, PathBuf};
use std::time::Instant;

use envara_core::energetics::{
    equilibrium_conserved, equilibrium_extinct, EquilibriumState, AUDIT_CSV_HEADER,
};
use envara_core::error::{Error, Result};
use envara_core::grid_ops::fmt17;
use envara_core::models::{build_rhs, ModelKind, ModelSpec};
use envara_core::multiscale::{convergence_study, fit_slope, invariance_defect_sweep, StudyOptions};
use envara_core::reaction_net::{ReactionNetwork, SpeciesRole};
use envara_core::solver::{export_trajectory, integrate, SystemState};

use crate::config::{self, Cli, Command, Resolved};
use crate::presets;

/// Exit code of a core error: 2 invalid input, 3 solver failure, 4 i/o.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Network(_) | Error::Invalid(_) | Error::Mismatch(_) => 2,
        Error::Solver(_) => 3,
        Error::Io(_) => 4,
    }
}

fn error_prefix(code: i32) -> &'static str {
    match code {
        2 => "invalid-config",
        3 => "solver-failure",
        _ => "io-failure",
    }
}

pub fn dispatch(cli: Cli) -> i32 {
    let file = match &cli.config {
        Some(path) => match config::FileConfig::load(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("invalid-config: {e}");
                return 2;
            }
        },
        None => config::FileConfig::default(),
    };
    let resolved = match config::resolve(&cli.command, &file) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("invalid-config: {e}");
            return 2;
        }
    };
    let violations = config::validate(&resolved);
    if cli.check {
        if violations.is_empty() {
            println!("ok");
            return 0;
        }
        for v in &violations {
            println!("violation: {v}");
        }
        return 2;
    }
    if !violations.is_empty() {
        eprintln!("invalid-config: {}", violations.join("; "));
        return 2;
    }
    let outcome = match &cli.command {
        Command::Simulate(_) => run_simulate(&resolved, false),
        Command::EnergyAudit(_) => run_simulate(&resolved, true),
        Command::Equilibria(_) => run_equilibria(&resolved),
        Command::Convergence(_) => run_convergence(&resolved),
        Command::SlowManifold(_) => run_slow_manifold(&resolved),
        Command::Parse(_) => run_parse(&resolved),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}: {e}", error_prefix(code));
            code
        }
    }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// Written before any other artifact; `wall_time_seconds` is filled in on
/// success so a crash leaves the null marker behind.
struct Manifest {
    path: PathBuf,
    value: serde_json::Value,
    started: Instant,
}

impl Manifest {
    fn begin(dir: &Path, cfg: &Resolved) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let value = serde_json::json!({
            "command": cfg.command,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_seconds": serde_json::Value::Null,
            "config": config::config_echo(cfg),
        });
        let path = dir.join("manifest.json");
        std::fs::write(&path, format!("{:#}\n", value))?;
        Ok(Manifest {
            path,
            value,
            started: Instant::now(),
        })
    }

    fn finalize(mut self) -> Result<()> {
        self.value["wall_time_seconds"] =
            serde_json::json!(self.started.elapsed().as_secs_f64());
        std::fs::write(&self.path, format!("{:#}\n", self.value))?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn reference_state(cfg: &Resolved, n_species: usize) -> EquilibriumState {
    if matches!(cfg.model_kind, ModelKind::ClosedSix | ModelKind::RescaledOpen) {
        if let Ok(eq) = equilibrium_conserved(&cfg.params, cfg.params.m0) {
            return eq;
        }
    }
    EquilibriumState::reference(vec![1.0; n_species]).expect("positive reference")
}

fn run_simulate(cfg: &Resolved, audit_only: bool) -> Result<()> {
    let model = build_rhs(&ModelSpec {
        kind: cfg.model_kind,
        params: cfg.params.clone(),
        grid: cfg.grid.clone(),
    })?;
    let preset = presets::parse_preset(&cfg.initial).map_err(Error::invalid)?;
    let fields = presets::build_initial(&model, &preset, cfg.seed)?;
    let eq = reference_state(cfg, model.n_species());
    let dir = cfg.output_dir.as_ref().expect("validated");
    let manifest = Manifest::begin(dir, cfg)?;
    let traj = integrate(&model, &SystemState::new(fields, 0.0), &cfg.stepper, &eq)?;
    if audit_only {
        let mut csv = String::from(AUDIT_CSV_HEADER);
        csv.push('\n');
        for (snap, audit) in traj.snapshots.iter().zip(&traj.audits) {
            csv.push_str(&audit.csv_row(snap.time));
            csv.push('\n');
        }
        std::fs::write(dir.join("energy_audit.csv"), csv)?;
    } else {
        export_trajectory(&traj, &model, dir)?;
    }
    let final_state = traj.final_state();
    println!(
        "{}: model={} snapshots={} t_final={} mass={} steady_state_time={}",
        cfg.command,
        cfg.model_kind.name(),
        traj.snapshots.len(),
        fmt17(final_state.time),
        fmt17(traj.audits.last().map(|a| a.mass).unwrap_or(f64::NAN)),
        traj.steady_state_time
            .map(fmt17)
            .unwrap_or_else(|| "none".into()),
    );
    manifest.finalize()
}

fn run_equilibria(cfg: &Resolved) -> Result<()> {
    let eq = match cfg.family.as_str() {
        "extinct" => equilibrium_extinct(&cfg.params, cfg.params.m0)?,
        _ => equilibrium_conserved(&cfg.params, cfg.params.m0)?,
    };
    let names = ["vs", "vh", "w", "bs", "bh", "a"];
    for (name, &v) in names.iter().zip(eq.values()) {
        println!("{name} = {}", fmt17(v));
    }
    if let Some(dir) = &cfg.output_dir {
        let manifest = Manifest::begin(dir, cfg)?;
        let mut json = String::from("{\n");
        json.push_str(&format!("  \"family\": \"{}\",\n", cfg.family));
        json.push_str("  \"species\": [\"vs\", \"vh\", \"w\", \"bs\", \"bh\", \"a\"],\n");
        let vals: Vec<String> = eq.values().iter().map(|&v| fmt17(v)).collect();
        json.push_str(&format!("  \"values\": [{}]\n}}\n", vals.join(", ")));
        std::fs::write(dir.join("equilibria.json"), json)?;
        manifest.finalize()?;
    }
    Ok(())
}

fn run_convergence(cfg: &Resolved) -> Result<()> {
    let manifest = match &cfg.output_dir {
        Some(dir) => Some(Manifest::begin(dir, cfg)?),
        None => None,
    };
    let opts = StudyOptions {
        seed: cfg.seed,
        dt: (cfg.stepper.dt > 0.0).then_some(cfg.stepper.dt),
        amplitude: cfg.amplitude,
        jobs: cfg.jobs,
    };
    let report = convergence_study(
        &cfg.eps_list,
        cfg.t_final,
        &cfg.grid,
        &cfg.params,
        cfg.prepared,
        &opts,
    )?;
    print!("{}", report.to_json());
    if let Some(dir) = &cfg.output_dir {
        std::fs::write(dir.join("convergence.json"), report.to_json())?;
        std::fs::write(dir.join("convergence.csv"), report.to_csv())?;
    }
    if let Some(m) = manifest {
        m.finalize()?;
    }
    Ok(())
}

fn run_slow_manifold(cfg: &Resolved) -> Result<()> {
    let manifest = match &cfg.output_dir {
        Some(dir) => Some(Manifest::begin(dir, cfg)?),
        None => None,
    };
    let d0 = invariance_defect_sweep(&cfg.eps_list, &cfg.grid, &cfg.params, 0, cfg.project_correction)?;
    let d1 = invariance_defect_sweep(&cfg.eps_list, &cfg.grid, &cfg.params, 1, cfg.project_correction)?;
    let (s0, s1) = if cfg.eps_list.len() >= 2 {
        let xs: Vec<f64> = cfg.eps_list.iter().map(|e| e.ln()).collect();
        (
            fit_slope(&xs, &d0.iter().map(|d| d.ln()).collect::<Vec<_>>()),
            fit_slope(&xs, &d1.iter().map(|d| d.ln()).collect::<Vec<_>>()),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    let list = |v: &[f64]| v.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(", ");
    let json = format!(
        "{{\n  \"eps\": [{}],\n  \"defect_order0\": [{}],\n  \"defect_order1\": [{}],\n  \"slope_order0\": {},\n  \"slope_order1\": {}\n}}\n",
        list(&cfg.eps_list),
        list(&d0),
        list(&d1),
        fmt17(s0),
        fmt17(s1),
    );
    print!("{json}");
    if let Some(dir) = &cfg.output_dir {
        std::fs::write(dir.join("slow_manifold.json"), &json)?;
        let mut csv = String::from("eps,defect_order0,defect_order1\n");
        for i in 0..cfg.eps_list.len() {
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt17(cfg.eps_list[i]),
                fmt17(d0[i]),
                fmt17(d1[i])
            ));
        }
        std::fs::write(dir.join("slow_manifold.csv"), csv)?;
    }
    if let Some(m) = manifest {
        m.finalize()?;
    }
    Ok(())
}

fn run_parse(cfg: &Resolved) -> Result<()> {
    let path = cfg.parse_file.as_ref().expect("parse command has a file");
    let text = std::fs::read_to_string(path)?;
    let net = ReactionNetwork::parse(&text)?;
    println!("species ({}):", net.n_species());
    for s in net.species() {
        let role = match s.role {
            SpeciesRole::Dynamic => "dynamic",
            SpeciesRole::Environment => "environment",
        };
        println!("  {:<12} diffusion={} {role}", s.name, fmt17(s.diffusion));
    }
    println!("reactions ({}):", net.n_reactions());
    for (i, line) in net
        .to_dsl()
        .lines()
        .filter(|l| !l.starts_with("species"))
        .enumerate()
    {
        println!("  R{}: {line}", i + 1);
    }
    println!("sigma (rows = reactions, columns = species):");
    for i in 0..net.n_reactions() {
        let row: Vec<String> = (0..net.n_species())
            .map(|alpha| format!("{:>3}", net.sigma(i, alpha)))
            .collect();
        println!("  [{}]", row.join(" "));
    }
    let moieties = net.conserved_moieties();
    println!("conserved moieties ({}):", moieties.len());
    for y in &moieties {
        let row: Vec<String> = y
            .iter()
            .map(|v| {
                if *v.denom() == 1 {
                    format!("{}", v.numer())
                } else {
                    format!("{}/{}", v.numer(), v.denom())
                }
            })
            .collect();
        println!("  [{}]", row.join(", "));
    }
    if let Some(dir) = &cfg.output_dir {
        let manifest = Manifest::begin(dir, cfg)?;
        manifest.finalize()?;
    }
    Ok(())
}
