//! Time integration of the semilinear systems: implicit diffusion (direct
//! tridiagonal solves in 1D, exact cosine-mode solves in 2D) with explicit
//! reaction treatment.
//!
//! Schemes:
//! * `ImexEuler` — backward-Euler diffusion, forward-Euler reaction (order 1).
//! * `Strang` — Crank-Nicolson diffusion half-steps around an explicit
//!   midpoint reaction step (order 2).
//!
//! Both preserve the discrete total mass of closed networks exactly: the
//! trapezoid weights lie in the left kernel of the mirror-stencil Laplacian
//! and the reaction source sums to zero across species.

use std::path::Path;
use std::str::FromStr;

use crate::energetics::{self, EnergyAudit, EquilibriumState};
use crate::error::{Error, Result};
use crate::grid_ops::{self, CosineTransform, Field, Grid};
use crate::models::Model;

/// Concentrations of every dynamic species at one time.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub fields: Vec<Field>,
    pub time: f64,
}

impl SystemState {
    pub fn new(fields: Vec<Field>, time: f64) -> Self {
        SystemState { fields, time }
    }

    /// Smallest concentration over all species.
    pub fn min_concentration(&self) -> f64 {
        self.fields.iter().map(|f| f.min()).fold(f64::INFINITY, f64::min)
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImexEuler,
    Strang,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ImexEuler => "imex-euler",
            Scheme::Strang => "strang",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().replace('_', "-").as_str() {
            "imex-euler" | "imexeuler" | "imex" => Ok(Scheme::ImexEuler),
            "strang" => Ok(Scheme::Strang),
            _ => Err(Error::invalid(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Integration configuration.
#[derive(Debug, Clone)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Snapshot (and audit) every this many steps.
    pub snapshot_every: usize,
    /// Tolerance used by the positivity invariant on snapshots.
    pub positivity_floor_tol: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::ImexEuler,
            snapshot_every: 100,
            positivity_floor_tol: 1e-12,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.dt < self.t_end) {
            return Err(Error::invalid(format!(
                "dt must be smaller than t_end, got dt={} t_end={}",
                self.dt, self.t_end
            )));
        }
        if self.snapshot_every == 0 {
            return Err(Error::invalid("snapshot_every must be at least 1"));
        }
        if !(self.positivity_floor_tol >= 0.0) {
            return Err(Error::invalid("positivity_floor_tol must be nonnegative"));
        }
        Ok(())
    }
}

/// Hard abort threshold on negative concentrations (scheme failure).
const NEGATIVE_ABORT: f64 = -1e-6;
/// Steady-state threshold on the max norm of the full right-hand side.
const STEADY_STATE_TOL: f64 = 1e-8;

/// Integration output: snapshots with per-snapshot audits and diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<SystemState>,
    pub audits: Vec<EnergyAudit>,
    /// Max norm of the full right-hand side per snapshot.
    pub rhs_norms: Vec<f64>,
    /// First snapshot time with `||rhs||_inf` below the steady-state
    /// threshold, if any.
    pub steady_state_time: Option<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &SystemState {
        self.snapshots.last().expect("trajectory holds at least the initial state")
    }
}

// ---------------------------------------------------------------------------
// Implicit diffusion solvers
// ---------------------------------------------------------------------------

/// Prefactored Thomas solve of `(I - mu L) x = rhs` with the mirror stencil.
#[derive(Debug, Clone)]
struct Thomas {
    n: usize,
    sub: Vec<f64>,
    diag: Vec<f64>,
    cp: Vec<f64>,
}

impl Thomas {
    fn new(n: usize, h: f64, mu: f64) -> Self {
        let s = mu / (h * h);
        let mut sub = vec![-s; n];
        sub[0] = 0.0;
        sub[n - 1] = -2.0 * s;
        let mut sup = vec![-s; n];
        sup[0] = -2.0 * s;
        sup[n - 1] = 0.0;
        let diag = vec![1.0 + 2.0 * s; n];
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = sup[0] / diag[0];
        dp[0] = diag[0];
        for i in 1..n {
            dp[i] = diag[i] - sub[i] * cp[i - 1];
            cp[i] = sup[i] / dp[i];
        }
        Thomas { n, sub, diag: dp, cp }
    }

    fn solve_into(&self, rhs: &mut [f64], scratch: &mut [f64]) {
        let n = self.n;
        scratch[0] = rhs[0] / self.diag[0];
        for i in 1..n {
            scratch[i] = (rhs[i] - self.sub[i] * scratch[i - 1]) / self.diag[i];
        }
        rhs[n - 1] = scratch[n - 1];
        for i in (0..n - 1).rev() {
            rhs[i] = scratch[i] - self.cp[i] * rhs[i + 1];
        }
    }
}

/// Applies `(I + mu L)` with the mirror stencil, in place via scratch.
fn apply_shifted_stencil(values: &mut [f64], scratch: &mut [f64], grid: &Grid, axis_mu: &[f64]) {
    scratch.copy_from_slice(values);
    for (axis, &mu) in axis_mu.iter().enumerate() {
        let n = grid.n(axis);
        let h2 = grid.spacing(axis) * grid.spacing(axis);
        let (stride, lines, line_stride) = grid_ops::axis_layout(grid, axis);
        for line in 0..lines {
            let base = line * line_stride;
            for i in 0..n {
                let c = scratch[base + i * stride];
                let lo = if i == 0 {
                    scratch[base + stride]
                } else {
                    scratch[base + (i - 1) * stride]
                };
                let hi = if i == n - 1 {
                    scratch[base + (n - 2) * stride]
                } else {
                    scratch[base + (i + 1) * stride]
                };
                values[base + i * stride] += mu * (lo - 2.0 * c + hi) / h2;
            }
        }
    }
}

#[derive(Debug, Clone)]
enum SpeciesSolver {
    /// Zero diffusion: identity.
    Identity,
    /// 1D implicit solve (backward Euler step or CN half-step).
    Line { thomas: Thomas, cn_mu: Option<f64> },
    /// 2D solve in the cosine eigenbasis: coefficient-wise multipliers.
    Modal { mult: Vec<f64> },
}

/// Cached diffusion solvers for one (model, dt, scheme) combination.
#[derive(Debug)]
struct DiffusionSolvers {
    per_species: Vec<SpeciesSolver>,
    transform: Option<CosineTransform>,
}

impl DiffusionSolvers {
    fn new(model: &Model, dt: f64, scheme: Scheme) -> Self {
        let grid = model.grid();
        let needs_modal = grid.dim() == 2 && model.diffusion().iter().any(|&d| d != 0.0);
        let transform = needs_modal.then(|| CosineTransform::new(grid));
        let per_species = model
            .diffusion()
            .iter()
            .map(|&d| {
                if d == 0.0 {
                    return SpeciesSolver::Identity;
                }
                // Backward Euler uses mu = d dt; a CN half-step solves with
                // mu = d dt / 4 after applying (I + mu L).
                let mu = match scheme {
                    Scheme::ImexEuler => d * dt,
                    Scheme::Strang => d * dt / 4.0,
                };
                if grid.dim() == 1 {
                    SpeciesSolver::Line {
                        thomas: Thomas::new(grid.n(0), grid.spacing(0), mu),
                        cn_mu: (scheme == Scheme::Strang).then_some(mu),
                    }
                } else {
                    let t = transform.as_ref().expect("transform built for 2D");
                    let mult = (0..grid.len())
                        .map(|idx| {
                            let lam = t.eigenvalue(idx);
                            match scheme {
                                Scheme::ImexEuler => 1.0 / (1.0 - mu * lam),
                                Scheme::Strang => (1.0 + mu * lam) / (1.0 - mu * lam),
                            }
                        })
                        .collect();
                    SpeciesSolver::Modal { mult }
                }
            })
            .collect();
        DiffusionSolvers { per_species, transform }
    }

    /// One diffusion stage for species `s` (a full implicit step for IMEX,
    /// a CN half-step for Strang), in place.
    fn apply(&self, s: usize, field: &mut Field, grid: &Grid, scratch: &mut Vec<f64>) -> Result<()> {
        match &self.per_species[s] {
            SpeciesSolver::Identity => Ok(()),
            SpeciesSolver::Line { thomas, cn_mu } => {
                scratch.resize(field.len(), 0.0);
                if let Some(mu) = cn_mu {
                    apply_shifted_stencil(field.values_mut(), scratch, grid, &[*mu]);
                }
                thomas.solve_into(field.values_mut(), scratch);
                Ok(())
            }
            SpeciesSolver::Modal { mult } => {
                let t = self.transform.as_ref().expect("modal solver has transform");
                let mut modal = t.to_modal(field)?;
                for (c, m) in modal.iter_mut().zip(mult) {
                    *c *= m;
                }
                *field = t.from_modal(&modal)?;
                Ok(())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

/// Reusable stepper holding the factored implicit solves.
pub struct Stepper<'m> {
    model: &'m Model,
    dt: f64,
    scheme: Scheme,
    solvers: DiffusionSolvers,
}

impl<'m> Stepper<'m> {
    pub fn new(model: &'m Model, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        Ok(Stepper {
            model,
            dt,
            scheme,
            solvers: DiffusionSolvers::new(model, dt, scheme),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances the state by one step of `dt`.
    pub fn step(&self, state: &SystemState) -> Result<SystemState> {
        if state.fields.len() != self.model.n_species() {
            return Err(Error::mismatch("state does not match the model species"));
        }
        let grid = self.model.grid();
        let dt = self.dt;
        let mut scratch = Vec::new();
        let mut fields = state.fields.clone();
        match self.scheme {
            Scheme::ImexEuler => {
                let reaction = self.model.reaction_terms(&fields)?;
                for (s, f) in fields.iter_mut().enumerate() {
                    for (v, r) in f.values_mut().iter_mut().zip(reaction[s].values()) {
                        *v += dt * r;
                    }
                    self.solvers.apply(s, f, grid, &mut scratch)?;
                }
            }
            Scheme::Strang => {
                for (s, f) in fields.iter_mut().enumerate() {
                    self.solvers.apply(s, f, grid, &mut scratch)?;
                }
                // Explicit midpoint for the reaction flow.
                let k1 = self.model.reaction_terms(&fields)?;
                let mid: Vec<Field> = fields
                    .iter()
                    .zip(&k1)
                    .map(|(f, k)| f.zip_with(k, |a, b| a + 0.5 * dt * b))
                    .collect();
                let k2 = self.model.reaction_terms(&mid)?;
                for (f, k) in fields.iter_mut().zip(&k2) {
                    for (v, r) in f.values_mut().iter_mut().zip(k.values()) {
                        *v += dt * r;
                    }
                }
                for (s, f) in fields.iter_mut().enumerate() {
                    self.solvers.apply(s, f, grid, &mut scratch)?;
                }
            }
        }
        let new_state = SystemState {
            fields,
            time: state.time + dt,
        };
        for f in &new_state.fields {
            if f.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::solver(format!(
                    "non-finite concentration at t = {}",
                    new_state.time
                )));
            }
        }
        let min_c = new_state.min_concentration();
        if min_c < NEGATIVE_ABORT {
            return Err(Error::solver(format!(
                "negative concentration {min_c:.3e} at t = {} exceeds tolerance",
                new_state.time
            )));
        }
        Ok(new_state)
    }
}

/// Single step without a prebuilt [`Stepper`].
pub fn step(state: &SystemState, model: &Model, dt: f64, scheme: Scheme) -> Result<SystemState> {
    Stepper::new(model, dt, scheme)?.step(state)
}

/// Integrates `model` from `initial` until `cfg.t_end`, auditing every
/// snapshot against the reference `eq` (pass any positive reference for open
/// systems; those audits are diagnostics only).
pub fn integrate(
    model: &Model,
    initial: &SystemState,
    cfg: &StepperConfig,
    eq: &EquilibriumState,
) -> Result<Trajectory> {
    cfg.validate()?;
    if initial.min_concentration() < 0.0 {
        return Err(Error::invalid("initial state must be nonnegative"));
    }
    let stepper = Stepper::new(model, cfg.dt, cfg.scheme)?;
    let span = cfg.t_end - initial.time;
    let n_steps = (span / cfg.dt).round().max(1.0) as usize;

    let mut traj = Trajectory {
        snapshots: Vec::new(),
        audits: Vec::new(),
        rhs_norms: Vec::new(),
        steady_state_time: None,
    };
    let record = |state: &SystemState, traj: &mut Trajectory| -> Result<()> {
        let audit = energetics::audit(model, &state.fields, eq)?;
        let rhs_inf = model.rhs_inf_norm(&state.fields)?;
        if rhs_inf < STEADY_STATE_TOL && traj.steady_state_time.is_none() {
            traj.steady_state_time = Some(state.time);
        }
        traj.audits.push(audit);
        traj.rhs_norms.push(rhs_inf);
        traj.snapshots.push(state.clone());
        Ok(())
    };

    let mut state = initial.clone();
    record(&state, &mut traj)?;
    for k in 1..=n_steps {
        state = stepper.step(&state)?;
        if k % cfg.snapshot_every == 0 || k == n_steps {
            record(&state, &mut traj)?;
        }
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// CSV header of `diagnostics.csv`.
pub const DIAGNOSTICS_CSV_HEADER: &str =
    "t,mass,free_energy,diss_diffusion,diss_reaction,min_concentration,rhs_inf";

/// Writes `diagnostics.csv` plus one `<species>_<index>.csv` per snapshot
/// field into `dir`.
pub fn export_trajectory(traj: &Trajectory, model: &Model, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut diag = String::from(DIAGNOSTICS_CSV_HEADER);
    diag.push('\n');
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let audit = &traj.audits[i];
        diag.push_str(&audit.csv_row(snap.time));
        diag.push(',');
        diag.push_str(&grid_ops::fmt17(traj.rhs_norms[i]));
        diag.push('\n');
    }
    std::fs::write(dir.join("diagnostics.csv"), diag)?;
    for (i, snap) in traj.snapshots.iter().enumerate() {
        for (s, name) in model.species().iter().enumerate() {
            let path = dir.join(format!("{name}_{i}.csv"));
            let file = std::fs::File::create(path)?;
            grid_ops::write_field_csv(&snap.fields[s], model.grid(), std::io::BufWriter::new(file))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energetics::equilibrium_conserved;
    use crate::models::{build_rhs, ModelKind, ModelSpec, Params};

    const PI: f64 = std::f64::consts::PI;

    fn closed_model(n: usize, params: &Params) -> Model {
        build_rhs(&ModelSpec {
            kind: ModelKind::ClosedSix,
            params: params.clone(),
            grid: Grid::line(n, PI).unwrap(),
        })
        .unwrap()
    }

    #[test]
    fn heat_decay_matches_analytic_rate() {
        // All reaction rates zero: pure diffusion of cos(2x) decays by
        // exp(-d k^2 t) within 1% for small dt.
        let mut p = Params::default();
        for v in [
            &mut p.p1, &mut p.p2, &mut p.m_s, &mut p.m_h, &mut p.m_w, &mut p.r,
            &mut p.eps1, &mut p.eps2, &mut p.eps3, &mut p.eps4,
        ] {
            *v = 0.0;
        }
        p.d_vs = 1.0;
        let model = closed_model(257, &p);
        let grid = model.grid().clone();
        let mut fields: Vec<Field> = (0..6).map(|_| Field::constant(&grid, 1.0)).collect();
        fields[0] = Field::from_fn(&grid, |x, _| 2.0 + (2.0 * x).cos());
        let cfg = StepperConfig {
            dt: 1e-3,
            t_end: 0.25,
            scheme: Scheme::ImexEuler,
            snapshot_every: 1000,
            ..Default::default()
        };
        let eq = EquilibriumState::reference(vec![1.0; 6]).unwrap();
        let traj = integrate(&model, &SystemState::new(fields, 0.0), &cfg, &eq).unwrap();
        let final_vs = &traj.final_state().fields[0];
        let amp = (final_vs.max() - final_vs.min()) / 2.0;
        let expect = (-4.0f64 * 0.25).exp();
        assert!(
            (amp - expect).abs() < 0.01 * expect,
            "amplitude {amp}, expected {expect}"
        );
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let p = Params::default();
        let model = closed_model(65, &p);
        let grid = model.grid().clone();
        let eq = equilibrium_conserved(&p, p.m0).unwrap();
        let fields: Vec<Field> = eq.values().iter().map(|&v| Field::constant(&grid, v)).collect();
        let state = SystemState::new(fields, 0.0);
        let stepper = Stepper::new(&model, 1e-2, Scheme::ImexEuler).unwrap();
        let mut s = state.clone();
        for _ in 0..10 {
            s = stepper.step(&s).unwrap();
        }
        for (f0, f1) in state.fields.iter().zip(&s.fields) {
            let d = f0
                .values()
                .iter()
                .zip(f1.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(d < 1e-12, "drift {d}");
        }
    }

    #[test]
    fn per_step_mass_drift_is_rounding_level() {
        let p = Params::default();
        let model = closed_model(64, &p);
        let grid = model.grid().clone();
        let fields: Vec<Field> = (0..6)
            .map(|s| Field::from_fn(&grid, |x, _| 0.5 + 0.3 * ((s as f64 + 1.0) * x).cos().abs()))
            .collect();
        let mass = |fs: &[Field]| -> f64 {
            fs.iter().map(|f| grid_ops::integrate(f, &grid).unwrap()).sum()
        };
        let m0 = mass(&fields);
        for scheme in [Scheme::ImexEuler, Scheme::Strang] {
            let stepper = Stepper::new(&model, 1e-2, scheme).unwrap();
            let s1 = stepper.step(&SystemState::new(fields.clone(), 0.0)).unwrap();
            let drift = (mass(&s1.fields) - m0).abs() / m0;
            assert!(drift < 1e-12, "{scheme:?} drift {drift}");
        }
    }

    #[test]
    fn mass_conserved_in_2d_modal_solve() {
        let p = Params::default();
        let model = build_rhs(&ModelSpec {
            kind: ModelKind::ClosedSix,
            params: p,
            grid: Grid::rectangle(17, 19, PI, PI).unwrap(),
        })
        .unwrap();
        let grid = model.grid().clone();
        let fields: Vec<Field> = (0..6)
            .map(|s| Field::from_fn(&grid, |x, y| 0.6 + 0.2 * (x + 0.3 * s as f64).cos() * y.cos()))
            .collect();
        let mass = |fs: &[Field]| -> f64 {
            fs.iter().map(|f| grid_ops::integrate(f, &grid).unwrap()).sum()
        };
        let m0 = mass(&fields);
        for scheme in [Scheme::ImexEuler, Scheme::Strang] {
            let stepper = Stepper::new(&model, 5e-3, scheme).unwrap();
            let s1 = stepper.step(&SystemState::new(fields.clone(), 0.0)).unwrap();
            let drift = (mass(&s1.fields) - m0).abs() / m0;
            assert!(drift < 1e-12, "{scheme:?} 2d drift {drift}");
        }
    }

    #[test]
    fn config_validation() {
        let cfg = StepperConfig {
            dt: 2.0,
            t_end: 1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = StepperConfig {
            snapshot_every: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn integrate_rejects_t_end_smaller_than_dt() {
        let p = Params::default();
        let model = closed_model(33, &p);
        let grid = model.grid().clone();
        let eq = equilibrium_conserved(&p, p.m0).unwrap();
        let fields: Vec<Field> = eq.values().iter().map(|&v| Field::constant(&grid, v)).collect();
        let cfg = StepperConfig {
            dt: 0.5,
            t_end: 0.1,
            ..Default::default()
        };
        assert!(integrate(&model, &SystemState::new(fields, 0.0), &cfg, &eq).is_err());
    }

    #[test]
    fn export_writes_diagnostics_and_field_files() {
        let p = Params::default();
        let model = closed_model(17, &p);
        let grid = model.grid().clone();
        let eq = equilibrium_conserved(&p, p.m0).unwrap();
        let fields: Vec<Field> = eq
            .values()
            .iter()
            .map(|&v| Field::from_fn(&grid, |x, _| v * (1.0 + 0.1 * x.cos())))
            .collect();
        let cfg = StepperConfig {
            dt: 1e-2,
            t_end: 0.05,
            snapshot_every: 2,
            ..Default::default()
        };
        let traj = integrate(&model, &SystemState::new(fields, 0.0), &cfg, &eq).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_trajectory(&traj, &model, dir.path()).unwrap();
        let diag = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
        assert!(diag.starts_with(DIAGNOSTICS_CSV_HEADER));
        assert_eq!(diag.lines().count(), traj.snapshots.len() + 1);
        assert!(dir.path().join("vs_0.csv").exists());
        assert!(dir.path().join("a_0.csv").exists());
    }
}
