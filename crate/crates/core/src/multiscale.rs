//! Fast-slow machinery: prepared initial data, epsilon-sweep convergence
//! studies of the fast-slow pair against its reduced limit, slow-manifold
//! graph approximations with invariance-defect diagnostics, and the
//! projected slow flow on the spectral slow subspace.
//!
//! The convergence study measures the H1 distance (per component, summed in
//! quadrature) between the fast-slow solution and the reduced solution at a
//! fixed final time, from shared initial data. The internal data recipe uses
//! random-sign cosine spectra with `k^{-5/2}` amplitude decay: borderline-H2
//! regularity, for which the square-root error bound of the fast-reaction
//! limit is sharp. Smooth data would converge at first order instead and the
//! sweep would not probe the bound.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid_ops::{self, Field, Grid, Norm, Part, SpectralSplit};
use crate::models::{self, Model, ModelKind, ModelSpec, Params};
use crate::solver::{self, StepperConfig, SystemState};

/// Relative step of the directional finite differences on graph maps.
const FD_RELATIVE_STEP: f64 = 1e-6;
/// Relative fast-mode content allowed in slow-flow inputs.
const SLOW_INPUT_TOL: f64 = 1e-10;

/// Prepared initial data for the fast species: the critical-manifold value
/// `h0(v_h0, w0)`, which removes the initial fast transient.
pub fn prepare_initial_data(v_h0: &Field, w0: &Field, params: &Params) -> Result<Field> {
    models::critical_manifold_h0(v_h0, w0, params)
}

// ---------------------------------------------------------------------------
// Slow-manifold approximation
// ---------------------------------------------------------------------------

/// Configuration of the slow-manifold graph approximation.
#[derive(Debug, Clone)]
pub struct SlowManifoldApprox {
    order: u8,
    split: SpectralSplit,
    eps: f64,
    project_correction: bool,
}

impl SlowManifoldApprox {
    /// `order` 0 reproduces the critical manifold; order 1 adds the first
    /// asymptotic correction scaled by `eps`. Requires `eps < zeta` of the
    /// split whenever `eps > 0`.
    pub fn new(order: u8, split: SpectralSplit, eps: f64) -> Result<Self> {
        if order > 1 {
            return Err(Error::invalid(format!("graph order must be 0 or 1, got {order}")));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::invalid(format!("eps must be nonnegative, got {eps}")));
        }
        if eps > 0.0 && eps / split.zeta() >= 1.0 {
            return Err(Error::invalid(format!(
                "outside the slow-manifold regime: eps/zeta = {} >= 1",
                eps / split.zeta()
            )));
        }
        Ok(SlowManifoldApprox {
            order,
            split,
            eps,
            project_correction: false,
        })
    }

    /// Also project the first-order correction onto the slow subspace
    /// (off by default; the graph maps slow data into the full space).
    pub fn with_projected_correction(mut self, flag: bool) -> Self {
        self.project_correction = flag;
        self
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn split(&self) -> &SpectralSplit {
        &self.split
    }
}

/// Evaluates the approximate slow-manifold graph at `(v_h, w)`.
pub fn slow_manifold_approx(
    v_h: &Field,
    w: &Field,
    params: &Params,
    approx: &SlowManifoldApprox,
) -> Result<Field> {
    let h0 = models::critical_manifold_h0(v_h, w, params)?;
    if approx.order == 0 || approx.eps == 0.0 {
        return Ok(h0);
    }
    let grid = approx.split.grid();
    let mut h1 = models::first_order_graph_correction(v_h, w, params, grid)?;
    if approx.project_correction {
        h1 = grid_ops::project(&h1, &approx.split, Part::Slow)?;
    }
    Ok(h0.add(&h1.scaled(approx.eps)))
}

/// Invariance defect of a candidate graph `h` at the state `(v_h, w)`:
/// the H1 norm of
/// `eps (D_vh h . g1 + D_w h . g2) - eps d_vs Lap h - f(h, v_h, w)`,
/// with the directional derivatives of the graph taken by central finite
/// differences (relative step 1e-6).
pub fn invariance_defect<G>(
    graph: G,
    v_h: &Field,
    w: &Field,
    params: &Params,
    eps: f64,
    grid: &Grid,
) -> Result<f64>
where
    G: Fn(&Field, &Field) -> Result<Field>,
{
    let h = graph(v_h, w)?;
    let (g1, g2) = models::slow_rhs_on_graph(v_h, w, &h, params, grid)?;
    let d_vh = directional_derivative(&graph, v_h, w, &g1, true)?;
    let d_w = directional_derivative(&graph, v_h, w, &g2, false)?;
    let lap_h = grid_ops::laplacian_neumann(&h, grid)?;
    let n = grid.len();
    let mut defect = Vec::with_capacity(n);
    for i in 0..n {
        let fast_rhs = -(params.p1 * w.values()[i] + params.m_s) * h.values()[i]
            + params.p2 * v_h.values()[i];
        defect.push(
            eps * (d_vh.values()[i] + d_w.values()[i])
                - eps * params.d_vs * lap_h.values()[i]
                - fast_rhs,
        );
    }
    grid_ops::norm(&Field::new(defect, grid)?, grid, Norm::H1)
}

/// Central difference of the graph along direction `dir` in its first
/// (`in_vh = true`) or second argument.
fn directional_derivative<G>(
    graph: &G,
    v_h: &Field,
    w: &Field,
    dir: &Field,
    in_vh: bool,
) -> Result<Field>
where
    G: Fn(&Field, &Field) -> Result<Field>,
{
    let dir_norm = dir.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if dir_norm == 0.0 {
        return Ok(Field::from_raw(vec![0.0; dir.len()]));
    }
    let base = if in_vh { v_h } else { w };
    let base_scale = base.values().iter().fold(1.0f64, |m, &v| m.max(v.abs()));
    let delta = FD_RELATIVE_STEP * base_scale / dir_norm;
    let plus = base.zip_with(dir, |b, d| b + delta * d);
    let minus = base.zip_with(dir, |b, d| b - delta * d);
    let (hp, hm) = if in_vh {
        (graph(&plus, w)?, graph(&minus, w)?)
    } else {
        (graph(v_h, &plus)?, graph(v_h, &minus)?)
    };
    Ok(hp.zip_with(&hm, |a, b| (a - b) / (2.0 * delta)))
}

/// Full right-hand side of the projected slow flow at slow inputs:
/// diffusion plus the slow-projected nonlinear coupling. Inputs with
/// fast-mode content are rejected.
pub fn slow_flow_rhs(
    v_h_s: &Field,
    w_s: &Field,
    params: &Params,
    approx: &SlowManifoldApprox,
) -> Result<(Field, Field)> {
    let split = &approx.split;
    let grid = split.grid();
    for (name, f) in [("v_h", v_h_s), ("w", w_s)] {
        let fast = grid_ops::project(f, split, Part::Fast)?;
        let fast_norm = grid_ops::norm(&fast, grid, Norm::L2)?;
        let scale = grid_ops::norm(f, grid, Norm::L2)?.max(1.0);
        if fast_norm > SLOW_INPUT_TOL * scale {
            return Err(Error::invalid(format!(
                "slow-flow input '{name}' has fast-mode content {fast_norm:.3e}"
            )));
        }
    }
    let h = slow_manifold_approx(v_h_s, w_s, params, approx)?;
    let wh = w_s.zip_with(&h, |a, b| a * b);
    let p_wh = grid_ops::project(&wh, split, Part::Slow)?;
    let lap_vh = grid_ops::laplacian_neumann(v_h_s, grid)?;
    let lap_w = grid_ops::laplacian_neumann(w_s, grid)?;
    let rhs_vh = lap_vh
        .scaled(params.d_vh)
        .add(&p_wh.scaled(2.0 * params.p1))
        .add(&v_h_s.map(|v| -(params.m_h + params.p2) * v));
    let rhs_w = lap_w
        .scaled(params.d_w)
        .sub(&p_wh.scaled(params.p1))
        .add(&w_s.map(|v| -params.m_w * v + params.a0));
    Ok((rhs_vh, rhs_w))
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

/// Result of an epsilon-sweep convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub eps_values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log eps`.
    pub fitted_rate: f64,
    pub norm: String,
    pub prepared: bool,
    pub runtime_seconds: f64,
}

impl ConvergenceReport {
    pub fn to_json(&self) -> String {
        let list = |v: &[f64]| {
            v.iter().map(|&x| grid_ops::fmt17(x)).collect::<Vec<_>>().join(", ")
        };
        format!(
            "{{\n  \"norm\": \"{}\",\n  \"prepared\": {},\n  \"eps\": [{}],\n  \"errors\": [{}],\n  \"fitted_rate\": {},\n  \"runtime_seconds\": {}\n}}\n",
            self.norm,
            self.prepared,
            list(&self.eps_values),
            list(&self.errors),
            grid_ops::fmt17(self.fitted_rate),
            grid_ops::fmt17(self.runtime_seconds)
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,error\n");
        for (e, err) in self.eps_values.iter().zip(&self.errors) {
            out.push_str(&format!("{},{}\n", grid_ops::fmt17(*e), grid_ops::fmt17(*err)));
        }
        out
    }
}

/// Tunables of [`convergence_study`].
#[derive(Debug, Clone)]
pub struct StudyOptions {
    /// Seed of the random-sign spectra in the initial data.
    pub seed: u64,
    /// Time step; the default resolves the fastest reaction rate of the
    /// stiffest sweep member with a safety factor.
    pub dt: Option<f64>,
    /// Relative amplitude of the rough perturbation on the initial data.
    pub amplitude: f64,
    /// Thread count for sweep members (default: rayon's global pool).
    pub jobs: Option<usize>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            seed: 0,
            dt: None,
            amplitude: 0.4,
            jobs: None,
        }
    }
}

/// Random-sign cosine spectrum with `k^{-5/2}` decay around a unit base
/// level: `1 + amplitude * sum_k k^{-5/2} s_k phi_k / Z`, `|s_k| = 1`.
/// Axis-0 modes only, so the recipe works on 1D and 2D grids alike.
fn rough_field(grid: &Grid, rng: &mut ChaCha8Rng, amplitude: f64) -> Result<Field> {
    let t = grid_ops::CosineTransform::new(grid);
    let n0 = grid.n(0);
    let mut modal = vec![0.0; grid.len()];
    let z: f64 = (1..n0).map(|k| (k as f64).powf(-2.5)).sum();
    modal[0] = 1.0;
    for k in 1..n0 {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        modal[k] = amplitude * sign * (k as f64).powf(-2.5) / z;
    }
    t.from_modal(&modal)
}

/// Shared initial data of the study: rough `(v_h0, w0)` and the fast species
/// either prepared on the critical manifold or displaced off it.
pub fn study_initial_data(
    grid: &Grid,
    params: &Params,
    prepared: bool,
    seed: u64,
    amplitude: f64,
) -> Result<(Field, Field, Field)> {
    if !(amplitude >= 0.0 && amplitude < 1.0) {
        return Err(Error::invalid("amplitude must lie in [0, 1) to keep the data positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v_h0 = rough_field(grid, &mut rng, amplitude)?;
    let w0 = rough_field(grid, &mut rng, amplitude)?;
    let mut vs0 = prepare_initial_data(&v_h0, &w0, params)?;
    if !prepared {
        vs0 = vs0.map(|v| v + 0.25);
    }
    Ok((vs0, v_h0, w0))
}

/// Integrates the fast-slow system for each sweep member and the reduced
/// system once, all from the same initial data, and fits the decay rate of
/// the H1 error at `t_final` against `eps`.
pub fn convergence_study(
    eps_list: &[f64],
    t_final: f64,
    grid: &Grid,
    params: &Params,
    prepared: bool,
    opts: &StudyOptions,
) -> Result<ConvergenceReport> {
    let started = std::time::Instant::now();
    if eps_list.len() < 3 {
        return Err(Error::invalid(format!(
            "epsilon sweep needs at least 3 values to fit a rate, got {}",
            eps_list.len()
        )));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("epsilon sweep must be strictly decreasing"));
    }
    if eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::invalid("epsilon values must be positive"));
    }
    if !(t_final > 0.0) {
        return Err(Error::invalid(format!("t_final must be positive, got {t_final}")));
    }
    // Fixed zeta for the whole sweep keeps every member inside the
    // timescale-separation regime eps/zeta < 1.
    let zeta = 10.0 * eps_list[0];
    for &eps in eps_list {
        if eps / zeta >= 1.0 {
            return Err(Error::invalid("sweep member violates eps/zeta < 1"));
        }
    }

    // Shared parameters: the reduced system is the m_v = m_h limit.
    let mut shared = params.clone();
    shared.zeta = zeta;
    shared.m_v = Some(params.m_h);

    let (vs0, vh0, w0) = study_initial_data(grid, &shared, prepared, opts.seed, opts.amplitude)?;

    // The explicit reaction treatment must resolve the fastest rate
    // (p1 w + m_s)/eps of the stiffest member.
    let w_bound = w0.max().max(if shared.m_w > 0.0 { shared.a0 / shared.m_w } else { w0.max() });
    let rate_bound = shared.m_s + shared.p1 * 1.5 * w_bound + shared.p2;
    let eps_min = *eps_list.last().expect("nonempty");
    let dt = opts.dt.unwrap_or_else(|| (eps_min / (8.0 * rate_bound)).min(1e-3));
    let cfg = StepperConfig {
        dt,
        t_end: t_final,
        scheme: solver::Scheme::ImexEuler,
        snapshot_every: usize::MAX,
        positivity_floor_tol: 1e-12,
    };

    let reduced_final = {
        let mut p = shared.clone();
        p.eps = 0.0;
        let model = models::build_rhs(&ModelSpec {
            kind: ModelKind::HollingIIReduced,
            params: p,
            grid: grid.clone(),
        })?;
        run_to_final(&model, vec![vh0.clone(), w0.clone()], &cfg)?
    };
    let vs_reduced = models::critical_manifold_h0(&reduced_final[0], &reduced_final[1], &shared)?;

    let run_member = |&eps: &f64| -> Result<f64> {
        let mut p = shared.clone();
        p.eps = eps;
        let model = models::build_rhs(&ModelSpec {
            kind: ModelKind::HollingIIFastSlow,
            params: p,
            grid: grid.clone(),
        })?;
        let fin = run_to_final(&model, vec![vs0.clone(), vh0.clone(), w0.clone()], &cfg)
            .map_err(|e| Error::solver(format!("sweep member eps={eps}: {e}")))?;
        let d_vs = grid_ops::norm(&fin[0].sub(&vs_reduced), grid, Norm::H1)?;
        let d_vh = grid_ops::norm(&fin[1].sub(&reduced_final[0]), grid, Norm::H1)?;
        let d_w = grid_ops::norm(&fin[2].sub(&reduced_final[1]), grid, Norm::H1)?;
        Ok((d_vs * d_vs + d_vh * d_vh + d_w * d_w).sqrt())
    };

    let errors: Result<Vec<f64>> = match opts.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Error::solver(format!("thread pool: {e}")))?;
            pool.install(|| eps_list.par_iter().map(run_member).collect())
        }
        None => eps_list.par_iter().map(run_member).collect(),
    };
    let errors = errors?;

    let xs: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
    let fitted_rate = fit_slope(&xs, &ys);

    Ok(ConvergenceReport {
        eps_values: eps_list.to_vec(),
        errors,
        fitted_rate,
        norm: "H1".to_string(),
        prepared,
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}

fn run_to_final(model: &Model, fields: Vec<Field>, cfg: &StepperConfig) -> Result<Vec<Field>> {
    let eq = crate::energetics::EquilibriumState::reference(vec![1.0; fields.len()])?;
    let traj = solver::integrate(model, &SystemState::new(fields, 0.0), cfg, &eq)?;
    Ok(traj.snapshots.last().expect("trajectory nonempty").fields.clone())
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let num: f64 = x.iter().zip(y).map(|(&a, &b)| (a - xm) * (b - ym)).sum();
    let den: f64 = x.iter().map(|&a| (a - xm) * (a - xm)).sum();
    num / den
}

/// Invariance defects of the order-`order` graph over an epsilon sweep, at a
/// fixed smooth test state. Returns one defect per epsilon.
pub fn invariance_defect_sweep(
    eps_list: &[f64],
    grid: &Grid,
    params: &Params,
    order: u8,
    project_correction: bool,
) -> Result<Vec<f64>> {
    if eps_list.is_empty() {
        return Err(Error::invalid("epsilon sweep must not be empty"));
    }
    let zeta = 10.0 * eps_list.iter().cloned().fold(f64::MIN, f64::max);
    let split = grid_ops::build_split(zeta, params.m_s, grid)?;
    let (v_h, w) = defect_test_state(grid);
    eps_list
        .iter()
        .map(|&eps| {
            let approx = SlowManifoldApprox::new(order, split.clone(), eps)?
                .with_projected_correction(project_correction);
            let p = params.clone();
            invariance_defect(
                |vh: &Field, wf: &Field| slow_manifold_approx(vh, wf, &p, &approx),
                &v_h,
                &w,
                params,
                eps,
                grid,
            )
        })
        .collect()
}

/// Smooth positive state used by the defect sweeps.
pub fn defect_test_state(grid: &Grid) -> (Field, Field) {
    let l = grid.length(0);
    let pi = std::f64::consts::PI;
    let v_h = Field::from_fn(grid, |x, _| {
        1.0 + 0.3 * (pi * x / l).cos() + 0.1 * (3.0 * pi * x / l).cos()
    });
    let w = Field::from_fn(grid, |x, _| 1.2 + 0.2 * (2.0 * pi * x / l).cos());
    (v_h, w)
}
