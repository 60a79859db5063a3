//! Acceptance suite: one test per criterion, each printing a pass line with
//! its measured numbers (run with `--nocapture` to see them).
//!
//! Numbering:
//!  1. equilibrium closed form vs independent Newton root-solve
//!  2. discrete mass conservation of the closed system
//!  3. free-energy monotonicity and first-order energy balance in dt
//!  4. gradient-flow / mass-action identity
//!  5. long-time attraction to the two constant equilibria
//!  6. epsilon-sweep convergence rate of the fast-slow pair (about 1/2)
//!  7. fast attraction of unprepared data to the critical manifold
//!  8. invariance-defect slopes of the order-0/1 manifold graphs
//!  9. spectral splitting algebra and the cutoff rule
//! 10. consistency of the Holling reductions
//! 11. temporal orders of both schemes and spatial order of the Laplacian

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use envara_core::energetics::{
    affinity, detailed_balance_residual, equilibrium_conserved, equilibrium_extinct,
    EquilibriumState,
};
use envara_core::grid_ops::{
    self, build_split, laplacian_neumann, norm, project, Field, Grid, Norm, Part,
};
use envara_core::models::{
    build_rhs, critical_manifold_h0, holling_response, HollingType, ModelKind, ModelSpec, Params,
};
use envara_core::multiscale::{
    convergence_study, defect_test_state, fit_slope, invariance_defect_sweep, StudyOptions,
};
use envara_core::reaction_net::ReactionNetwork;
use envara_core::solver::{integrate, Scheme, StepperConfig, SystemState};

const PI: f64 = std::f64::consts::PI;

/// Parameter set of the fast-slow studies (criteria 6-8). The fast species
/// keeps its diffusion; the slow pair is reaction-dominated so the rough
/// initial spectra survive to the measurement time.
fn gspt_params() -> Params {
    Params {
        p1: 0.5,
        p2: 0.5,
        m_s: 1.0,
        m_h: 0.3,
        m_w: 0.5,
        a0: 0.5,
        d_vs: 2.0,
        d_vh: 0.0,
        d_w: 0.0,
        ..Params::default()
    }
}

/// Parameter set of the long-time runs (criterion 5): all rates 2 give the
/// closed system a comfortable linearization gap (about 0.36).
fn fast_relaxing_params() -> Params {
    Params {
        p1: 2.0,
        p2: 2.0,
        m_s: 2.0,
        m_h: 2.0,
        m_w: 2.0,
        r: 2.0,
        eps1: 2.0,
        eps2: 2.0,
        eps3: 2.0,
        eps4: 2.0,
        d_vs: 0.5,
        d_vh: 0.5,
        d_w: 0.5,
        d_bs: 0.5,
        d_bh: 0.5,
        d_a: 0.5,
        ..Params::default()
    }
}

fn closed_network(p: &Params) -> ReactionNetwork {
    ReactionNetwork::parse(&envara_core::models::closed_network_dsl(p)).unwrap()
}

// ---------------------------------------------------------------------------
// Criterion 1
// ---------------------------------------------------------------------------

/// Gaussian elimination with partial pivoting (oracle-side linear solve).
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        for j in 0..n {
            a.swap(col * n + j, piv * n + j);
        }
        b.swap(col, piv);
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        b[col] /= a[col * n + col];
        for r in 0..col {
            b[r] -= a[r * n + col] * b[col];
        }
    }
}

fn newton_from(p: &Params, m0: f64, c: &mut Vec<f64>) -> Option<Vec<f64>> {
    for _ in 0..400 {
        let g = [
            p.m_w * c[2] - p.r * c[5],
            p.m_s * c[0] - p.eps1 * c[3],
            p.m_h * c[1] - p.eps2 * c[4],
            p.p1 * c[2] * c[0] - p.eps3 * c[1] * c[1],
            p.p2 * c[1] - p.eps4 * c[0],
            c.iter().sum::<f64>() - m0,
        ];
        let norm = g.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        if norm < 1e-13 * m0.max(1.0) {
            return Some(c.clone());
        }
        #[rustfmt::skip]
        let mut jac = vec![
            0.0, 0.0, p.m_w, 0.0, 0.0, -p.r,
            p.m_s, 0.0, 0.0, -p.eps1, 0.0, 0.0,
            0.0, p.m_h, 0.0, 0.0, -p.eps2, 0.0,
            p.p1 * c[2], -2.0 * p.eps3 * c[1], p.p1 * c[0], 0.0, 0.0, 0.0,
            -p.eps4, p.p2, 0.0, 0.0, 0.0, 0.0,
            1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
        ];
        let mut step = g.to_vec();
        solve_dense(&mut jac, &mut step, 6);
        // Interior-point style damping: a component never shrinks by more
        // than 10x per iteration, so the iterate stays strictly positive.
        for (ci, s) in c.iter_mut().zip(&step) {
            let trial = *ci - s;
            *ci = if trial > 0.1 * *ci { trial } else { 0.1 * *ci };
        }
    }
    None
}

/// Independent oracle: damped Newton on the balance-plus-mass system from
/// random positive starts, rejecting the boundary (extinct) root.
fn newton_equilibrium(p: &Params, m0: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    for _ in 0..40 {
        let raw: Vec<f64> = (0..6).map(|_| 0.2 + 0.8 * rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let mut c: Vec<f64> = raw.iter().map(|v| m0 * v / total).collect();
        if let Some(root) = newton_from(p, m0, &mut c) {
            if root.iter().all(|&v| v > 1e-9 * m0) {
                return root;
            }
        }
    }
    panic!("oracle failed to locate the interior root");
}

#[test]
fn criterion_01_equilibrium_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_rel: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for _ in 0..20 {
        let mut p = Params::default();
        let mut draw = |rng: &mut ChaCha8Rng| 0.2 + 2.8 * rng.gen::<f64>();
        p.p1 = draw(&mut rng);
        p.p2 = draw(&mut rng);
        p.m_s = draw(&mut rng);
        p.m_h = draw(&mut rng);
        p.m_w = draw(&mut rng);
        p.r = draw(&mut rng);
        p.eps1 = draw(&mut rng);
        p.eps2 = draw(&mut rng);
        p.eps3 = draw(&mut rng);
        p.eps4 = draw(&mut rng);
        let m0 = 0.5 + 19.5 * rng.gen::<f64>();
        let eq = equilibrium_conserved(&p, m0).unwrap();
        worst_res = worst_res.max(detailed_balance_residual(&p, eq.values()));
        let oracle = newton_equilibrium(&p, m0, &mut rng);
        for (a, b) in eq.values().iter().zip(&oracle) {
            worst_rel = worst_rel.max((a - b).abs() / b.abs().max(1e-30));
        }
    }
    assert!(worst_rel < 1e-8, "closed form vs root-solve: {worst_rel:.3e}");
    assert!(worst_res < 1e-12, "detailed-balance residual: {worst_res:.3e}");
    println!(
        "ACCEPTANCE 01 equilibrium-oracle: PASS (max rel diff {worst_rel:.2e}, max residual {worst_res:.2e})"
    );
}

// ---------------------------------------------------------------------------
// Criteria 2 and 3 share the pinned closed run: 1D n=256, dt=1e-3, T=10.
// ---------------------------------------------------------------------------

fn pinned_closed_run() -> (Params, Grid, Vec<Field>, EquilibriumState) {
    let p = Params::default();
    let grid = Grid::line(256, PI).unwrap();
    let eq = equilibrium_conserved(&p, p.m0).unwrap();
    let initial = eq
        .values()
        .iter()
        .enumerate()
        .map(|(s, &v)| {
            Field::from_fn(&grid, |x, _| v * (1.0 + 0.3 * ((s as f64 + 1.0) * x).cos()))
        })
        .collect();
    (p, grid, initial, eq)
}

#[test]
fn criterion_02_mass_conservation() {
    let (p, grid, initial, eq) = pinned_closed_run();
    let model = build_rhs(&ModelSpec {
        kind: ModelKind::ClosedSix,
        params: p,
        grid: grid.clone(),
    })
    .unwrap();
    let mass0: f64 = initial
        .iter()
        .map(|f| grid_ops::integrate(f, &grid).unwrap())
        .sum();
    let cfg = StepperConfig {
        dt: 1e-3,
        t_end: 10.0,
        scheme: Scheme::ImexEuler,
        snapshot_every: 10,
        positivity_floor_tol: 1e-12,
    };
    let traj = integrate(&model, &SystemState::new(initial, 0.0), &cfg, &eq).unwrap();
    let drift = traj
        .audits
        .iter()
        .map(|a| (a.mass - mass0).abs() / mass0)
        .fold(0.0f64, f64::max);
    assert!(drift < 1e-8, "relative mass drift {drift:.3e}");
    println!("ACCEPTANCE 02 mass-conservation: PASS (max relative drift {drift:.2e})");
}

#[test]
fn criterion_03_energy_decay_and_balance_order() {
    let (p, grid, initial, eq) = pinned_closed_run();
    let model = build_rhs(&ModelSpec {
        kind: ModelKind::ClosedSix,
        params: p,
        grid: grid.clone(),
    })
    .unwrap();

    // Monotone free energy on the pinned run, audited every step.
    let cfg = StepperConfig {
        dt: 1e-3,
        t_end: 10.0,
        scheme: Scheme::ImexEuler,
        snapshot_every: 1,
        positivity_floor_tol: 1e-12,
    };
    let traj = integrate(&model, &SystemState::new(initial.clone(), 0.0), &cfg, &eq).unwrap();
    let mut max_rise = f64::NEG_INFINITY;
    for k in 1..traj.audits.len() {
        max_rise = max_rise.max(traj.audits[k].free_energy - traj.audits[k - 1].free_energy);
    }
    assert!(max_rise <= 1e-10, "free energy rose by {max_rise:.3e}");

    // dF/dt + D_d + D_r vanishes at first order under dt-halving.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut coarsest = 0.0;
    for dt in [1e-3, 5e-4, 2.5e-4] {
        let cfg = StepperConfig {
            dt,
            t_end: 1.0,
            scheme: Scheme::ImexEuler,
            snapshot_every: 1,
            positivity_floor_tol: 1e-12,
        };
        let traj = integrate(&model, &SystemState::new(initial.clone(), 0.0), &cfg, &eq).unwrap();
        let mut worst = 0.0f64;
        for k in 0..traj.audits.len() - 1 {
            let df = (traj.audits[k + 1].free_energy - traj.audits[k].free_energy) / dt;
            let r = df + traj.audits[k].diss_diffusion + traj.audits[k].diss_reaction;
            worst = worst.max(r.abs());
        }
        if xs.is_empty() {
            coarsest = worst;
        }
        xs.push(dt.ln());
        ys.push(worst.ln());
    }
    let order = fit_slope(&xs, &ys);
    assert!(order >= 0.8, "energy balance order {order:.3}");
    println!(
        "ACCEPTANCE 03 energy-decay: PASS (max F rise {max_rise:.2e}, balance residual {coarsest:.2e} at dt=1e-3, order {order:.2})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 4
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_gradient_flow_identity() {
    let p = Params::default();
    let net = closed_network(&p);
    let eq = equilibrium_conserved(&p, p.m0).unwrap();
    let grid = Grid::line(3, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let conc: Vec<f64> = (0..6).map(|_| 0.05 + 3.0 * rng.gen::<f64>()).collect();
        let state: Vec<Field> = conc.iter().map(|&v| Field::constant(&grid, v)).collect();
        let aff = affinity(&net, &state, &eq).unwrap();
        let rates = net.mass_action_rates(&conc).unwrap();
        let (_, bwd) = net.fluxes(&conc).unwrap();
        for i in 0..net.n_reactions() {
            let lhs = bwd[i] * ((-aff[i].values()[0]).exp() - 1.0);
            let scale = rates[i].abs().max(bwd[i]).max(1e-30);
            worst = worst.max((lhs - rates[i]).abs() / scale);
        }
    }
    assert!(worst < 1e-10, "identity violated by {worst:.3e}");
    println!("ACCEPTANCE 04 gradient-flow-identity: PASS (1000 states, max rel error {worst:.2e})");
}

// ---------------------------------------------------------------------------
// Criterion 5
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_long_time_attraction() {
    let started = std::time::Instant::now();
    let p = fast_relaxing_params();
    let grid = Grid::line(64, PI).unwrap();
    let model = build_rhs(&ModelSpec {
        kind: ModelKind::ClosedSix,
        params: p.clone(),
        grid: grid.clone(),
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // Randomized positive data with total mass m0 |Omega|.
    let raw: Vec<Field> = (0..6)
        .map(|_| {
            let a = 0.2 + rng.gen::<f64>();
            let b = rng.gen::<f64>();
            let k = 1.0 + (3.0 * rng.gen::<f64>()).floor();
            Field::from_fn(&grid, |x, _| a + 0.3 * b * (k * x).cos().abs())
        })
        .collect();
    let total: f64 = raw
        .iter()
        .map(|f| grid_ops::integrate(f, &grid).unwrap())
        .sum();
    let target = p.m0 * grid.measure();
    let fields: Vec<Field> = raw.iter().map(|f| f.scaled(target / total)).collect();
    let eq = equilibrium_conserved(&p, p.m0).unwrap();
    let cfg = StepperConfig {
        dt: 2e-3,
        t_end: 60.0,
        scheme: Scheme::ImexEuler,
        snapshot_every: usize::MAX,
        positivity_floor_tol: 1e-12,
    };
    let traj = integrate(&model, &SystemState::new(fields, 0.0), &cfg, &eq).unwrap();
    let dist_coexist = traj
        .final_state()
        .fields
        .iter()
        .zip(eq.values())
        .map(|(f, &v)| f.values().iter().map(|&c| (c - v).abs()).fold(0.0f64, f64::max))
        .fold(0.0f64, f64::max);
    assert!(dist_coexist < 1e-6, "distance to coexistence {dist_coexist:.3e}");

    // Zero biotic species: only water and atmosphere relax, to the extinct
    // equilibrium split.
    let w0 = Field::from_fn(&grid, |x, _| 1.0 + 0.4 * (2.0 * x).cos());
    let a0 = Field::from_fn(&grid, |x, _| 1.5 + 0.3 * x.cos());
    let raw_mass = grid_ops::integrate(&w0, &grid).unwrap() + grid_ops::integrate(&a0, &grid).unwrap();
    let scale = p.m0 * grid.measure() / raw_mass;
    let zero = Field::constant(&grid, 0.0);
    let fields = vec![
        zero.clone(),
        zero.clone(),
        w0.scaled(scale),
        zero.clone(),
        zero,
        a0.scaled(scale),
    ];
    let eq_ext = equilibrium_extinct(&p, p.m0).unwrap();
    // The conserved w+a profile homogenizes only diffusively (rate d k^2),
    // so the horizon must cover that slow channel as well.
    let cfg = StepperConfig {
        dt: 2e-3,
        t_end: 40.0,
        scheme: Scheme::ImexEuler,
        snapshot_every: usize::MAX,
        positivity_floor_tol: 1e-12,
    };
    let traj = integrate(&model, &SystemState::new(fields, 0.0), &cfg, &eq_ext).unwrap();
    let dist_extinct = traj
        .final_state()
        .fields
        .iter()
        .zip(eq_ext.values())
        .map(|(f, &v)| f.values().iter().map(|&c| (c - v).abs()).fold(0.0f64, f64::max))
        .fold(0.0f64, f64::max);
    assert!(dist_extinct < 1e-6, "distance to extinct split {dist_extinct:.3e}");
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 120.0, "runtime budget exceeded: {secs:.1}s");
    println!(
        "ACCEPTANCE 05 long-time-attraction: PASS (coexistence {dist_coexist:.2e}, extinct {dist_extinct:.2e}, {secs:.1}s)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_convergence_rate() {
    let grid = Grid::line(256, PI).unwrap();
    let params = gspt_params();
    let eps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let report = convergence_study(&eps, 1.0, &grid, &params, true, &StudyOptions::default()).unwrap();
    assert!(
        report.errors.windows(2).all(|w| w[1] < w[0]),
        "errors not monotone: {:?}",
        report.errors
    );
    assert!(
        (0.35..=0.65).contains(&report.fitted_rate),
        "fitted rate {} outside [0.35, 0.65]",
        report.fitted_rate
    );
    println!(
        "ACCEPTANCE 06 lemma-rate: PASS (fitted rate {:.3}, errors {:?}, {:.0}s)",
        report.fitted_rate, report.errors, report.runtime_seconds
    );
}

// ---------------------------------------------------------------------------
// Criterion 7
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_fast_attraction() {
    let grid = Grid::line(256, PI).unwrap();
    let p = gspt_params();
    let eps = 1e-3;
    let (v_h0, w0) = defect_test_state(&grid);
    let h0 = critical_manifold_h0(&v_h0, &w0, &p).unwrap();
    let vs0 = h0.map(|v| v + 0.25);
    let mut params = p.clone();
    params.eps = eps;
    let model = build_rhs(&ModelSpec {
        kind: ModelKind::HollingIIFastSlow,
        params,
        grid: grid.clone(),
    })
    .unwrap();
    let rate_bound = p.m_s + p.p1 * 1.6 + p.p2;
    let cfg = StepperConfig {
        dt: eps / (20.0 * rate_bound),
        t_end: 5.0 * eps,
        scheme: Scheme::ImexEuler,
        snapshot_every: usize::MAX,
        positivity_floor_tol: 1e-12,
    };
    let eq = EquilibriumState::reference(vec![1.0; 3]).unwrap();
    let traj = integrate(
        &model,
        &SystemState::new(vec![vs0.clone(), v_h0.clone(), w0.clone()], 0.0),
        &cfg,
        &eq,
    )
    .unwrap();
    let fin = traj.final_state();
    let h_fin = critical_manifold_h0(&fin.fields[1], &fin.fields[2], &p).unwrap();
    let dist0 = norm(&vs0.sub(&h0), &grid, Norm::L2).unwrap();
    let dist1 = norm(&fin.fields[0].sub(&h_fin), &grid, Norm::L2).unwrap();
    let factor = dist0 / dist1;
    let need = (4.0f64).exp();
    assert!(factor >= need, "decay factor {factor:.2} < e^4");
    println!("ACCEPTANCE 07 fast-attraction: PASS (decay factor {factor:.0} >= e^4 = {need:.1})");
}

// ---------------------------------------------------------------------------
// Criterion 8
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_slow_manifold_orders() {
    let grid = Grid::line(256, PI).unwrap();
    let p = gspt_params();
    let eps_list: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let xs: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let d0 = invariance_defect_sweep(&eps_list, &grid, &p, 0, false).unwrap();
    let d1 = invariance_defect_sweep(&eps_list, &grid, &p, 1, false).unwrap();
    let s0 = fit_slope(&xs, &d0.iter().map(|d| d.ln()).collect::<Vec<_>>());
    let s1 = fit_slope(&xs, &d1.iter().map(|d| d.ln()).collect::<Vec<_>>());
    assert!((s0 - 1.0).abs() <= 0.2, "order-0 defect slope {s0:.3}");
    assert!(s1 >= 1.5, "order-1 defect slope {s1:.3}");
    println!("ACCEPTANCE 08 slow-manifold-orders: PASS (order-0 slope {s0:.2}, order-1 slope {s1:.2})");
}

// ---------------------------------------------------------------------------
// Criterion 9
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_splitting_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for dim in [1usize, 2] {
        let grid = if dim == 1 {
            Grid::line(64, PI).unwrap()
        } else {
            Grid::rectangle(24, 20, PI, PI).unwrap()
        };
        let split = build_split(0.07, 1.3, &grid).unwrap();
        for _ in 0..20 {
            let vals: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let f = Field::new(vals, &grid).unwrap();
            let scale = norm(&f, &grid, Norm::L2).unwrap().max(1.0);
            let ps = project(&f, &split, Part::Slow).unwrap();
            let pf = project(&f, &split, Part::Fast).unwrap();
            worst = worst.max(norm(&ps.add(&pf).sub(&f), &grid, Norm::L2).unwrap() / scale);
            let psps = project(&ps, &split, Part::Slow).unwrap();
            worst = worst.max(norm(&psps.sub(&ps), &grid, Norm::L2).unwrap() / scale);
            let a = project(&laplacian_neumann(&f, &grid).unwrap(), &split, Part::Slow).unwrap();
            let b = laplacian_neumann(&ps, &grid).unwrap();
            // Commutator scaled by the Laplacian magnitude.
            let lap_scale = norm(&laplacian_neumann(&f, &grid).unwrap(), &grid, Norm::L2)
                .unwrap()
                .max(1.0);
            worst = worst.max(norm(&a.sub(&b), &grid, Norm::L2).unwrap() / lap_scale);
        }
    }
    assert!(worst <= 1e-10, "splitting algebra defect {worst:.3e}");

    let grid = Grid::line(17, PI).unwrap();
    for _ in 0..100 {
        let m = 0.05 + 10.0 * rng.gen::<f64>();
        let z = 0.01 + 2.0 * rng.gen::<f64>();
        let s = build_split(z, m, &grid).unwrap();
        let k0 = s.k0() as f64;
        let ratio = m / z;
        assert!(
            k0 * k0 <= ratio && ratio < (k0 + 1.0) * (k0 + 1.0),
            "cutoff rule violated: k0={k0} ratio={ratio}"
        );
    }
    println!("ACCEPTANCE 09 splitting-algebra: PASS (max defect {worst:.2e}, cutoff rule on 100 draws)");
}

// ---------------------------------------------------------------------------
// Criterion 10
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_reduction_consistency() {
    let grid = Grid::line(96, PI).unwrap();
    let mut p = gspt_params();
    p.eps = 1e-3;
    p.m_v = Some(p.m_h);
    let fast = build_rhs(&ModelSpec {
        kind: ModelKind::HollingIIFastSlow,
        params: p.clone(),
        grid: grid.clone(),
    })
    .unwrap();
    let reduced = build_rhs(&ModelSpec {
        kind: ModelKind::HollingIIReduced,
        params: p.clone(),
        grid: grid.clone(),
    })
    .unwrap();
    let (v_h, w) = defect_test_state(&grid);
    let vs = critical_manifold_h0(&v_h, &w, &p).unwrap();
    let rhs_fast = fast.full_rhs(&[vs, v_h.clone(), w.clone()]).unwrap();
    let rhs_red = reduced.full_rhs(&[v_h, w]).unwrap();
    let mut worst: f64 = 0.0;
    for (a, b) in [(&rhs_fast[1], &rhs_red[0]), (&rhs_fast[2], &rhs_red[1])] {
        for (x, y) in a.values().iter().zip(b.values()) {
            worst = worst.max((x - y).abs());
        }
    }
    assert!(worst <= 1e-10, "slow rhs mismatch on the critical manifold: {worst:.3e}");

    // Holling III at k = 1 coincides with Holling II pointwise.
    let mut pk = p.clone();
    pk.k = 1;
    let mut worst_iii: f64 = 0.0;
    for i in 0..200 {
        let w = 0.05 * i as f64;
        let a = holling_response(HollingType::II, w, &pk).unwrap();
        let b = holling_response(HollingType::III, w, &pk).unwrap();
        worst_iii = worst_iii.max((a - b).abs());
    }
    assert!(worst_iii <= 1e-14, "III(k=1) vs II mismatch {worst_iii:.3e}");

    // Holling II saturates to p2 as w grows.
    let sat = holling_response(HollingType::II, 1e9, &p).unwrap();
    let sat_err = (sat - p.p2).abs();
    assert!(sat_err < 1e-6, "saturation error {sat_err:.3e}");
    println!(
        "ACCEPTANCE 10 reduction-consistency: PASS (manifold rhs {worst:.2e}, III=II {worst_iii:.2e}, saturation {sat_err:.2e})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 11
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_solver_orders() {
    let p = Params::default();
    let grid = Grid::line(64, PI).unwrap();
    let model = build_rhs(&ModelSpec {
        kind: ModelKind::ClosedSix,
        params: p.clone(),
        grid: grid.clone(),
    })
    .unwrap();
    let eq = equilibrium_conserved(&p, p.m0).unwrap();
    let initial: Vec<Field> = eq
        .values()
        .iter()
        .enumerate()
        .map(|(s, &v)| {
            Field::from_fn(&grid, |x, _| v * (1.0 + 0.25 * ((s % 3 + 1) as f64 * x).cos()))
        })
        .collect();
    let t_end = 0.4;
    let run = |dt: f64, scheme: Scheme| -> Vec<Field> {
        let cfg = StepperConfig {
            dt,
            t_end,
            scheme,
            snapshot_every: usize::MAX,
            positivity_floor_tol: 1e-12,
        };
        integrate(&model, &SystemState::new(initial.clone(), 0.0), &cfg, &eq)
            .unwrap()
            .final_state()
            .fields
            .clone()
    };
    let reference = run(2.5e-4, Scheme::Strang);
    let err = |fields: &[Field]| -> f64 {
        fields
            .iter()
            .zip(&reference)
            .map(|(a, b)| norm(&a.sub(b), &grid, Norm::LInf).unwrap())
            .fold(0.0, f64::max)
    };
    let mut orders = Vec::new();
    for scheme in [Scheme::ImexEuler, Scheme::Strang] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for dt in [2e-2f64, 1e-2, 5e-3] {
            xs.push(dt.ln());
            ys.push(err(&run(dt, scheme)).ln());
        }
        orders.push(fit_slope(&xs, &ys));
    }
    assert!((orders[0] - 1.0).abs() <= 0.2, "IMEX order {:.3}", orders[0]);
    assert!((orders[1] - 2.0).abs() <= 0.2, "Strang order {:.3}", orders[1]);

    // Spatial order of the Neumann Laplacian on an eigenfunction.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in [33usize, 65, 129, 257] {
        let g = Grid::line(n, PI).unwrap();
        let f = Field::from_fn(&g, |x, _| (2.0 * x).cos());
        let lap = laplacian_neumann(&f, &g).unwrap();
        let exact = f.scaled(-4.0);
        xs.push(g.spacing(0).ln());
        ys.push(norm(&lap.sub(&exact), &g, Norm::LInf).unwrap().ln());
    }
    let spatial = fit_slope(&xs, &ys);
    assert!((spatial - 2.0).abs() <= 0.2, "spatial order {spatial:.3}");
    println!(
        "ACCEPTANCE 11 solver-orders: PASS (IMEX {:.2}, Strang {:.2}, spatial {:.2})",
        orders[0], orders[1], spatial
    );
}
