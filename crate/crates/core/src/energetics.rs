//! Closed-form equilibria, free energy, affinities, and dissipation
//! functionals of the closed network, plus the per-snapshot energy audit.
//!
//! Sign convention: the free energy decays along closed-system trajectories,
//! `dF/dt = -(D_d + D_r)` with both dissipations nonnegative.
//!
//! The diffusive dissipation is discretized on cell faces as
//! `sum d_alpha (delta c)(delta ln c)/h^2` per face, which is a midpoint
//! quadrature of `d |grad c|^2 / c` and makes the semi-discrete energy
//! identity hold exactly against the mirror-stencil Laplacian: the residual
//! of the discrete energy balance is then purely a time-discretization
//! effect.

use crate::error::{Error, Result};
use crate::grid_ops::{self, Field, Grid};
use crate::models::{Model, Params};
use crate::reaction_net::ReactionNetwork;

/// Scaled residual threshold for the detailed-balance relations.
const DETAILED_BALANCE_TOL: f64 = 1e-12;

/// A constant equilibrium state (one concentration per species).
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumState {
    cbar: Vec<f64>,
}

impl EquilibriumState {
    /// Wraps an arbitrary nonnegative reference state. Used to audit open
    /// systems where no closed-form equilibrium exists; such audits are
    /// diagnostics only.
    pub fn reference(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("reference state must be nonnegative and finite"));
        }
        Ok(EquilibriumState { cbar: values })
    }

    pub fn values(&self) -> &[f64] {
        &self.cbar
    }

    pub fn len(&self) -> usize {
        self.cbar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cbar.is_empty()
    }
}

/// Largest scaled residual of the detailed-balance relations at `c`
/// (order: vs, vh, w, bs, bh, a).
pub fn detailed_balance_residual(p: &Params, c: &[f64]) -> f64 {
    let pairs = [
        (p.m_w * c[2], p.r * c[5]),
        (p.m_s * c[0], p.eps1 * c[3]),
        (p.m_h * c[1], p.eps2 * c[4]),
        (p.p1 * c[2] * c[0], p.eps3 * c[1] * c[1]),
        (p.p2 * c[1], p.eps4 * c[0]),
    ];
    pairs
        .iter()
        .map(|&(f, b)| (f - b).abs() / f.abs().max(b.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Coexistence equilibrium of the closed system for total mass `m0`
/// (unit domain measure). All six concentrations are positive multiples of
/// `m0 / C` with `C` the normalization constant.
pub fn equilibrium_conserved(p: &Params, m0: f64) -> Result<EquilibriumState> {
    for (v, name) in [(p.p1, "p1"), (p.p2, "p2"), (p.eps1, "eps1"), (p.eps2, "eps2"), (p.r, "r")] {
        if !(v > 0.0) {
            return Err(Error::invalid(format!(
                "coexistence equilibrium needs {name} > 0, got {v}"
            )));
        }
    }
    if !(m0 >= 0.0) {
        return Err(Error::invalid(format!("total mass must be nonnegative, got {m0}")));
    }
    let t_vh = p.eps4 / p.p2;
    let t_w = p.eps3 * p.eps4 * p.eps4 / (p.p1 * p.p2 * p.p2);
    let t_bs = p.m_s / p.eps1;
    let t_bh = p.m_h * p.eps4 / (p.p2 * p.eps2);
    let t_a = p.m_w * t_w / p.r;
    let c = 1.0 + t_vh + t_w + t_bs + t_bh + t_a;
    let vs = m0 / c;
    let cbar = vec![vs, t_vh * vs, t_w * vs, t_bs * vs, t_bh * vs, t_a * vs];
    let res = detailed_balance_residual(p, &cbar);
    if res >= DETAILED_BALANCE_TOL {
        return Err(Error::invalid(format!(
            "constructed equilibrium violates detailed balance (residual {res:.3e})"
        )));
    }
    Ok(EquilibriumState { cbar })
}

/// Extinct equilibrium: biotic species zero, the mass split between water
/// and atmosphere as `w = r m0 / (m_w + r)`, `a = m_w m0 / (m_w + r)`.
pub fn equilibrium_extinct(p: &Params, m0: f64) -> Result<EquilibriumState> {
    if !(p.m_w + p.r > 0.0) {
        return Err(Error::invalid("extinct equilibrium needs m_w + r > 0"));
    }
    if !(m0 >= 0.0) {
        return Err(Error::invalid(format!("total mass must be nonnegative, got {m0}")));
    }
    let w = p.r * m0 / (p.m_w + p.r);
    let a = p.m_w * m0 / (p.m_w + p.r);
    Ok(EquilibriumState {
        cbar: vec![0.0, 0.0, w, 0.0, 0.0, a],
    })
}

/// Free energy `sum_alpha int c (ln(c / cbar) - 1)` with the continuous
/// extension `0 ln 0 = 0`. Errors on negative concentrations or a
/// non-positive reference.
pub fn free_energy(state: &[Field], eq: &EquilibriumState, grid: &Grid) -> Result<f64> {
    if state.len() != eq.len() {
        return Err(Error::mismatch(format!(
            "state has {} species, equilibrium has {}",
            state.len(),
            eq.len()
        )));
    }
    let mut total = 0.0;
    for (f, &cbar) in state.iter().zip(eq.values()) {
        if !(cbar > 0.0) {
            return Err(Error::invalid("free energy needs a strictly positive reference state"));
        }
        if f.len() != grid.len() {
            return Err(Error::mismatch("field does not conform to grid"));
        }
        for (i, &c) in f.values().iter().enumerate() {
            if c < 0.0 {
                return Err(Error::invalid(format!("negative concentration {c}")));
            }
            if c > 0.0 {
                total += grid.weight(i) * c * ((c / cbar).ln() - 1.0);
            }
        }
    }
    Ok(total)
}

/// Per-reaction affinity fields `A_i = sum_alpha sigma_{i,alpha} ln(c/cbar)`.
/// Requires strictly positive concentrations and reference.
pub fn affinity(net: &ReactionNetwork, state: &[Field], eq: &EquilibriumState) -> Result<Vec<Field>> {
    let ns = net.n_species();
    if state.len() != ns || eq.len() != ns {
        return Err(Error::mismatch("affinity needs one field and one reference per species"));
    }
    let npts = state.first().map(|f| f.len()).unwrap_or(0);
    for f in state {
        if f.len() != npts {
            return Err(Error::mismatch("fields differ in size"));
        }
    }
    for &cbar in eq.values() {
        if !(cbar > 0.0) {
            return Err(Error::invalid("affinity needs a strictly positive reference state"));
        }
    }
    let mut log_ratio = Vec::with_capacity(ns);
    for (f, &cbar) in state.iter().zip(eq.values()) {
        let mut col = Vec::with_capacity(npts);
        for &c in f.values() {
            if !(c > 0.0) {
                return Err(Error::invalid(format!("affinity undefined at concentration {c}")));
            }
            col.push((c / cbar).ln());
        }
        log_ratio.push(col);
    }
    let mut out = Vec::with_capacity(net.n_reactions());
    for i in 0..net.n_reactions() {
        let mut vals = vec![0.0; npts];
        for alpha in 0..ns {
            let sig = net.sigma(i, alpha);
            if sig != 0 {
                for (v, lr) in vals.iter_mut().zip(&log_ratio[alpha]) {
                    *v += sig as f64 * lr;
                }
            }
        }
        out.push(Field::from_raw(vals));
    }
    Ok(out)
}

/// Diffusive and reactive dissipation `(D_d, D_r)`, both nonnegative.
///
/// `D_d` integrates `d_alpha (grad c)(grad ln c)` with face differences;
/// `D_r` integrates `sum_i Rdot_i ln(Rdot_i / R-_i + 1)`. Requires strictly
/// positive concentrations and positive backward fluxes.
pub fn dissipations(
    net: &ReactionNetwork,
    state: &[Field],
    grid: &Grid,
    diffusion: &[f64],
) -> Result<(f64, f64)> {
    let ns = net.n_species();
    if state.len() != ns || diffusion.len() != ns {
        return Err(Error::mismatch("dissipations need one field and one coefficient per species"));
    }
    for f in state {
        if f.len() != grid.len() {
            return Err(Error::mismatch("field does not conform to grid"));
        }
        if let Some(v) = f.values().iter().find(|v| !(**v > 0.0)) {
            return Err(Error::invalid(format!("dissipation undefined at concentration {v}")));
        }
    }

    let mut d_d = 0.0;
    for (f, &d) in state.iter().zip(diffusion) {
        if d == 0.0 {
            continue;
        }
        d_d += d * face_gradient_pairing(f, grid);
    }

    let npts = grid.len();
    let mut conc = vec![0.0; ns];
    let mut d_r = 0.0;
    for p in 0..npts {
        for (alpha, f) in state.iter().enumerate() {
            conc[alpha] = f.values()[p];
        }
        let (fwd, bwd) = net.fluxes(&conc)?;
        let mut local = 0.0;
        for (rf, rb) in fwd.iter().zip(&bwd) {
            if !(*rb > 0.0) {
                return Err(Error::invalid(
                    "reactive dissipation needs positive backward fluxes (reversible rates)",
                ));
            }
            let rdot = rf - rb;
            let arg = rdot / rb + 1.0;
            if !(arg > 0.0) {
                return Err(Error::invalid("reactive dissipation undefined: Rdot/R- <= -1"));
            }
            local += rdot * arg.ln();
        }
        d_r += grid.weight(p) * local;
    }
    Ok((d_d.max(0.0), d_r.max(0.0)))
}

/// `sum_faces (delta c)(delta ln c)/h^2 * face measure` over all axes.
/// Each term is nonnegative because ln is monotone.
fn face_gradient_pairing(f: &Field, grid: &Grid) -> f64 {
    let mut acc = 0.0;
    let v = f.values();
    for axis in 0..grid.dim() {
        let n = grid.n(axis);
        let h = grid.spacing(axis);
        let (stride, lines, line_stride) = grid_ops::axis_layout(grid, axis);
        for line in 0..lines {
            let w_t = transverse_weight(grid, axis, line);
            let base = line * line_stride;
            let mut local = 0.0;
            for i in 0..n - 1 {
                let a = v[base + i * stride];
                let b = v[base + (i + 1) * stride];
                local += (b - a) * (b.ln() - a.ln());
            }
            acc += w_t * local / h;
        }
    }
    acc
}

/// Trapezoid weight of the line transverse to `axis` (1 in 1D).
fn transverse_weight(grid: &Grid, axis: usize, line: usize) -> f64 {
    if grid.dim() == 1 {
        return 1.0;
    }
    let other = 1 - axis;
    let h = grid.spacing(other);
    if line == 0 || line == grid.n(other) - 1 {
        0.5 * h
    } else {
        h
    }
}

/// One energy-audit sample. Undefined entries (e.g. reactive dissipation of
/// an irreversible model, free energy against a non-positive reference) are
/// reported as NaN rather than failing the run.
#[derive(Debug, Clone)]
pub struct EnergyAudit {
    pub mass: f64,
    pub free_energy: f64,
    pub diss_diffusion: f64,
    pub diss_reaction: f64,
    /// Spatial mean of each reaction affinity (empty when unavailable).
    pub affinities: Vec<f64>,
    pub min_concentration: f64,
}

/// CSV header matching [`EnergyAudit::csv_row`].
pub const AUDIT_CSV_HEADER: &str = "t,mass,free_energy,diss_diffusion,diss_reaction,min_concentration";

impl EnergyAudit {
    pub fn csv_row(&self, t: f64) -> String {
        [t, self.mass, self.free_energy, self.diss_diffusion, self.diss_reaction, self.min_concentration]
            .iter()
            .map(|&v| grid_ops::fmt17(v))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Best-effort audit of a model state against a reference.
pub fn audit(model: &Model, state: &[Field], eq: &EquilibriumState) -> Result<EnergyAudit> {
    let grid = model.grid();
    if state.len() != model.n_species() {
        return Err(Error::mismatch("audit state does not match the model species"));
    }
    let mut mass = 0.0;
    let mut min_c = f64::INFINITY;
    for f in state {
        mass += grid_ops::integrate(f, grid)?;
        min_c = min_c.min(f.min());
    }
    let free = if eq.len() == state.len() {
        free_energy(state, eq, grid).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };

    // Dissipations and affinities need the plain mass-action network with
    // every network species dynamic.
    let full_view = model
        .network_view()
        .filter(|(net, dyn_idx, _)| dyn_idx.len() == net.n_species());
    let (d_d, d_r, affinities) = match full_view {
        Some((net, _, _)) => {
            let (d_d, d_r) = dissipations(net, state, grid, model.diffusion()).unwrap_or((f64::NAN, f64::NAN));
            let aff = if eq.len() == state.len() {
                match affinity(net, state, eq) {
                    Ok(fields) => fields
                        .iter()
                        .map(|f| grid_ops::integrate(f, grid).map(|v| v / grid.measure()))
                        .collect::<Result<Vec<f64>>>()?,
                    Err(_) => Vec::new(),
                }
            } else {
                Vec::new()
            };
            (d_d, d_r, aff)
        }
        None => (f64::NAN, f64::NAN, Vec::new()),
    };
    Ok(EnergyAudit {
        mass,
        free_energy: free,
        diss_diffusion: d_d,
        diss_reaction: d_r,
        affinities,
        min_concentration: min_c,
    })
}
