//! Assembly of every supported reaction-diffusion system.
//!
//! Each model kind is built as data: a mass-action network generated through
//! the DSL plus per-species diffusion coefficients, frozen environment
//! levels, and per-species rate scales. The Holling-type reduced models are
//! produced from the *modified* fast network by eliminating the fast species
//! pointwise (its kinetics are linear in that species), so the saturating
//! responses are derived, not hard-coded.
//!
//! Parameter convention: for the rescaled kinds (`HollingIIFastSlow`,
//! `HollingIIReduced`, `HollingIII`, `SlowFlow`) the fields `p1` and `m_s`
//! hold the tilde-scaled rates of the fast regime; the model kind decides the
//! interpretation, matching how the symbols are reused after rescaling.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid_ops::{self, Field, Grid, Norm, Part, SpectralSplit};
use crate::reaction_net::ReactionNetwork;

/// All rate, scale, and diffusion constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub p1: f64,
    pub p2: f64,
    pub m_s: f64,
    pub m_h: f64,
    pub m_w: f64,
    pub r: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub eps5: f64,
    pub eps6: f64,
    pub eps7: f64,
    /// Time-scale parameter of the fast-slow systems.
    pub eps: f64,
    /// Spectral-splitting parameter.
    pub zeta: f64,
    /// Frozen environment forcing level.
    pub a0: f64,
    /// Death rate of the merged/reduced species; defaults to `m_h`.
    pub m_v: Option<f64>,
    pub d_vs: f64,
    pub d_vh: f64,
    pub d_w: f64,
    pub d_bs: f64,
    pub d_bh: f64,
    pub d_a: f64,
    /// Water stoichiometry of the Holling III reaction (k >= 2).
    pub k: u32,
    /// Total mass of the closed system.
    pub m0: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            p1: 1.0,
            p2: 0.5,
            m_s: 1.0,
            m_h: 0.5,
            m_w: 1.0,
            r: 1.0,
            eps1: 1.0,
            eps2: 1.0,
            eps3: 1.0,
            eps4: 1.0,
            eps5: 1.0,
            eps6: 1.0,
            eps7: 1.0,
            eps: 1e-2,
            zeta: 0.1,
            a0: 1.0,
            m_v: None,
            d_vs: 1.0,
            d_vh: 1e-2,
            d_w: 1e-2,
            d_bs: 1e-2,
            d_bh: 1e-2,
            d_a: 1e-2,
            k: 2,
            m0: 6.0,
        }
    }
}

impl Params {
    /// Effective merged death rate (`m_v`, defaulting to `m_h`).
    pub fn m_v_effective(&self) -> f64 {
        self.m_v.unwrap_or(self.m_h)
    }
}

/// Which paper system to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    ClosedSix,
    RescaledOpen,
    ReducedThree,
    HollingI,
    Klausmeier,
    HollingIIFastSlow,
    HollingIIReduced,
    HollingIII,
    SlowFlow,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::ClosedSix => "ClosedSix",
            ModelKind::RescaledOpen => "RescaledOpen",
            ModelKind::ReducedThree => "ReducedThree",
            ModelKind::HollingI => "HollingI",
            ModelKind::Klausmeier => "Klausmeier",
            ModelKind::HollingIIFastSlow => "HollingIIFastSlow",
            ModelKind::HollingIIReduced => "HollingIIReduced",
            ModelKind::HollingIII => "HollingIII",
            ModelKind::SlowFlow => "SlowFlow",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        let kind = match norm.as_str() {
            "closedsix" => ModelKind::ClosedSix,
            "rescaledopen" => ModelKind::RescaledOpen,
            "reducedthree" => ModelKind::ReducedThree,
            "hollingi" => ModelKind::HollingI,
            "klausmeier" => ModelKind::Klausmeier,
            "hollingiifastslow" => ModelKind::HollingIIFastSlow,
            "hollingiireduced" => ModelKind::HollingIIReduced,
            "hollingiii" => ModelKind::HollingIII,
            "slowflow" => ModelKind::SlowFlow,
            _ => return Err(Error::invalid(format!("unknown model kind '{s}'"))),
        };
        Ok(kind)
    }
}

/// A model request: kind, parameters, grid.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub params: Params,
    pub grid: Grid,
}

/// Functional response type selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HollingType {
    I,
    II,
    III,
}

/// Scalar functional response at water level `w`.
///
/// Type I is linear `p1 w`; type II saturates as `p1 p2 w / (p1 w + m_s)`;
/// type III uses `w^k`. For the scaled types `p1` and `m_s` are read as the
/// tilde rates.
pub fn holling_response(ty: HollingType, w: f64, params: &Params) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::invalid(format!("water level must be nonnegative, got {w}")));
    }
    Ok(match ty {
        HollingType::I => params.p1 * w,
        HollingType::II => params.p1 * params.p2 * w / (params.p1 * w + params.m_s),
        HollingType::III => {
            let wk = w.powi(params.k as i32);
            params.p1 * params.p2 * wk / (params.p1 * wk + params.m_s)
        }
    })
}

/// Critical-manifold graph `h0(v_h, w) = p2 v_h / (p1 w + m_s)` evaluated
/// pointwise (tilde rates).
pub fn critical_manifold_h0(v_h: &Field, w: &Field, params: &Params) -> Result<Field> {
    if v_h.len() != w.len() {
        return Err(Error::mismatch("v_h and w fields differ in size"));
    }
    let mut out = Vec::with_capacity(v_h.len());
    for (&vh, &wv) in v_h.values().iter().zip(w.values()) {
        if vh < 0.0 || wv < 0.0 {
            return Err(Error::invalid("critical manifold requires nonnegative fields"));
        }
        let den = params.p1 * wv + params.m_s;
        if !(den > 0.0) {
            return Err(Error::invalid("p1*w + m_s vanishes; graph undefined"));
        }
        out.push(params.p2 * vh / den);
    }
    Ok(Field::from_raw(out))
}

/// Slow right-hand sides of the fast-slow pair evaluated on a graph value
/// `h_val`: `g1` drives `v_h`, `g2` drives `w`. Diffusion terms included.
pub(crate) fn slow_rhs_on_graph(
    v_h: &Field,
    w: &Field,
    h_val: &Field,
    params: &Params,
    grid: &Grid,
) -> Result<(Field, Field)> {
    let lap_vh = grid_ops::laplacian_neumann(v_h, grid)?;
    let lap_w = grid_ops::laplacian_neumann(w, grid)?;
    let n = v_h.len();
    let mut g1 = Vec::with_capacity(n);
    let mut g2 = Vec::with_capacity(n);
    for i in 0..n {
        let vh = v_h.values()[i];
        let wv = w.values()[i];
        let h = h_val.values()[i];
        g1.push(params.d_vh * lap_vh.values()[i] + 2.0 * params.p1 * wv * h - (params.m_h + params.p2) * vh);
        g2.push(params.d_w * lap_w.values()[i] - params.p1 * wv * h - params.m_w * wv + params.a0);
    }
    Ok((
        Field::new(g1, grid)?,
        Field::new(g2, grid)?,
    ))
}

/// First asymptotic correction `h1` to the critical manifold:
/// `h1 = (p1 w + m_s)^{-1} (d_vs Lap h0 - D_{v_h}h0 g1 - D_w h0 g2)`
/// with the partials of `h0` taken in closed form.
pub(crate) fn first_order_graph_correction(
    v_h: &Field,
    w: &Field,
    params: &Params,
    grid: &Grid,
) -> Result<Field> {
    let h0 = critical_manifold_h0(v_h, w, params)?;
    let (g1, g2) = slow_rhs_on_graph(v_h, w, &h0, params, grid)?;
    let lap_h0 = grid_ops::laplacian_neumann(&h0, grid)?;
    let n = v_h.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let vh = v_h.values()[i];
        let wv = w.values()[i];
        let den = params.p1 * wv + params.m_s;
        let dvh_h0 = params.p2 / den;
        let dw_h0 = -params.p1 * params.p2 * vh / (den * den);
        let num = params.d_vs * lap_h0.values()[i] - dvh_h0 * g1.values()[i] - dw_h0 * g2.values()[i];
        out.push(num / den);
    }
    Field::new(out, grid)
}

/// How the slow-flow model evaluates its manifold graph.
#[derive(Debug, Clone)]
struct GraphSpec {
    order: u8,
    eps: f64,
    project_correction: bool,
}

#[derive(Debug, Clone)]
enum Kinetics {
    /// Mass-action network with optional frozen species and per-species
    /// right-hand-side scales.
    MassAction {
        net: ReactionNetwork,
        /// Network index of each model species.
        dyn_idx: Vec<usize>,
        /// Full network-length template holding frozen concentrations.
        base: Vec<f64>,
        /// Per model species scale applied to the reaction source.
        scale: Vec<f64>,
    },
    /// Mass-action network with one fast species eliminated pointwise.
    /// Its kinetics must be affine in that species.
    Slaved {
        net: ReactionNetwork,
        fast: usize,
        dyn_idx: Vec<usize>,
        base: Vec<f64>,
    },
    /// Projected slow flow on the spectral slow subspace.
    SlowFlow { split: SpectralSplit, graph: GraphSpec },
}

/// An assembled, ready-to-integrate model.
#[derive(Debug, Clone)]
pub struct Model {
    kind: ModelKind,
    species: Vec<String>,
    diffusion: Vec<f64>,
    grid: Grid,
    params: Params,
    kinetics: Kinetics,
}

/// Tolerance for the slow-subspace precondition of the slow-flow model.
const SLOW_SUBSPACE_TOL: f64 = 1e-10;

impl Model {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// The mass-action network behind the model, with the translation from
    /// model fields to network concentrations, when the kinetics are a plain
    /// (unslaved) network. Used by the energy audit.
    pub fn network_view(&self) -> Option<(&ReactionNetwork, &[usize], &[f64])> {
        match &self.kinetics {
            Kinetics::MassAction { net, dyn_idx, base, .. } => Some((net, dyn_idx, base)),
            _ => None,
        }
    }

    /// Spectral split of the slow-flow model.
    pub fn split(&self) -> Option<&SpectralSplit> {
        match &self.kinetics {
            Kinetics::SlowFlow { split, .. } => Some(split),
            _ => None,
        }
    }

    fn check_fields(&self, fields: &[Field]) -> Result<()> {
        if fields.len() != self.species.len() {
            return Err(Error::mismatch(format!(
                "model has {} species, got {} fields",
                self.species.len(),
                fields.len()
            )));
        }
        for f in fields {
            if f.len() != self.grid.len() {
                return Err(Error::mismatch("field does not conform to the model grid"));
            }
        }
        Ok(())
    }

    /// Reaction part of the right-hand side (everything except diffusion).
    ///
    /// Values are evaluated as polynomials without sign checks so that the
    /// integrator may probe slightly negative states near extinction.
    pub fn reaction_terms(&self, fields: &[Field]) -> Result<Vec<Field>> {
        self.check_fields(fields)?;
        let npts = self.grid.len();
        match &self.kinetics {
            Kinetics::MassAction { net, dyn_idx, base, scale } => {
                let mut out = vec![vec![0.0; npts]; fields.len()];
                let mut conc = base.clone();
                let mut rates = vec![0.0; net.n_reactions()];
                for p in 0..npts {
                    for (s, &ni) in dyn_idx.iter().enumerate() {
                        conc[ni] = fields[s].values()[p];
                    }
                    net.rates_unchecked(&conc, &mut rates);
                    for (s, &ni) in dyn_idx.iter().enumerate() {
                        let mut acc = 0.0;
                        for (i, &rate) in rates.iter().enumerate() {
                            let sig = net.sigma(i, ni);
                            if sig != 0 {
                                acc += sig as f64 * rate;
                            }
                        }
                        out[s][p] = scale[s] * acc;
                    }
                }
                out.into_iter().map(|v| Field::new(v, &self.grid)).collect()
            }
            Kinetics::Slaved { net, fast, dyn_idx, base } => {
                let mut out = vec![vec![0.0; npts]; fields.len()];
                let mut conc = base.clone();
                let mut rates = vec![0.0; net.n_reactions()];
                for p in 0..npts {
                    for (s, &ni) in dyn_idx.iter().enumerate() {
                        conc[ni] = fields[s].values()[p];
                    }
                    // Fast kinetics are affine in the fast species:
                    // f(x) = b - a x, so the slaved value is b / a.
                    conc[*fast] = 0.0;
                    net.rates_unchecked(&conc, &mut rates);
                    let b = fast_component(net, *fast, &rates);
                    conc[*fast] = 1.0;
                    net.rates_unchecked(&conc, &mut rates);
                    let a = b - fast_component(net, *fast, &rates);
                    if !(a > 0.0) {
                        return Err(Error::invalid(
                            "fast kinetics are not dissipative; slaved value undefined",
                        ));
                    }
                    conc[*fast] = b / a;
                    net.rates_unchecked(&conc, &mut rates);
                    for (s, &ni) in dyn_idx.iter().enumerate() {
                        let mut acc = 0.0;
                        for (i, &rate) in rates.iter().enumerate() {
                            let sig = net.sigma(i, ni);
                            if sig != 0 {
                                acc += sig as f64 * rate;
                            }
                        }
                        out[s][p] = acc;
                    }
                }
                out.into_iter().map(|v| Field::new(v, &self.grid)).collect()
            }
            Kinetics::SlowFlow { split, graph } => {
                let v_h = &fields[0];
                let w = &fields[1];
                for (name, f) in self.species.iter().zip(fields) {
                    let fast = grid_ops::project(f, split, Part::Fast)?;
                    let fast_norm = grid_ops::norm(&fast, &self.grid, Norm::L2)?;
                    let scale = grid_ops::norm(f, &self.grid, Norm::L2)?.max(1.0);
                    if fast_norm > SLOW_SUBSPACE_TOL * scale {
                        return Err(Error::invalid(format!(
                            "slow-flow input '{name}' has fast-mode content {fast_norm:.3e}"
                        )));
                    }
                }
                let h = evaluate_graph(v_h, w, &self.params, &self.grid, graph, split)?;
                let wh = w.zip_with(&h, |a, b| a * b);
                let p_wh = grid_ops::project(&wh, split, Part::Slow)?;
                let p = &self.params;
                let rhs_vh = v_h
                    .map(|v| -(p.m_h + p.p2) * v)
                    .add(&p_wh.scaled(2.0 * p.p1));
                let rhs_w = w
                    .map(|v| -p.m_w * v + p.a0)
                    .sub(&p_wh.scaled(p.p1));
                Ok(vec![rhs_vh, rhs_w])
            }
        }
    }

    /// Full right-hand side: reaction part plus `d_alpha * Lap`.
    pub fn full_rhs(&self, fields: &[Field]) -> Result<Vec<Field>> {
        let mut out = self.reaction_terms(fields)?;
        for (s, f) in fields.iter().enumerate() {
            if self.diffusion[s] != 0.0 {
                let lap = grid_ops::laplacian_neumann(f, &self.grid)?;
                out[s] = out[s].add(&lap.scaled(self.diffusion[s]));
            }
        }
        Ok(out)
    }

    /// Max norm of the full right-hand side (steady-state detector).
    pub fn rhs_inf_norm(&self, fields: &[Field]) -> Result<f64> {
        let rhs = self.full_rhs(fields)?;
        Ok(rhs
            .iter()
            .map(|f| f.values().iter().fold(0.0f64, |m, &v| m.max(v.abs())))
            .fold(0.0, f64::max))
    }
}

/// Evaluates the configured slow-manifold graph.
fn evaluate_graph(
    v_h: &Field,
    w: &Field,
    params: &Params,
    grid: &Grid,
    graph: &GraphSpec,
    split: &SpectralSplit,
) -> Result<Field> {
    let h0 = critical_manifold_h0(v_h, w, params)?;
    if graph.order == 0 || graph.eps == 0.0 {
        return Ok(h0);
    }
    let mut h1 = first_order_graph_correction(v_h, w, params, grid)?;
    if graph.project_correction {
        h1 = grid_ops::project(&h1, split, Part::Slow)?;
    }
    Ok(h0.add(&h1.scaled(graph.eps)))
}

/// The component of `sigma^T rates` belonging to the fast species.
fn fast_component(net: &ReactionNetwork, fast: usize, rates: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, &rate) in rates.iter().enumerate() {
        let sig = net.sigma(i, fast);
        if sig != 0 {
            acc += sig as f64 * rate;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Network text generation
// ---------------------------------------------------------------------------

/// DSL text of the closed six-species network.
pub fn closed_network_dsl(p: &Params) -> String {
    format!(
        "species vs diffusion={}\nspecies vh diffusion={}\nspecies w diffusion={}\n\
         species bs diffusion={} environment\nspecies bh diffusion={} environment\n\
         species a diffusion={} environment\n\
         w + vs <-> 2 vh @ p1={}, e3={}\n\
         vh <-> vs @ p2={}, e4={}\n\
         vs <-> bs @ ms={}, e1={}\n\
         vh <-> bh @ mh={}, e2={}\n\
         w <-> a @ mw={}, r={}\n",
        p.d_vs, p.d_vh, p.d_w, p.d_bs, p.d_bh, p.d_a,
        p.p1, p.eps3, p.p2, p.eps4, p.m_s, p.eps1, p.m_h, p.eps2, p.m_w, p.r
    )
}

/// DSL text of the reduced three-species network (forward reactions plus the
/// environment exchange `w <-> a`; `a` is frozen by the model assembly).
fn reduced_three_dsl(p: &Params) -> String {
    format!(
        "species vs diffusion={}\nspecies vh diffusion={}\nspecies w diffusion={}\n\
         species bs environment\nspecies bh environment\nspecies a environment\n\
         w + vs -> 2 vh @ p1={}\n\
         vh -> vs @ p2={}\n\
         vs -> bs @ ms={}\n\
         vh -> bh @ mh={}\n\
         w <-> a @ mw={}, r={}\n",
        p.d_vs, p.d_vh, p.d_w, p.p1, p.p2, p.m_s, p.m_h, p.m_w, p.r
    )
}

/// DSL text of the merged-species network behind Holling I (k = 1) and the
/// Klausmeier variant (k = 2): `w + k v -> (k+1) v`.
fn merged_dsl(p: &Params, k: u32, death: f64) -> String {
    format!(
        "species v diffusion={}\nspecies w diffusion={}\n\
         species bv environment\nspecies a environment\n\
         w + {k} v -> {} v @ p1={}\n\
         v -> bv @ mv={}\n\
         w <-> a @ mw={}, r={}\n",
        p.d_vs, p.d_w, k + 1, p.p1, death, p.m_w, p.r
    )
}

/// DSL text of the fast network behind the Holling II/III family:
/// `vs + k w -> (k+1) vh` with tilde rates, plus literal forcing `a0` on `w`.
fn fast_family_dsl(p: &Params, k: u32, death_vh: f64) -> String {
    format!(
        "species vs diffusion={}\nspecies vh diffusion={}\nspecies w diffusion={}\n\
         species bs environment\nspecies bh environment\nspecies a environment\n\
         vs + {k} w -> {} vh @ p1t={}\n\
         vh -> vs @ p2={}\n\
         vs -> bs @ mst={}\n\
         vh -> bh @ mh={}\n\
         w -> a @ mw={}\n\
         a -> w @ a0={}\n",
        p.d_vs, p.d_vh, p.d_w, k + 1, p.p1, p.p2, p.m_s, death_vh, p.m_w, p.a0
    )
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

fn require_positive(value: f64, name: &str) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::invalid(format!("{name} must be positive, got {value}")));
    }
    Ok(())
}

fn require_nonnegative(value: f64, name: &str) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::invalid(format!("{name} must be nonnegative, got {value}")));
    }
    Ok(())
}

/// Builds the evaluable right-hand side for `spec`.
pub fn build_rhs(spec: &ModelSpec) -> Result<Model> {
    let p = &spec.params;
    let grid = spec.grid.clone();
    for (v, name) in [
        (p.p1, "p1"), (p.p2, "p2"), (p.m_s, "m_s"), (p.m_h, "m_h"), (p.m_w, "m_w"), (p.r, "r"),
        (p.eps1, "eps1"), (p.eps2, "eps2"), (p.eps3, "eps3"), (p.eps4, "eps4"),
        (p.eps5, "eps5"), (p.eps6, "eps6"), (p.eps7, "eps7"), (p.eps, "eps"), (p.a0, "a0"),
        (p.d_vs, "d_vs"), (p.d_vh, "d_vh"), (p.d_w, "d_w"),
        (p.d_bs, "d_bs"), (p.d_bh, "d_bh"), (p.d_a, "d_a"),
    ] {
        require_nonnegative(v, name)?;
    }
    match spec.kind {
        ModelKind::ClosedSix => {
            let net = ReactionNetwork::parse(&closed_network_dsl(p))?;
            Ok(Model {
                kind: spec.kind,
                species: species_names(&["vs", "vh", "w", "bs", "bh", "a"]),
                diffusion: vec![p.d_vs, p.d_vh, p.d_w, p.d_bs, p.d_bh, p.d_a],
                grid,
                params: p.clone(),
                kinetics: Kinetics::MassAction {
                    dyn_idx: (0..6).collect(),
                    base: vec![0.0; net.n_species()],
                    scale: vec![1.0; 6],
                    net,
                },
            })
        }
        ModelKind::RescaledOpen => {
            let net = ReactionNetwork::parse(&closed_network_dsl(p))?;
            Ok(Model {
                kind: spec.kind,
                species: species_names(&["vs", "vh", "w", "bs", "bh", "a"]),
                // Environment species carry no diffusion in the rescaled system.
                diffusion: vec![p.d_vs, p.d_vh, p.d_w, 0.0, 0.0, 0.0],
                grid,
                params: p.clone(),
                kinetics: Kinetics::MassAction {
                    dyn_idx: (0..6).collect(),
                    base: vec![0.0; net.n_species()],
                    scale: vec![1.0, 1.0, 1.0, p.eps5, p.eps6, p.eps7],
                    net,
                },
            })
        }
        ModelKind::ReducedThree => {
            let net = ReactionNetwork::parse(&reduced_three_dsl(p))?;
            let mut base = vec![0.0; net.n_species()];
            base[net.species_index("a").expect("a declared")] = p.a0;
            Ok(Model {
                kind: spec.kind,
                species: species_names(&["vs", "vh", "w"]),
                diffusion: vec![p.d_vs, p.d_vh, p.d_w],
                grid,
                params: p.clone(),
                kinetics: Kinetics::MassAction {
                    dyn_idx: vec![0, 1, 2],
                    base,
                    scale: vec![1.0; 3],
                    net,
                },
            })
        }
        ModelKind::HollingI | ModelKind::Klausmeier => {
            let k = if spec.kind == ModelKind::HollingI { 1 } else { 2 };
            let net = ReactionNetwork::parse(&merged_dsl(p, k, p.m_v_effective()))?;
            let mut base = vec![0.0; net.n_species()];
            base[net.species_index("a").expect("a declared")] = p.a0;
            Ok(Model {
                kind: spec.kind,
                species: species_names(&["v", "w"]),
                diffusion: vec![p.d_vs, p.d_w],
                grid,
                params: p.clone(),
                kinetics: Kinetics::MassAction {
                    dyn_idx: vec![0, 1],
                    base,
                    scale: vec![1.0; 2],
                    net,
                },
            })
        }
        ModelKind::HollingIIFastSlow => {
            require_positive(p.eps, "eps")?;
            let net = ReactionNetwork::parse(&fast_family_dsl(p, 1, p.m_h))?;
            let mut base = vec![0.0; net.n_species()];
            base[net.species_index("a").expect("a declared")] = 1.0;
            Ok(Model {
                kind: spec.kind,
                species: species_names(&["vs", "vh", "w"]),
                diffusion: vec![p.d_vs, p.d_vh, p.d_w],
                grid,
                params: p.clone(),
                kinetics: Kinetics::MassAction {
                    dyn_idx: vec![0, 1, 2],
                    base,
                    scale: vec![1.0 / p.eps, 1.0, 1.0],
                    net,
                },
            })
        }
        ModelKind::HollingIIReduced | ModelKind::HollingIII => {
            require_positive(p.m_s, "m_s (tilde)")?;
            let (k, death) = match spec.kind {
                ModelKind::HollingIIReduced => (1, p.m_v_effective()),
                _ => {
                    if p.k < 2 {
                        return Err(Error::invalid(format!(
                            "Holling III needs water stoichiometry k >= 2, got {}",
                            p.k
                        )));
                    }
                    (p.k, p.m_h)
                }
            };
            let net = ReactionNetwork::parse(&fast_family_dsl(p, k, death))?;
            let mut base = vec![0.0; net.n_species()];
            base[net.species_index("a").expect("a declared")] = 1.0;
            let fast = net.species_index("vs").expect("vs declared");
            Ok(Model {
                kind: spec.kind,
                species: species_names(&["vh", "w"]),
                diffusion: vec![p.d_vh, p.d_w],
                grid,
                params: p.clone(),
                kinetics: Kinetics::Slaved {
                    fast,
                    dyn_idx: vec![
                        net.species_index("vh").expect("vh declared"),
                        net.species_index("w").expect("w declared"),
                    ],
                    base,
                    net,
                },
            })
        }
        ModelKind::SlowFlow => {
            require_positive(p.zeta, "zeta")?;
            require_positive(p.m_s, "m_s (tilde)")?;
            if !(p.p2 < p.m_s) {
                return Err(Error::invalid(format!(
                    "spectral gap condition requires p2 < m_s (tilde), got p2={} m_s={}",
                    p.p2, p.m_s
                )));
            }
            if !(p.eps / p.zeta < 1.0) {
                return Err(Error::invalid(format!(
                    "timescale separation requires eps/zeta < 1, got {}",
                    p.eps / p.zeta
                )));
            }
            let split = grid_ops::build_split(p.zeta, p.m_s, &grid)?;
            let order = if p.eps > 0.0 { 1 } else { 0 };
            Ok(Model {
                kind: spec.kind,
                species: species_names(&["vh", "w"]),
                diffusion: vec![p.d_vh, p.d_w],
                grid,
                params: p.clone(),
                kinetics: Kinetics::SlowFlow {
                    split,
                    graph: GraphSpec {
                        order,
                        eps: p.eps,
                        project_correction: false,
                    },
                },
            })
        }
    }
}

fn species_names(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::line(33, std::f64::consts::PI).unwrap()
    }

    fn spec(kind: ModelKind, params: Params) -> ModelSpec {
        ModelSpec {
            kind,
            params,
            grid: grid(),
        }
    }

    #[test]
    fn holling_response_hand_values() {
        let mut p = Params::default();
        p.p1 = 1.0;
        p.p2 = 2.0;
        p.m_s = 1.0;
        assert_eq!(holling_response(HollingType::II, 1.0, &p).unwrap(), 1.0);
        assert_eq!(holling_response(HollingType::I, 0.0, &p).unwrap(), 0.0);
        assert_eq!(holling_response(HollingType::III, 0.0, &p).unwrap(), 0.0);
        assert!(holling_response(HollingType::I, -0.5, &p).is_err());
    }

    #[test]
    fn holling_iii_at_k1_equals_holling_ii() {
        let mut p = Params::default();
        p.k = 1;
        for i in 0..50 {
            let w = 0.07 * i as f64;
            let a = holling_response(HollingType::II, w, &p).unwrap();
            let b = holling_response(HollingType::III, w, &p).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn holling_ii_saturates_to_p2() {
        let mut p = Params::default();
        p.p1 = 1.0;
        p.p2 = 2.0;
        p.m_s = 1.0;
        let v = holling_response(HollingType::II, 1e9, &p).unwrap();
        assert!((v - p.p2).abs() < 1e-6);
    }

    #[test]
    fn critical_manifold_values_and_residual() {
        let g = grid();
        let mut p = Params::default();
        p.p1 = 1.0;
        p.p2 = 2.0;
        p.m_s = 1.0;
        let zero = Field::constant(&g, 0.0);
        let w1 = Field::constant(&g, 1.0);
        let h = critical_manifold_h0(&zero, &w1, &p).unwrap();
        assert!(h.values().iter().all(|&v| v == 0.0));
        let vh3 = Field::constant(&g, 3.0);
        let h = critical_manifold_h0(&vh3, &w1, &p).unwrap();
        assert!(h.values().iter().all(|&v| (v - 3.0).abs() < 1e-15));

        // Defining identity: -p1 w h0 - m_s h0 + p2 v_h = 0.
        let vh = Field::from_fn(&g, |x, _| 1.0 + 0.5 * (2.0 * x).cos());
        let w = Field::from_fn(&g, |x, _| 0.8 + 0.3 * x.sin());
        let h0 = critical_manifold_h0(&vh, &w, &p).unwrap();
        for i in 0..g.len() {
            let res = -p.p1 * w.values()[i] * h0.values()[i] - p.m_s * h0.values()[i]
                + p.p2 * vh.values()[i];
            assert!(res.abs() < 1e-12);
        }
    }

    #[test]
    fn holling_ii_reduced_rhs_at_zero_water() {
        let g = grid();
        let mut p = Params::default();
        p.m_v = Some(0.7);
        let model = build_rhs(&spec(ModelKind::HollingIIReduced, p.clone())).unwrap();
        let v = Field::constant(&g, 1.3);
        let w = Field::constant(&g, 0.0);
        let rhs = model.reaction_terms(&[v.clone(), w]).unwrap();
        let expect = -(p.m_v_effective() + p.p2) * 1.3;
        for &x in rhs[0].values() {
            assert!((x - expect).abs() < 1e-14, "{x} vs {expect}");
        }
    }

    #[test]
    fn holling_ii_reduced_matches_response_formula() {
        let g = grid();
        let p = Params::default();
        let model = build_rhs(&spec(ModelKind::HollingIIReduced, p.clone())).unwrap();
        let v = Field::constant(&g, 0.9);
        let w = Field::constant(&g, 1.7);
        let rhs = model.reaction_terms(&[v, w]).unwrap();
        let resp = holling_response(HollingType::II, 1.7, &p).unwrap();
        let expect_v = 2.0 * resp * 0.9 - (p.m_v_effective() + p.p2) * 0.9;
        let expect_w = -resp * 0.9 - p.m_w * 1.7 + p.a0;
        assert!((rhs[0].values()[0] - expect_v).abs() < 1e-13);
        assert!((rhs[1].values()[0] - expect_w).abs() < 1e-13);
    }

    #[test]
    fn holling_iii_slaving_matches_formula() {
        let g = grid();
        let mut p = Params::default();
        p.k = 3;
        let model = build_rhs(&spec(ModelKind::HollingIII, p.clone())).unwrap();
        let vh = 0.8;
        let wv = 1.2;
        let rhs = model
            .reaction_terms(&[Field::constant(&g, vh), Field::constant(&g, wv)])
            .unwrap();
        let wk = wv.powi(3);
        // (k+1) p1 p2 vh w^k / (p1 w^k + m_s) - (m_h + p2) vh
        let expect_v = (p.k as f64 + 1.0) * p.p1 * p.p2 * vh * wk / (p.p1 * wk + p.m_s)
            - (p.m_h + p.p2) * vh;
        let expect_w = -(p.k as f64) * p.p1 * p.p2 * vh * wk / (p.p1 * wk + p.m_s)
            - p.m_w * wv + p.a0;
        assert!((rhs[0].values()[0] - expect_v).abs() < 1e-12);
        assert!((rhs[1].values()[0] - expect_w).abs() < 1e-12);
    }

    #[test]
    fn holling_iii_requires_k_at_least_two() {
        let mut p = Params::default();
        p.k = 1;
        assert!(build_rhs(&spec(ModelKind::HollingIII, p)).is_err());
    }

    #[test]
    fn closed_six_conserves_mass_at_rhs_level() {
        let g = grid();
        let p = Params::default();
        let model = build_rhs(&spec(ModelKind::ClosedSix, p)).unwrap();
        let fields: Vec<Field> = (0..6)
            .map(|s| Field::from_fn(&g, |x, _| 0.4 + 0.1 * (x + s as f64).sin().abs()))
            .collect();
        let rhs = model.reaction_terms(&fields).unwrap();
        for i in 0..g.len() {
            let total: f64 = rhs.iter().map(|f| f.values()[i]).sum();
            assert!(total.abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_three_equals_rescaled_open_limit() {
        let g = grid();
        let mut p = Params::default();
        p.eps1 = 0.0;
        p.eps2 = 0.0;
        p.eps3 = 0.0;
        p.eps4 = 0.0;
        p.eps5 = 0.0;
        p.eps6 = 0.0;
        p.eps7 = 0.0;
        let open = build_rhs(&spec(ModelKind::RescaledOpen, p.clone())).unwrap();
        let reduced = build_rhs(&spec(ModelKind::ReducedThree, p.clone())).unwrap();
        let vs = Field::from_fn(&g, |x, _| 0.3 + 0.2 * x.cos().abs());
        let vh = Field::from_fn(&g, |x, _| 0.5 + 0.1 * (2.0 * x).sin().abs());
        let w = Field::from_fn(&g, |x, _| 1.0 + 0.4 * (0.5 * x).cos());
        let bs = Field::constant(&g, 2.0);
        let bh = Field::constant(&g, 3.0);
        let a = Field::constant(&g, p.a0);
        let rhs_open = open
            .reaction_terms(&[vs.clone(), vh.clone(), w.clone(), bs, bh, a])
            .unwrap();
        let rhs_red = reduced.reaction_terms(&[vs, vh, w]).unwrap();
        for s in 0..3 {
            for i in 0..g.len() {
                let d = (rhs_open[s].values()[i] - rhs_red[s].values()[i]).abs();
                assert!(d < 1e-13, "component {s} differs by {d}");
            }
        }
    }

    #[test]
    fn klausmeier_has_quadratic_water_uptake() {
        let g = grid();
        let p = Params::default();
        let model = build_rhs(&spec(ModelKind::Klausmeier, p.clone())).unwrap();
        let v = Field::constant(&g, 1.7);
        let w1 = Field::constant(&g, 0.9);
        let w0 = Field::constant(&g, 0.0);
        let rhs1 = model.reaction_terms(&[v.clone(), w1]).unwrap();
        let rhs0 = model.reaction_terms(&[v, w0]).unwrap();
        let diff = rhs1[0].values()[0] - rhs0[0].values()[0];
        assert!((diff - p.p1 * 0.9 * 1.7 * 1.7).abs() < 1e-13);
    }

    #[test]
    fn holling_i_matches_summed_closed_rhs_in_the_fast_switch_limit() {
        // Closed reaction part at (vs=v, vh=0, eps_j=0, a=a0), summed over
        // vs+vh, equals the Holling I rhs with m_v = m_s; the w components
        // agree as well.
        let g = grid();
        let mut p = Params::default();
        p.eps1 = 0.0;
        p.eps2 = 0.0;
        p.eps3 = 0.0;
        p.eps4 = 0.0;
        p.m_v = Some(p.m_s);
        let closed = build_rhs(&spec(ModelKind::ClosedSix, p.clone())).unwrap();
        let holling = build_rhs(&spec(ModelKind::HollingI, p.clone())).unwrap();
        let v = Field::from_fn(&g, |x, _| 0.7 + 0.2 * (1.3 * x).cos());
        let w = Field::from_fn(&g, |x, _| 1.1 + 0.3 * (0.7 * x).sin().abs());
        let zero = Field::constant(&g, 0.0);
        let a = Field::constant(&g, p.a0);
        let rhs_closed = closed
            .reaction_terms(&[v.clone(), zero.clone(), w.clone(), zero.clone(), zero, a])
            .unwrap();
        let rhs_holling = holling.reaction_terms(&[v, w]).unwrap();
        for i in 0..g.len() {
            let summed = rhs_closed[0].values()[i] + rhs_closed[1].values()[i];
            assert!((summed - rhs_holling[0].values()[i]).abs() < 1e-8);
            assert!((rhs_closed[2].values()[i] - rhs_holling[1].values()[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn model_kind_names_parse() {
        for kind in [
            ModelKind::ClosedSix,
            ModelKind::RescaledOpen,
            ModelKind::ReducedThree,
            ModelKind::HollingI,
            ModelKind::Klausmeier,
            ModelKind::HollingIIFastSlow,
            ModelKind::HollingIIReduced,
            ModelKind::HollingIII,
            ModelKind::SlowFlow,
        ] {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert_eq!("holling-ii-reduced".parse::<ModelKind>().unwrap(), ModelKind::HollingIIReduced);
        assert!("nope".parse::<ModelKind>().is_err());
    }
}
