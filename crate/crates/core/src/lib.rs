//! Multiscale reaction-diffusion laboratory.
//!
//! The crate builds reversible mass-action reaction networks from a small
//! text DSL, assembles the associated reaction-diffusion systems (closed,
//! rescaled open, reduced, Holling I/II/III, Klausmeier, fast-slow pair and
//! projected slow flow), integrates them with IMEX or Strang splitting on
//! uniform Neumann grids, audits the energetic structure (free energy,
//! diffusive and reactive dissipation, affinities, mass), and runs the
//! fast-slow diagnostics: epsilon-sweep convergence studies, slow-manifold
//! graph approximations and their invariance defects.
//!
//! Module layout mirrors the pipeline:
//!
//! * [`reaction_net`] — DSL parser, stoichiometry, mass-action kinetics.
//! * [`grid_ops`] — grids, Neumann Laplacian, norms, cosine-mode splitting.
//! * [`models`] — parameter set and assembly of every supported system.
//! * [`energetics`] — equilibria, free energy, dissipation functionals.
//! * [`solver`] — IMEX-Euler / Strang time integration with diagnostics.
//! * [`multiscale`] — prepared data, convergence studies, slow manifolds.

pub mod energetics;
pub mod error;
pub mod grid_ops;
pub mod models;
pub mod multiscale;
pub mod reaction_net;
pub mod solver;

pub use error::{Error, Result};
pub use grid_ops::{Field, Grid, Norm, Part, SpectralSplit};
pub use models::{Model, ModelKind, ModelSpec, Params};
pub use reaction_net::ReactionNetwork;
pub use solver::{Scheme, StepperConfig, SystemState, Trajectory};
