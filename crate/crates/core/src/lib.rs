//! Equilibria and phonon-gap analysis for generalized Frenkel-Kontorova chains.
//!
//! Two families are covered. Near-integrable quasi-periodic chains are
//! handled through hull functions ([`hull`]); strongly coupled chains through
//! the anti-integrable continuation ([`equilibrium`]). [`phonon`] measures
//! the spectrum of the Hessian on finite windows for either.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibrium;
pub mod error;
pub mod hull;
pub mod model;
pub mod phonon;
pub mod spectral;

pub use equilibrium::{
    anti_integrable_solve, check_aubry_criterion, newton_solve_window, residual, uniqueness_probe, Addresses,
    AiSolveReport, AubryCertificate, AubryParams, GradientField, ZeroSet,
};
pub use error::{Error, Result};
pub use hull::{hull_newton_solve, hull_residual, HullFunction, HullSolution, HullSolveOptions};
pub use model::{
    Boundary, Configuration, FourierMode, FrequencyModule, InteractionPotential, Lagrangian, OnSite, Potential,
    QuasiPeriodicPotential, WellPotential,
};
pub use phonon::{gap_sweep, GapReport, GapRow, Verdict, VerdictRules};
pub use spectral::{spectral_extrema, HessianWindow, SpectralExtrema};
