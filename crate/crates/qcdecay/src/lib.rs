//! Random-matrix models of decay into a quasicontinuum.
//!
//! A discrete level coupled to a dense reservoir of `N_B` levels decays
//! with the golden-rule rate `Gamma = 2 pi rho_B v^2`, and its line
//! shape converges to the Cauchy (Lorentz) profile as the reservoir is
//! refined with `Gamma` held fixed. This crate builds such models,
//! evaluates their spectral densities through two independent routes
//! (Schur-complement resolvent and exact arrowhead eigendecomposition),
//! measures ensemble fluctuations against the predicted variance laws,
//! and drives renormalization flows whose fixed point is the Cauchy
//! line.
//!
//! The companion guide under `book/` walks through the concepts chapter
//! by chapter; the `qcdecay` CLI exposes every experiment as a
//! reproducible subcommand.

pub mod cauchy;
pub mod fano;
pub mod math;
pub mod model;
pub mod resolvent;
pub mod rg;
pub mod stats;

mod dense;

pub use cauchy::CauchyParams;
pub use model::{DecayModel, RandomSeed, Spectrum};
pub use num_complex::Complex64;
pub use resolvent::Eigensystem;
