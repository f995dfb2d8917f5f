//! Variational minimization of 1-RDM energy functionals inside the ensemble
//! N-representable domain.
//!
//! The crate is organized around the geometry of the representable set: a
//! one-particle reduced density matrix (two real symmetric spin blocks) is
//! representable exactly when every natural occupation number lies in [0, 1].
//! That set is convex, its extreme points are the idempotent matrices, and a
//! pseudo-distance `min(eta_1, 1 - eta_N)` measures how far inside a matrix
//! sits. The solvers exploit this: descent directions are followed to the
//! domain boundary and the energy is re-minimized over convex interpolations
//! of the boundary points found so far, so every iterate stays representable
//! by construction.
//!
//! Modules:
//! - [`rdm`] — density-matrix types, domain classification, convex
//!   decomposition into idempotent extreme points.
//! - [`models`] — Hubbard chains and FCIDUMP-ingested molecular Hamiltonians.
//! - [`functionals`] — Hartree–Fock, Mueller, and Toews–Pastor energy
//!   functionals with analytic and finite-difference gradients.
//! - [`solver`] — mono- and multi-parameter interpolation minimizers.
//! - [`soft`] — pseudo-Kohn–Sham self-consistency over site occupations and
//!   extraction of the diagonal Hxc potential.
//! - [`oracle`] — exact diagonalization, tight-binding, and Lieb–Wu
//!   references for validation.

pub mod functionals;
pub mod mat;
pub mod models;
pub mod oracle;
pub mod rdm;
pub mod soft;
pub mod solver;

pub use functionals::{DiagonalMode, EnergyReport, FunctionalKind, FunctionalSpec};
pub use models::{Interaction, LatticeSpec, ManyBodyModel};
pub use rdm::{ConvexDecomposition, DensityMatrix, DomainClass, DomainTag, SpectralDecomposition};
pub use solver::{Direction, DivaConfig, DivaMode, DivaOutcome, DivaTrace};
