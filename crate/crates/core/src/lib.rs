//! Numerical geometrothermodynamics.
//!
//! Starting from a fundamental equation `Phi(E^a)`, this crate builds the
//! Legendre-invariant phase-space metrics and their equilibrium pullbacks,
//! classical Hessian metrics (Weinhold, Ruppeiner), their curvature, and a
//! set of diagnostics around contact transformations and Hessian structure.
//!
//! All derivatives come from [`jets`], a truncated multivariate Taylor
//! arithmetic, so curvature is exact up to floating-point rounding.

pub mod analysis;
pub mod catalog;
pub mod error;
pub mod expr;
pub mod grid;
pub mod gtd;
pub mod jets;
pub mod manifold;
pub mod phase;

pub use error::{Error, Result};
