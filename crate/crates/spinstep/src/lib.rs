//! Structure-preserving integrators for Hamiltonian systems on products of
//! 2-spheres.
//!
//! The central object is the spherical midpoint method: an implicit one-step
//! map `W - w = h ξ(ρ(w + W))` that evaluates the vector field at the
//! sphere-projected midpoint. It is symplectic, second order, equivariant
//! under `(SO(3))^n`, and needs only the three ambient coordinates per
//! sphere. The crate also provides
//!
//! - the classical midpoint method on `ℝ^{3n}` for comparison,
//! - the extended spherical midpoint method, a Lie-Poisson integrator on
//!   `ℝ^{3n}` that preserves every sphere radius,
//! - a Nambu-system variant for level sets of homogeneous quadratic
//!   Casimirs,
//! - the standard example systems (free / irreversible / forced rigid body,
//!   point vortices on the sphere, Heisenberg spin chain),
//! - a diagnostics suite that verifies the structural properties
//!   numerically: Poisson-bivector preservation through finite-difference
//!   Jacobians, conservation reports, convergence-order studies, Poincaré
//!   sections, and the four-vortex invariant-manifold checks.
//!
//! ```
//! use spinstep::integrators::{integrate, Method, StepConfig};
//! use spinstep::systems::{free_rigid_body, InertiaDiag};
//! use spinstep::geometry::SpinState;
//!
//! let body = free_rigid_body(InertiaDiag::new(1.0, 2.0, 4.0).unwrap());
//! let w0 = SpinState::from_components(&[[1.1_f64.cos(), 0.0, 1.1_f64.sin()]]).unwrap();
//! let cfg = StepConfig::new(0.1).unwrap();
//! let traj = integrate(&body, &w0.to_ambient(), 0.0, &cfg, 100, Method::Spherical, true).unwrap();
//! let energies = traj.energies.as_ref().unwrap();
//! let drift = energies.iter().map(|e| (e - energies[0]).abs()).fold(0.0, f64::max);
//! assert!(drift < 1e-12);
//! ```

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod integrators;
pub mod nambu;
pub mod systems;

pub use error::{Error, Result};
