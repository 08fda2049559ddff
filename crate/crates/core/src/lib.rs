//! Point-vortex dynamics on the rotating unit sphere.
//!
//! The crate covers trajectory integration with invariant monitoring, the
//! log-regularized dynamics and ε-collision statistics, the analytic linearization
//! of the vortex field with eigenvalue-based stability checks, constructors for
//! classical equilibrium families, and particle-cloud ("blob") confinement runs.

pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod rng;
pub mod stability;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{UnitVector3, Vec3};
