//! Collision-based hybrid discontinuous Galerkin solver for the
//! one-dimensional BGK equation.
//!
//! The distribution is split every step into an uncollided part, advanced
//! implicitly at full velocity resolution by transport sweeps, and a
//! collided part, advanced explicitly as Euler moments. IMEX Runge-Kutta
//! integrators of the unsplit discrete-velocity system serve as baselines.

pub mod basis;
pub mod benchmarks;
pub mod collided;
pub mod error;
pub mod field;
pub mod hybrid;
pub mod imex;
pub mod mesh;
pub mod quadrature;
pub mod uncollided;
pub mod velocity;

pub use basis::{evaluate_field, DGBasis, ElementMatrices};
pub use error::{Error, Result};
pub use field::{Discretization, KineticField, MomentField};
pub use mesh::SpatialMesh;
pub use uncollided::{BoundarySpec, Side};
pub use velocity::{Moments, Primitives, VelocityGrid};
