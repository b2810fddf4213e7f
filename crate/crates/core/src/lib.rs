//! Numerical laboratory for geodesic flows on surfaces of revolution.
//!
//! The library builds dumbbell-shaped spheres of revolution with a flat band
//! and an optional compactly supported metric bump, integrates their geodesic,
//! Jacobi and Riccati equations, counts geodesic segments between points,
//! evolves wavefronts, and analyses the section return maps induced on the
//! boundary circles of the two end regions (twist-map scaling limits,
//! invariant-circle confinement, homoclinic splitting, and finite-time
//! Lyapunov bounds).
//!
//! Everything is deterministic under a fixed seed: map evaluations and
//! trajectory integrations are pure functions of the surface and the
//! configuration, and all Monte Carlo reductions run in a fixed order.

pub mod config;
pub mod counting;
pub mod error;
pub mod export;
pub mod flow;
pub mod homoclinic;
pub mod numeric;
pub mod sections;
pub mod surface;

pub use error::{Error, Result};
pub use flow::{GeodesicState, JacobiState, RiccatiState, Trajectory};
pub use surface::{DumbbellParams, PerturbationBump, ProfileSurface};
