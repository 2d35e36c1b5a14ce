//! Spectral simulation and decay diagnostics for the damped, driven cubic
//! NLS `i u_t + ½u_xx + |u|²u = f − iγu` on `[-L, L]` with `u(±L) = 0`.

pub mod analysis;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod linalg;
pub mod model;
mod transform;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{ChebGrid, DerivativeBackend, Differentiator};
pub use integrator::{IntegratorConfig, RunStatus, Scheme, SolverOptions, Trajectory};
pub use model::{DriverSpec, FieldState, ICSpec, ModelParams, PRWParams};
pub use weights::{SpatialWeight, TimeWeight};
