//! Multiple saddle-point solutions of semilinear elliptic problems
//! `-Δu + a(x)u = f(x, u)` with homogeneous Dirichlet data, computed by a
//! normalized local minimax method with Wolfe-Powell-type step sizes.

pub mod directions;
pub mod driver;
pub mod error;
pub mod hilbert;
pub mod problem;
pub mod peak;
pub mod stepsize;
pub mod subspace;

pub use error::{LmmError, Result};
