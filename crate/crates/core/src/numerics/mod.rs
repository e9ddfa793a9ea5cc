//! Deterministic numerical kernels shared by the solvers.

mod mesh;
mod ode;
mod powerlaw;
mod quad;
mod roots;
mod tridiag;

pub use mesh::{Mesh, INNER_RADIUS, OUTER_RADIUS};
pub use ode::{integrate_radial_ivp, IvpOptions, IvpResult, Trajectory};
pub use powerlaw::{fit_powerlaw, PowerLawFit};
pub use quad::{adaptive_simpson, quad_weighted, simpson_weights};
pub use roots::{find_root, golden_section_max, RootBracket};
pub use tridiag::{solve_tridiagonal, solve_tridiagonal_in_place, TridiagScalar};
