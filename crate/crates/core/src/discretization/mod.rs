//! Linear finite elements on a [`SurfaceMesh`].

mod assemble;
mod functional;
mod projection;
mod solver;

pub use assemble::{assemble, dirichlet_energy, triangle_energies, FemOperators};
pub use functional::{exp_functional, norm_one_alpha, norm_one_alpha_squared, ExpValue, NormParams};
pub use projection::{project_invariant_meanzero, InvariantProjector, InvariantVector, Subspace};
pub use solver::ShiftedSolver;
