//! Finite-element forward solver on the unit disk.

pub mod mesh;
pub mod potential;
pub mod solve;
pub mod sparse;

pub use mesh::{generate_mesh, generate_mesh_with, Mesh, MeshOptions};
pub use potential::{boundary_current, homogeneous_potential, potential_gradient, CurrentKind};
pub use solve::{
    assemble_stiffness, boundary_inner_product, boundary_integral, boundary_mean, difference_load,
    energy_inner_product, solve_difference, DifferenceSolver, FemSolution,
};
