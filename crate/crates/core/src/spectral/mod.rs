//! P1 finite elements on subgraph domains and eigenvalue counting by matrix
//! inertia.

pub mod assemble;
pub mod eigen;
pub mod estimators;
pub mod ldl;
pub mod mesh;
pub mod sparse;

pub use assemble::{assemble, Bc, DiscreteOperator};
pub use eigen::{count_below, dense_eigenpairs, lowest_eigenvalues, CountResult};
pub use estimators::{
    estimate_poincare_constant, estimate_ps_constant, PoincareFit, PoincareTemplate, PsEstimate,
};
pub use ldl::{dense_inertia, inertia, Inertia};
pub use mesh::{triangulate, triangulate_profile, Mesh, MeshOptions};
pub use sparse::{SymMatrix, SymPattern};
