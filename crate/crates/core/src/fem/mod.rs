//! Continuous Galerkin machinery: elements, DOF maps, block sparse systems
//! and the direct solver.

pub mod assembly;
pub mod dofs;
pub mod element;
pub mod field;
pub mod lu;
pub mod ordering;
pub mod sparse;
pub mod system;

pub use assembly::{assemble_boundary_load, assemble_robin, assemble_stiffness_mass, matrix_pattern};
pub use dofs::DofMap;
pub use element::{CellGeometry, Order};
pub use field::ComplexNodalField;
pub use sparse::{Block2, BlockCsr, Pair};
pub use system::{Constraint, Constraints, PreparedSystem, SesquilinearSystem};
