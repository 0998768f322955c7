//! Finite-element shape optimization of wave-scattering obstacles.

pub mod error;
pub mod export;
pub mod deform;
pub mod fem;
pub mod adjoint;
pub mod geom;
pub mod mesh;
pub mod objective;
pub mod optimize;
pub mod scalar;
pub mod sensitivity;
pub mod state;
pub mod topo_init;
pub mod wave;

pub use error::{Error, Result};
pub use geom::Vec2;
pub use scalar::Real;

pub type Mesh = mesh::TriMesh<f64>;
pub type Mesh32 = mesh::TriMesh<f32>;
pub type Wave = wave::WaveSpec<f64>;
pub type Objective = objective::ObjectiveSpec<f64>;
pub type State = state::StateSolution<f64>;
pub type Config = optimize::OptimizeConfig<f64>;
pub type Topology = optimize::TopologyConfig<f64>;
