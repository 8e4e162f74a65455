pub mod assembly;
pub mod femspace;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod solver;
pub mod analysis;
pub mod experiment;
