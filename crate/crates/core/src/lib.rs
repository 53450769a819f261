//! Relativistic Boltzmann kinetics: collision kinematics, Lorentz frames,
//! cross sections, equilibria, collision-operator quadrature, near-vacuum
//! mild-form solvers and Newtonian-limit experiments.

pub mod checks;
pub mod collision_op;
pub mod cross_sections;
pub mod distributions;
pub mod error;
pub mod frames;
pub mod grid;
pub mod kinematics;
pub mod limit_harness;
pub mod lorentz;
pub mod par;
pub mod quadrature;
pub mod solver;
pub mod vector;

pub use error::{Error, Result};
pub use vector::{MomentumVec, Position};
