//! The controlled quantum system and its state.

mod density;
mod embedding;
mod schedule;
mod system;

pub use density::{density_from_ensemble, DensityMatrix, DENSITY_TOL};
pub use embedding::{embed_state, real_embedding};
pub use schedule::ControlSchedule;
pub use system::{spin_half_generators, spin_half_hamiltonians, ControlSystem};
