//! Indirect optimal control of quantum state transfer.
//!
//! A density matrix is steered from an initial state toward a target state
//! under the Liouville-von Neumann equation `dρ/dt = -i[H(u), ρ]` with
//! `H(u) = H₀ + Σ uₖ Hₖ`. Piecewise-constant controls are improved by a
//! forward/backward sweep: the state is propagated forward, a matrix costate
//! is propagated backward from the fidelity gradient at the final time, and
//! each slice's control is replaced by the maximizer of the Pontryagin
//! Hamiltonian, clipped to the box and blended with the previous iterate.
//!
//! Module map:
//!
//! - [`linalg`]: dense complex kernels (Hermitian eigendecomposition,
//!   exponentials, PSD square roots, commutators)
//! - [`model`]: control systems, density matrices, schedules, real embedding
//! - [`propagation`]: forward state sweep and backward costate sweep
//! - [`fidelity`]: Uhlmann-Jozsa fidelity and the terminal costate
//! - [`optimizer`]: the sweep/maximize/clip/relax iteration
//! - [`controllability`]: Lie-algebra rank condition
//!
//! Data-parallel inner loops (slice exponentials, finite-difference
//! coordinates, per-slice maximization) run on rayon when the `parallel`
//! feature is enabled and sequentially otherwise; see [`par`].

pub mod controllability;
pub mod error;
pub mod fidelity;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod par;
pub mod propagation;
pub mod sampling;

pub use error::{QocError, Result};
pub use linalg::{CMatrix, Hermitian, Unitary};
pub use model::{ControlSchedule, ControlSystem, DensityMatrix};
pub use par::Execution;
