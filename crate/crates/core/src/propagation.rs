//! Forward density sweep and backward costate sweep under piecewise-constant
//! controls.
//!
//! Slice `k` carries `S_k = exp(-i Δt H(u_k))`. The state at boundary `k` is
//! `ρ_k = U_k ρ₀ U_k†` with `U_k = S_{k-1} ··· S_0`, and the costate is
//! `Λ_k = V_k† Λ_T V_k` with `V_k = S_{N-1} ··· S_k`.

use crate::error::{QocError, Result};
use crate::linalg::{commutator, expm_skew_generator, CMatrix, Hermitian, Unitary};
use crate::model::{ControlSchedule, ControlSystem, DensityMatrix};
use crate::par::{try_map_range, Execution};

/// How the cumulative propagators are formed from the slice Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagatorForm {
    /// Time-ordered product of slice exponentials.
    #[default]
    OrderedProduct,
    /// `exp(-i Δt Σ H_l)`: a single exponential of the summed slice
    /// Hamiltonians. Agrees with the ordered product only when the slice
    /// Hamiltonians commute; kept for reproduction experiments.
    SummedExponent,
}

/// `-i[H, ρ]`.
pub fn rhs_liouville(rho: &DensityMatrix, h: &Hermitian) -> Result<CMatrix> {
    let k = commutator(h.as_matrix(), rho.as_matrix())?;
    Ok(k.map(|z| z * num_complex::Complex64::new(0.0, -1.0)))
}

fn check_schedule(sys: &ControlSystem, sched: &ControlSchedule) -> Result<()> {
    if sched.channels() != sys.num_controls() {
        return Err(QocError::InvalidArgument(format!(
            "schedule has {} channels, system has {}",
            sched.channels(),
            sys.num_controls()
        )));
    }
    Ok(())
}

/// Per-slice exponentials `S_k = exp(-i Δt H(u_k))`.
pub fn slice_propagators(sys: &ControlSystem, sched: &ControlSchedule) -> Result<Vec<Unitary>> {
    slice_propagators_with(sys, sched, Execution::default())
}

pub fn slice_propagators_with(sys: &ControlSystem, sched: &ControlSchedule, exec: Execution) -> Result<Vec<Unitary>> {
    check_schedule(sys, sched)?;
    let dt = sched.slice_duration();
    try_map_range(exec, sched.slices(), |k| {
        let h = sys.total_hamiltonian(&sched.control_at(k))?;
        expm_skew_generator(&h, dt)
    })
}

/// Cumulative forward and backward propagators for one schedule.
#[derive(Debug, Clone)]
pub struct PropagatorSet {
    /// `U_1 .. U_N`.
    forward: Vec<Unitary>,
    /// `V_0 .. V_{N-1}`.
    backward: Vec<Unitary>,
    dim: usize,
}

impl PropagatorSet {
    pub fn build(sys: &ControlSystem, sched: &ControlSchedule, form: PropagatorForm, exec: Execution) -> Result<Self> {
        check_schedule(sys, sched)?;
        let n = sched.slices();
        let dim = sys.dim();
        let (forward, backward) = match form {
            PropagatorForm::OrderedProduct => {
                let slices = slice_propagators_with(sys, sched, exec)?;
                let mut forward = Vec::with_capacity(n);
                let mut acc = Unitary::identity(dim);
                for s in &slices {
                    acc = s.then_after(&acc);
                    forward.push(acc.clone());
                }
                let mut backward = vec![Unitary::identity(dim); n];
                let mut acc = Unitary::identity(dim);
                for k in (0..n).rev() {
                    acc = acc.then_after(&slices[k]);
                    backward[k] = acc.clone();
                }
                (forward, backward)
            }
            PropagatorForm::SummedExponent => {
                let dt = sched.slice_duration();
                let hams = try_map_range(exec, n, |k| sys.total_hamiltonian(&sched.control_at(k)))?;
                let summed = |range: std::ops::Range<usize>| -> Result<Unitary> {
                    let mut sum = Hermitian::zeros(dim);
                    for l in range {
                        sum = sum.add_scaled(1.0, &hams[l])?;
                    }
                    expm_skew_generator(&sum, dt)
                };
                let forward = try_map_range(exec, n, |k| summed(0..k + 1))?;
                let backward = try_map_range(exec, n, |k| summed(k..n))?;
                (forward, backward)
            }
        };
        Ok(PropagatorSet { forward, backward, dim })
    }

    pub fn slices(&self) -> usize {
        self.forward.len()
    }

    pub fn forward(&self) -> &[Unitary] {
        &self.forward
    }

    pub fn backward(&self) -> &[Unitary] {
        &self.backward
    }

    pub fn evolve(&self, rho0: &DensityMatrix) -> Result<StateTrajectory> {
        if rho0.dim() != self.dim {
            return Err(QocError::DimensionMismatch {
                expected: self.dim,
                found: rho0.dim(),
            });
        }
        let mut states = Vec::with_capacity(self.forward.len() + 1);
        states.push(rho0.clone());
        for (k, u) in self.forward.iter().enumerate() {
            let rho = u.conjugate_hermitian(rho0.as_hermitian());
            let rho = DensityMatrix::from_hermitian(rho).map_err(|e| {
                QocError::Internal(format!("state at slice boundary {} left the density set: {e}", k + 1))
            })?;
            states.push(rho);
        }
        Ok(StateTrajectory {
            states,
            propagators: self.forward.clone(),
        })
    }

    pub fn costate(&self, lambda_t: &Hermitian) -> Result<CostateTrajectory> {
        if lambda_t.dim() != self.dim {
            return Err(QocError::DimensionMismatch {
                expected: self.dim,
                found: lambda_t.dim(),
            });
        }
        let mut costates: Vec<Hermitian> = self
            .backward
            .iter()
            .map(|v| v.adjoint().conjugate_hermitian(lambda_t))
            .collect();
        costates.push(lambda_t.clone());
        Ok(CostateTrajectory { costates })
    }
}

/// Density matrices at the slice boundaries `t_0 .. t_N`.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    states: Vec<DensityMatrix>,
    propagators: Vec<Unitary>,
}

impl StateTrajectory {
    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.states[0]
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// Cumulative propagators `U_1 .. U_N`.
    pub fn propagators(&self) -> &[Unitary] {
        &self.propagators
    }
}

/// Costates `Λ_0 .. Λ_N` at the slice boundaries; `Λ_N` is the terminal value.
#[derive(Debug, Clone)]
pub struct CostateTrajectory {
    costates: Vec<Hermitian>,
}

impl CostateTrajectory {
    pub fn costates(&self) -> &[Hermitian] {
        &self.costates
    }

    pub fn terminal(&self) -> &Hermitian {
        self.costates.last().expect("costate trajectory is never empty")
    }
}

/// Forward sweep with the time-ordered product.
pub fn evolve_density(rho0: &DensityMatrix, sys: &ControlSystem, sched: &ControlSchedule) -> Result<StateTrajectory> {
    PropagatorSet::build(sys, sched, PropagatorForm::default(), Execution::default())?.evolve(rho0)
}

/// Backward sweep from `Λ_T` with the time-ordered product.
pub fn propagate_costate(
    lambda_t: &Hermitian,
    sys: &ControlSystem,
    sched: &ControlSchedule,
) -> Result<CostateTrajectory> {
    PropagatorSet::build(sys, sched, PropagatorForm::default(), Execution::default())?.costate(lambda_t)
}
