//! Indirect (Pontryagin) iteration for the fidelity/energy trade-off
//!
//! minimize `J = -𝓕(ρ(T), σ) + η ∫ uᵀu dt` subject to `dρ/dt = -i[H(u), ρ]`
//! and `|u_c| ≤ u_max` per channel.
//!
//! One iteration:
//!
//! 1. forward sweep `ρ_0 .. ρ_N` with the current controls
//! 2. terminal costate `Λ_N = ∇_ρ 𝓕(ρ_N, σ)`
//! 3. backward sweep `Λ_N .. Λ_0`
//! 4. per slice, maximize `𝓗(ρ_k, u, Λ_k) = Re tr(Λ_k† (-i[H(u), ρ_k])) - η uᵀu`
//! 5. clip the maximizer to the box
//! 6. stop if no channel moved by `ε` or more; otherwise blend
//!    `u ← clip(u + δ (u_new - u))` and repeat.
//!
//! `𝓗` is linear in `u` through `H(u)` minus a separable quadratic, so the
//! box-constrained maximizer is the clipped unconstrained one, `u_c = s_c / 2η`
//! with switching coefficient `s_c = Re tr(Λ† (-i[H_c, ρ]))`.

use log::{debug, warn};

use crate::error::{invalid, QocError, Result};
use crate::fidelity::{
    regularize_for_gradient, terminal_costate_closed_form, terminal_costate_numeric_with, uhlmann_fidelity,
    validate_closed_form, ClosedFormValidation, GradientBackend, TerminalCostate, DEFAULT_FD_STEP,
};
use crate::linalg::{frobenius, hs_inner, Hermitian};
use crate::model::{ControlSchedule, ControlSystem, DensityMatrix};
use crate::par::{try_map_range, Execution};
use crate::propagation::{rhs_liouville, CostateTrajectory, PropagatorForm, PropagatorSet, StateTrajectory};

/// Imaginary part allowed in `tr(Λ† F)`, relative to `max(1, ‖Λ‖‖F‖)`.
const IMAG_TOL: f64 = 1e-9;
/// Random pairs used to vet the closed-form terminal costate before a run.
const CLOSED_FORM_SAMPLES: usize = 20;
const CLOSED_FORM_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Energy weight `η ≥ 0`.
    pub eta: f64,
    /// Relaxation coefficient `δ ∈ (0, 1]`.
    pub delta: f64,
    /// Stopping threshold on the max-abs control change.
    pub epsilon: f64,
    pub slices: usize,
    pub horizon: f64,
    pub u_max: f64,
    pub max_iterations: usize,
    /// `channels × slices`; `None` starts from zero.
    pub init_controls: Option<Vec<Vec<f64>>>,
    pub gradient: GradientBackend,
    pub fd_step: f64,
    pub propagator: PropagatorForm,
    pub execution: Execution,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            eta: 0.01,
            delta: 0.1,
            epsilon: 1e-3,
            slices: 20,
            horizon: 1.0,
            u_max: 1.0,
            max_iterations: 1000,
            init_controls: None,
            gradient: GradientBackend::default(),
            fd_step: DEFAULT_FD_STEP,
            propagator: PropagatorForm::default(),
            execution: Execution::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(invalid(msg)) };
        check(
            self.eta >= 0.0 && self.eta.is_finite(),
            format!("eta = {}, expected >= 0", self.eta),
        )?;
        check(
            self.delta > 0.0 && self.delta <= 1.0,
            format!("delta = {}, expected in (0, 1]", self.delta),
        )?;
        check(
            self.epsilon > 0.0 && self.epsilon.is_finite(),
            format!("epsilon = {}, expected > 0", self.epsilon),
        )?;
        check(self.slices >= 1, "slices must be at least 1".into())?;
        check(
            self.horizon > 0.0 && self.horizon.is_finite(),
            format!("horizon = {}, expected > 0", self.horizon),
        )?;
        check(
            self.u_max > 0.0 && self.u_max.is_finite(),
            format!("u_max = {}, expected > 0", self.u_max),
        )?;
        check(self.max_iterations >= 1, "max_iterations must be at least 1".into())?;
        check(
            self.fd_step.is_finite() && self.fd_step > 0.0,
            format!("fd_step = {}, expected > 0", self.fd_step),
        )?;
        Ok(())
    }

    /// Starting schedule, checked against the channel count and the box.
    pub fn initial_schedule(&self, channels: usize) -> Result<ControlSchedule> {
        let sched = match &self.init_controls {
            None => ControlSchedule::zeros(channels, self.slices, self.horizon)?,
            Some(values) => {
                if values.len() != channels || values.iter().any(|ch| ch.len() != self.slices) {
                    return Err(invalid(format!(
                        "init_controls must be {channels} x {} (channels x slices)",
                        self.slices
                    )));
                }
                ControlSchedule::new(self.horizon, values.clone())?
            }
        };
        if sched.values().iter().flatten().any(|v| v.abs() > self.u_max) {
            return Err(invalid(format!("init_controls exceed u_max = {}", self.u_max)));
        }
        Ok(sched)
    }
}

/// Diagnostics for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// Max-abs change between the clipped maximizer and the current
    /// controls, per channel.
    pub residuals: Vec<f64>,
    /// `𝓕(ρ(T), σ)` under the controls entering this iteration.
    pub fidelity: f64,
    /// `J` under the controls entering this iteration.
    pub cost: f64,
    /// `𝓗` at the clipped maximizer, per slice.
    pub pontryagin_values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    records: Vec<IterationRecord>,
}

impl IterationLog {
    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn fidelities(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.fidelity).collect()
    }

    /// First iteration whose fidelity exceeds `threshold`.
    pub fn first_exceeding(&self, threshold: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.fidelity > threshold)
            .map(|r| r.iteration)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub controls: ControlSchedule,
    /// Forward sweep under `controls`.
    pub trajectory: StateTrajectory,
    /// Backward sweep under `controls`.
    pub costates: CostateTrajectory,
    pub log: IterationLog,
    pub converged: bool,
    pub iterations_used: usize,
    pub final_fidelity: f64,
    pub final_cost: f64,
    /// Backend that actually produced the terminal costates.
    pub gradient_backend: GradientBackend,
    /// Present when the closed form was requested.
    pub closed_form_validation: Option<ClosedFormValidation>,
}

/// Switching coefficients `s_c = Re tr(Λ† (-i[H_c, ρ]))`.
pub fn switching_coefficients(rho: &DensityMatrix, lambda: &Hermitian, sys: &ControlSystem) -> Result<Vec<f64>> {
    sys.controls()
        .iter()
        .map(|hc| Ok(hs_inner(lambda.as_matrix(), &rhs_liouville(rho, hc)?)?.re))
        .collect()
}

/// `𝓗(ρ, u, Λ) = Re tr(Λ† (-i[H(u), ρ])) - η uᵀu`.
pub fn pontryagin_hamiltonian(
    rho: &DensityMatrix,
    u: &[f64],
    lambda: &Hermitian,
    sys: &ControlSystem,
    eta: f64,
) -> Result<f64> {
    let h = sys.total_hamiltonian(u)?;
    let f = rhs_liouville(rho, &h)?;
    let pairing = hs_inner(lambda.as_matrix(), &f)?;
    let scale = (frobenius(lambda.as_matrix()) * frobenius(&f)).max(1.0);
    if pairing.im.abs() > IMAG_TOL * scale {
        return Err(QocError::Internal(format!(
            "tr(Λ† F) has imaginary part {:e}",
            pairing.im
        )));
    }
    Ok(pairing.re - eta * u.iter().map(|v| v * v).sum::<f64>())
}

/// Unconstrained per-slice maximizer of `𝓗`.
#[derive(Debug, Clone, PartialEq)]
pub enum SliceMaximizer {
    /// `η > 0`: `u_c = s_c / 2η`.
    Interior(Vec<f64>),
    /// `η = 0`: `𝓗` is linear and the maximizer sits on the box boundary;
    /// holds the switching coefficients.
    BangBang(Vec<f64>),
}

impl SliceMaximizer {
    /// The box-constrained maximizer. For bang-bang channels with a zero
    /// switching coefficient every value is optimal and `previous` is kept.
    pub fn resolve(&self, u_max: f64, previous: &[f64]) -> Vec<f64> {
        match self {
            SliceMaximizer::Interior(u) => clip_controls(u, u_max),
            SliceMaximizer::BangBang(s) => s
                .iter()
                .zip(previous)
                .map(|(&sc, &prev)| {
                    if sc == 0.0 {
                        prev.clamp(-u_max, u_max)
                    } else {
                        u_max * sc.signum()
                    }
                })
                .collect(),
        }
    }
}

pub fn maximize_slice_controls(
    rho: &DensityMatrix,
    lambda: &Hermitian,
    sys: &ControlSystem,
    eta: f64,
) -> Result<SliceMaximizer> {
    if eta.is_nan() || eta < 0.0 {
        return Err(invalid(format!("eta = {eta}, expected >= 0")));
    }
    let s = switching_coefficients(rho, lambda, sys)?;
    if eta == 0.0 {
        return Ok(SliceMaximizer::BangBang(s));
    }
    Ok(SliceMaximizer::Interior(s.iter().map(|sc| sc / (2.0 * eta)).collect()))
}

/// `min(|u|, u_max) · sign(u)` per component.
pub fn clip_controls(u: &[f64], u_max: f64) -> Vec<f64> {
    u.iter().map(|v| v.abs().min(u_max).copysign(*v)).collect()
}

/// `clip(u_prev + δ (u_new - u_prev))`.
pub fn relaxation_update(u_prev: &[f64], u_new: &[f64], delta: f64, u_max: f64) -> Vec<f64> {
    let blended: Vec<f64> = u_prev.iter().zip(u_new).map(|(p, n)| p + delta * (n - p)).collect();
    clip_controls(&blended, u_max)
}

/// `max_k |a_c[k] - b_c[k]|` for each channel `c`.
pub fn max_abs_change(a: &ControlSchedule, b: &ControlSchedule) -> Result<Vec<f64>> {
    if !a.same_shape(b) {
        return Err(invalid(format!(
            "schedules differ in shape: {}x{} vs {}x{}",
            a.channels(),
            a.slices(),
            b.channels(),
            b.slices()
        )));
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
        .collect())
}

/// True iff every channel moved by strictly less than `epsilon`.
pub fn stopping_test(u_j: &ControlSchedule, u_jm1: &ControlSchedule, epsilon: f64) -> Result<bool> {
    Ok(max_abs_change(u_j, u_jm1)?.iter().all(|r| *r < epsilon))
}

/// `J = -𝓕(ρ(T), σ) + η Σ_k Δt uₖᵀuₖ`.
pub fn cost_functional(
    trajectory: &StateTrajectory,
    controls: &ControlSchedule,
    sigma: &DensityMatrix,
    eta: f64,
) -> Result<f64> {
    let fidelity = uhlmann_fidelity(trajectory.final_state(), sigma)?.value;
    Ok(-fidelity + eta * control_energy(controls))
}

/// `Σ_k Δt uₖᵀuₖ` (left-endpoint rule, exact for piecewise-constant controls).
pub fn control_energy(controls: &ControlSchedule) -> f64 {
    let dt = controls.slice_duration();
    controls.values().iter().flatten().map(|v| dt * v * v).sum()
}

fn terminal_costate(
    rho_t: &DensityMatrix,
    sigma: &DensityMatrix,
    backend: GradientBackend,
    cfg: &OptimizerConfig,
) -> Result<TerminalCostate> {
    match backend {
        GradientBackend::ClosedForm => terminal_costate_closed_form(rho_t, sigma),
        GradientBackend::FiniteDifference => {
            let rho = regularize_for_gradient(rho_t, cfg.fd_step)?;
            terminal_costate_numeric_with(&rho, sigma, cfg.fd_step, cfg.execution)
        }
    }
}

struct Sweep {
    trajectory: StateTrajectory,
    costates: CostateTrajectory,
    fidelity: f64,
    cost: f64,
}

fn sweep(
    rho0: &DensityMatrix,
    sigma: &DensityMatrix,
    sys: &ControlSystem,
    controls: &ControlSchedule,
    backend: GradientBackend,
    cfg: &OptimizerConfig,
) -> Result<Sweep> {
    let set = PropagatorSet::build(sys, controls, cfg.propagator, cfg.execution)?;
    let trajectory = set.evolve(rho0)?;
    let fidelity = uhlmann_fidelity(trajectory.final_state(), sigma)?.value;
    let cost = -fidelity + cfg.eta * control_energy(controls);
    let lambda_t = terminal_costate(trajectory.final_state(), sigma, backend, cfg)?;
    let costates = set.costate(&lambda_t.matrix)?;
    Ok(Sweep {
        trajectory,
        costates,
        fidelity,
        cost,
    })
}

fn resolve_backend(requested: GradientBackend, dim: usize) -> Result<(GradientBackend, Option<ClosedFormValidation>)> {
    match requested {
        GradientBackend::FiniteDifference => Ok((requested, None)),
        GradientBackend::ClosedForm if dim != 2 => {
            warn!("closed-form terminal costate needs dimension 2 (got {dim}); using finite differences");
            Ok((GradientBackend::FiniteDifference, None))
        }
        GradientBackend::ClosedForm => {
            let v = validate_closed_form(CLOSED_FORM_SAMPLES, CLOSED_FORM_SEED)?;
            if v.conforming {
                Ok((GradientBackend::ClosedForm, Some(v)))
            } else {
                warn!(
                    "closed-form terminal costate disagrees with finite differences \
                     (max relative error {:.3e} > {:.1e}); using finite differences",
                    v.max_relative_error, v.tolerance
                );
                Ok((GradientBackend::FiniteDifference, Some(v)))
            }
        }
    }
}

/// Runs the iteration until the stopping test passes or
/// `cfg.max_iterations` is exhausted. Non-convergence is reported through
/// [`Solution::converged`], not as an error.
pub fn solve(
    rho0: &DensityMatrix,
    sigma: &DensityMatrix,
    sys: &ControlSystem,
    cfg: &OptimizerConfig,
) -> Result<Solution> {
    cfg.validate()?;
    let n = sys.dim();
    for (name, state) in [("initial state", rho0), ("target state", sigma)] {
        if state.dim() != n {
            return Err(invalid(format!("{name} has dimension {}, system has {n}", state.dim())));
        }
    }
    let (backend, closed_form_validation) = resolve_backend(cfg.gradient, n)?;
    let mut controls = cfg.initial_schedule(sys.num_controls())?;
    let mut log = IterationLog::default();
    let mut converged = false;

    for iteration in 1..=cfg.max_iterations {
        let current = sweep(rho0, sigma, sys, &controls, backend, cfg)?;
        let states = current.trajectory.states();
        let costates = current.costates.costates();

        let per_slice = try_map_range(cfg.execution, controls.slices(), |k| -> Result<(Vec<f64>, f64)> {
            let maximizer = maximize_slice_controls(&states[k], &costates[k], sys, cfg.eta)?;
            let u = maximizer.resolve(cfg.u_max, &controls.control_at(k));
            let value = pontryagin_hamiltonian(&states[k], &u, &costates[k], sys, cfg.eta)?;
            Ok((u, value))
        })?;
        let (slices, pontryagin_values): (Vec<Vec<f64>>, Vec<f64>) = per_slice.into_iter().unzip();
        let proposal = ControlSchedule::from_slices(controls.horizon(), &slices)?;
        let residuals = max_abs_change(&proposal, &controls)?;

        debug!(
            "iteration {iteration}: fidelity {:.6}, cost {:.6}, residuals {:?}",
            current.fidelity, current.cost, residuals
        );
        log.records.push(IterationRecord {
            iteration,
            residuals,
            fidelity: current.fidelity,
            cost: current.cost,
            pontryagin_values,
        });

        // The first iteration has no predecessor to compare against.
        if iteration >= 2 && stopping_test(&proposal, &controls, cfg.epsilon)? {
            controls = proposal;
            converged = true;
            break;
        }

        let relaxed: Vec<Vec<f64>> = controls
            .values()
            .iter()
            .zip(proposal.values())
            .map(|(prev, new)| relaxation_update(prev, new, cfg.delta, cfg.u_max))
            .collect();
        controls = ControlSchedule::new(controls.horizon(), relaxed)?;
    }

    let last = sweep(rho0, sigma, sys, &controls, backend, cfg)?;
    Ok(Solution {
        iterations_used: log.len(),
        controls,
        trajectory: last.trajectory,
        costates: last.costates,
        log,
        converged,
        final_fidelity: last.fidelity,
        final_cost: last.cost,
        gradient_backend: backend,
        closed_form_validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::evolve_density;
    use crate::sampling::{random_density, random_hermitian, seeded};
    use rand::Rng;

    fn paper_system() -> ControlSystem {
        ControlSystem::spin_half(0.001)
    }

    fn up() -> DensityMatrix {
        DensityMatrix::basis_state(2, 0).unwrap()
    }

    fn down() -> DensityMatrix {
        DensityMatrix::basis_state(2, 1).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let mut rng = seeded(1);
        let sys = paper_system();
        let rho = random_density(&mut rng, 2);
        let u = [0.4, -0.3];
        let v = pontryagin_hamiltonian(&rho, &u, &Hermitian::zeros(2), &sys, 0.01).unwrap();
        assert!((v + 0.01 * 0.25).abs() < 1e-16);

        let diag = DensityMatrix::new(Hermitian::from_real_diagonal(&[0.7, 0.3]).into_inner()).unwrap();
        let lambda = random_hermitian(&mut rng, 2, 1.0);
        assert!(
            pontryagin_hamiltonian(&diag, &[0.0, 0.0], &lambda, &sys, 0.01)
                .unwrap()
                .abs()
                < 1e-16
        );
    }

    #[test]
    fn hamiltonian_is_concave_in_controls() {
        let mut rng = seeded(2);
        let sys = paper_system();
        for _ in 0..50 {
            let rho = random_density(&mut rng, 2);
            let lambda = random_hermitian(&mut rng, 2, 1.0);
            let a = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let b = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let h = |u: &[f64]| pontryagin_hamiltonian(&rho, u, &lambda, &sys, 0.05).unwrap();
            assert!(h(&mid) >= (h(&a) + h(&b)) / 2.0 - 1e-12);
        }
    }

    #[test]
    fn identity_costate_gives_zero_control() {
        let mut rng = seeded(3);
        let rho = random_density(&mut rng, 2);
        let m = maximize_slice_controls(&rho, &Hermitian::identity(2), &paper_system(), 0.01).unwrap();
        match m {
            SliceMaximizer::Interior(u) => assert!(u.iter().all(|v| v.abs() < 1e-14)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn maximizer_matches_grid_search() {
        let mut rng = seeded(4);
        let sys = paper_system();
        let (eta, u_max) = (0.3, 1.0);
        for _ in 0..20 {
            let rho = random_density(&mut rng, 2);
            let lambda = random_hermitian(&mut rng, 2, 1.0);
            let SliceMaximizer::Interior(u) = maximize_slice_controls(&rho, &lambda, &sys, eta).unwrap() else {
                panic!("eta > 0");
            };
            // 𝓗 is separable, so each channel can be searched with the other at 0.
            let grid: Vec<f64> = (0..401)
                .map(|i| -5.0 * u_max + i as f64 * 10.0 * u_max / 400.0)
                .collect();
            let spacing = 10.0 * u_max / 400.0;
            for ch in 0..2 {
                let best = grid
                    .iter()
                    .copied()
                    .max_by(|a, b| {
                        let mut ua = [0.0, 0.0];
                        let mut ub = [0.0, 0.0];
                        ua[ch] = *a;
                        ub[ch] = *b;
                        let ha = pontryagin_hamiltonian(&rho, &ua, &lambda, &sys, eta).unwrap();
                        let hb = pontryagin_hamiltonian(&rho, &ub, &lambda, &sys, eta).unwrap();
                        ha.total_cmp(&hb)
                    })
                    .unwrap();
                if u[ch].abs() < 5.0 * u_max {
                    assert!((best - u[ch]).abs() <= spacing / 2.0 + 1e-12, "{best} vs {}", u[ch]);
                }
            }
        }
    }

    #[test]
    fn doubling_eta_halves_the_maximizer() {
        let mut rng = seeded(5);
        let rho = random_density(&mut rng, 2);
        let lambda = random_hermitian(&mut rng, 2, 1.0);
        let sys = paper_system();
        let (SliceMaximizer::Interior(a), SliceMaximizer::Interior(b)) = (
            maximize_slice_controls(&rho, &lambda, &sys, 0.1).unwrap(),
            maximize_slice_controls(&rho, &lambda, &sys, 0.2).unwrap(),
        ) else {
            panic!("eta > 0");
        };
        for (x, y) in a.iter().zip(&b) {
            assert!((x - 2.0 * y).abs() < 1e-15);
        }
    }

    #[test]
    fn bang_bang_when_energy_is_free() {
        let mut rng = seeded(6);
        let rho = random_density(&mut rng, 2);
        let lambda = random_hermitian(&mut rng, 2, 1.0);
        let m = maximize_slice_controls(&rho, &lambda, &paper_system(), 0.0).unwrap();
        let SliceMaximizer::BangBang(s) = &m else {
            panic!("eta = 0")
        };
        let u = m.resolve(0.7, &[0.2, -0.1]);
        for (uc, sc) in u.iter().zip(s) {
            assert_eq!(*uc, 0.7 * sc.signum());
        }
        let tie = SliceMaximizer::BangBang(vec![0.0, 1.0]);
        assert_eq!(tie.resolve(1.0, &[0.25, 0.0]), vec![0.25, 1.0]);
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip_controls(&[0.5, -0.3], 1.0), vec![0.5, -0.3]);
        assert_eq!(clip_controls(&[2.4, -7.0], 1.0), vec![1.0, -1.0]);
        let u = [3.0, -0.2, -9.0, 0.0];
        assert_eq!(clip_controls(&clip_controls(&u, 1.5), 1.5), clip_controls(&u, 1.5));
    }

    #[test]
    fn relaxation_examples() {
        let full = relaxation_update(&[0.3, -0.2], &[0.9, 0.4], 1.0, 1.0);
        assert!((full[0] - 0.9).abs() < 1e-15 && (full[1] - 0.4).abs() < 1e-15);
        assert!((relaxation_update(&[0.0], &[1.0], 0.1, 1.0)[0] - 0.1).abs() < 1e-16);
        assert_eq!(relaxation_update(&[0.4, -0.6], &[0.4, -0.6], 0.1, 1.0), vec![0.4, -0.6]);
    }

    #[test]
    fn stopping_examples() {
        let eps = 1e-3;
        let a = ControlSchedule::new(1.0, vec![vec![0.1, 0.2, 0.3], vec![0.0; 3]]).unwrap();
        assert!(stopping_test(&a, &a, eps).unwrap());
        let mut v = a.values().to_vec();
        v[1][2] += 2.0 * eps;
        let b = ControlSchedule::new(1.0, v).unwrap();
        assert!(!stopping_test(&b, &a, eps).unwrap());
        let c = ControlSchedule::new(1.0, vec![vec![0.0], vec![0.0]]).unwrap();
        let d = ControlSchedule::new(1.0, vec![vec![0.0], vec![0.25]]).unwrap();
        assert!(!stopping_test(&c, &d, 0.25).unwrap());
        assert!(stopping_test(&a, &c, eps).is_err());
    }

    #[test]
    fn cost_examples() {
        let sys = paper_system();
        let sched = ControlSchedule::zeros(2, 10, 1.0).unwrap();
        let traj = evolve_density(&down(), &sys, &sched).unwrap();
        assert!((cost_functional(&traj, &sched, &down(), 0.01).unwrap() + 1.0).abs() < 1e-12);
        let traj = evolve_density(&up(), &sys, &sched).unwrap();
        assert_eq!(cost_functional(&traj, &sched, &down(), 0.01).unwrap(), 0.0);

        let mut rng = seeded(7);
        let sched = ControlSchedule::new(2.0, vec![(0..8).map(|_| rng.gen_range(-1.0..1.0)).collect(); 2]).unwrap();
        let traj = evolve_density(&random_density(&mut rng, 2), &sys, &sched).unwrap();
        let f = uhlmann_fidelity(traj.final_state(), &down()).unwrap().value;
        assert_eq!(cost_functional(&traj, &sched, &down(), 0.0).unwrap(), -f);
        let energy: f64 = sched.values().iter().flatten().map(|v| 0.25 * v * v).sum();
        assert!((cost_functional(&traj, &sched, &down(), 0.5).unwrap() - (-f + 0.5 * energy)).abs() < 1e-14);
    }

    #[test]
    fn config_validation() {
        let ok = OptimizerConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            OptimizerConfig {
                eta: -1.0,
                ..ok.clone()
            },
            OptimizerConfig {
                delta: 0.0,
                ..ok.clone()
            },
            OptimizerConfig {
                delta: 1.5,
                ..ok.clone()
            },
            OptimizerConfig {
                epsilon: 0.0,
                ..ok.clone()
            },
            OptimizerConfig {
                slices: 0,
                ..ok.clone()
            },
            OptimizerConfig {
                u_max: 0.0,
                ..ok.clone()
            },
            OptimizerConfig {
                max_iterations: 0,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        let out_of_box = OptimizerConfig {
            init_controls: Some(vec![vec![2.0; 20], vec![0.0; 20]]),
            ..ok.clone()
        };
        assert!(out_of_box.initial_schedule(2).is_err());
        let wrong_shape = OptimizerConfig {
            init_controls: Some(vec![vec![0.0; 19], vec![0.0; 20]]),
            ..ok
        };
        assert!(wrong_shape.initial_schedule(2).is_err());
    }

    #[test]
    fn starting_at_the_target_stays_put() {
        let sol = solve(&down(), &down(), &paper_system(), &OptimizerConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.iterations_used <= 5, "{}", sol.iterations_used);
        assert!(sol.controls.values().iter().flatten().all(|v| v.abs() < 1e-3));
        assert!((sol.final_fidelity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pure_orthogonal_start_is_stationary() {
        // ρ₀ = |0⟩⟨0| under a z-drift with zero controls never leaves the
        // z-axis, and ∇𝓕 is diagonal there, so every switching coefficient
        // vanishes and the iteration stops at once.
        let sol = solve(&up(), &down(), &paper_system(), &OptimizerConfig::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations_used, 2);
        assert!(sol.final_fidelity < 1e-6);
    }

    #[test]
    fn one_unit_horizon_cannot_flip_the_spin() {
        // With |u_x|, |u_y| ≤ 1 the Bloch vector turns at rate ≤ |(u_x, u_y, u_z)|,
        // so after T = 1 its polar angle is at most √(2 + u_z²) and
        // 𝓕(ρ(T), |1⟩⟨1|) ≤ sin²(√(2 + u_z²)/2).
        let bound = ((2.0f64 + 1e-6).sqrt() / 2.0).sin().powi(2);
        let cfg = OptimizerConfig {
            init_controls: Some(vec![vec![0.1; 20]; 2]),
            ..Default::default()
        };
        let sol = solve(&up(), &down(), &paper_system(), &cfg).unwrap();
        assert!(sol.final_fidelity <= bound + 1e-12, "{} > {bound}", sol.final_fidelity);
        assert!(sol.final_fidelity > 0.99 * bound);
        let saturated = ControlSchedule::constant(1.0, 20, &[1.0, 1.0]).unwrap();
        let traj = evolve_density(&up(), &paper_system(), &saturated).unwrap();
        assert!(uhlmann_fidelity(traj.final_state(), &down()).unwrap().value <= bound + 1e-12);
    }

    #[test]
    fn solution_respects_box_and_logs_every_iteration() {
        let cfg = OptimizerConfig {
            horizon: 2.5,
            max_iterations: 60,
            init_controls: Some(vec![vec![0.1; 20]; 2]),
            ..Default::default()
        };
        let sol = solve(&up(), &down(), &paper_system(), &cfg).unwrap();
        assert!(sol.controls.values().iter().flatten().all(|v| v.abs() <= cfg.u_max));
        assert_eq!(sol.log.len(), sol.iterations_used);
        let best = sol.log.fidelities().into_iter().fold(0.0, f64::max);
        assert!(best > 0.99, "best fidelity {best}");
        for r in sol.log.records() {
            assert_eq!(r.pontryagin_values.len(), 20);
            assert_eq!(r.residuals.len(), 2);
        }
    }

    #[test]
    fn full_step_maximizer_is_a_fixed_point() {
        // δ = 1 with no active clipping: re-maximizing at the new controls
        // with frozen (ρ, Λ) returns the same controls.
        let mut rng = seeded(8);
        let sys = paper_system();
        let eta = 5.0;
        for _ in 0..10 {
            let rho = random_density(&mut rng, 2);
            let lambda = random_hermitian(&mut rng, 2, 1.0);
            let prev = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
            let m = maximize_slice_controls(&rho, &lambda, &sys, eta).unwrap();
            let u = m.resolve(1.0, &prev);
            assert!(u.iter().all(|v| v.abs() < 1.0));
            let next = relaxation_update(&prev, &u, 1.0, 1.0);
            let again = maximize_slice_controls(&rho, &lambda, &sys, eta)
                .unwrap()
                .resolve(1.0, &next);
            for (a, b) in again.iter().zip(&next) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn closed_form_request_falls_back_after_validation() {
        let cfg = OptimizerConfig {
            gradient: GradientBackend::ClosedForm,
            max_iterations: 3,
            ..Default::default()
        };
        let rho0 = DensityMatrix::maximally_mixed(2);
        let sol = solve(&rho0, &down(), &paper_system(), &cfg).unwrap();
        let v = sol.closed_form_validation.expect("validation ran");
        assert!(!v.conforming);
        assert_eq!(sol.gradient_backend, GradientBackend::FiniteDifference);
    }

    #[test]
    fn parallel_and_sequential_solves_match() {
        let base = OptimizerConfig {
            horizon: 2.0,
            max_iterations: 15,
            init_controls: Some(vec![vec![0.2; 20]; 2]),
            ..Default::default()
        };
        let a = solve(
            &up(),
            &down(),
            &paper_system(),
            &OptimizerConfig {
                execution: Execution::Sequential,
                ..base.clone()
            },
        )
        .unwrap();
        let b = solve(
            &up(),
            &down(),
            &paper_system(),
            &OptimizerConfig {
                execution: Execution::Parallel,
                ..base
            },
        )
        .unwrap();
        assert_eq!(a.controls, b.controls);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn rejects_mismatched_states() {
        let cfg = OptimizerConfig::default();
        let three = DensityMatrix::maximally_mixed(3);
        assert!(solve(&three, &down(), &paper_system(), &cfg).is_err());
    }
}
