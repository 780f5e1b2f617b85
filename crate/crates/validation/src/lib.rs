//! Reference computations that share no code with the solver, used by the
//! acceptance suite in `tests/acceptance.rs`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qoc_core::sampling::{random_hermitian, SeededRng};
use qoc_core::{CMatrix, ControlSchedule, ControlSystem, Hermitian};
use rand::Rng;

pub fn random_system(rng: &mut SeededRng, n: usize, m: usize) -> ControlSystem {
    let drift = random_hermitian(rng, n, 0.5);
    let controls = (0..m).map(|_| random_hermitian(rng, n, 1.0)).collect();
    ControlSystem::new(drift, controls, (0..m).map(|c| format!("u{c}")).collect()).unwrap()
}

pub fn random_schedule(rng: &mut SeededRng, m: usize, slices: usize, horizon: f64, u_max: f64) -> ControlSchedule {
    let values = (0..m)
        .map(|_| (0..slices).map(|_| rng.gen_range(-u_max..u_max)).collect())
        .collect();
    ControlSchedule::new(horizon, values).unwrap()
}

/// Scaling-and-squaring Taylor exponential of a real matrix.
pub fn real_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm: f64 = a.iter().map(|x| x.abs()).sum();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);
    let n = a.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Explicit Euler for `dΛ/dt = -i[H, Λ]`, stepping from `T` back to 0 with
/// `steps` total steps (a multiple of the slice count).
pub fn euler_costate(sys: &ControlSystem, sched: &ControlSchedule, lambda_t: &Hermitian, steps: usize) -> CMatrix {
    let per_slice = steps / sched.slices();
    let h = sched.slice_duration() / per_slice as f64;
    let mut lambda = lambda_t.as_matrix().clone();
    for k in (0..sched.slices()).rev() {
        let ham = sys.total_hamiltonian(&sched.control_at(k)).unwrap().into_inner();
        for _ in 0..per_slice {
            let rate = (&ham * &lambda - &lambda * &ham) * Complex64::new(0.0, -1.0);
            lambda -= rate * Complex64::new(h, 0.0);
        }
    }
    lambda
}
