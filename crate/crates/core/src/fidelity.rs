//! Uhlmann-Jozsa fidelity and its gradient at the final time.
//!
//! `𝓕(ρ, σ) = (tr √(√ρ σ √ρ))²`. The terminal costate is `Λ(T) = ∇_ρ 𝓕`,
//! the Hermitian matrix `G` with `𝓕(ρ + Δ) - 𝓕(ρ) ≈ Re tr(G†Δ)` for
//! Hermitian `Δ`.
//!
//! Two backends produce it: central finite differences over the Hermitian
//! coordinates of `ρ` (the default), and a closed form for `n = 2` built on
//! the Cayley-Hamilton expansion of the matrix square root. The closed form
//! is only trusted after [`validate_closed_form`] has compared it with the
//! finite-difference oracle.

use num_complex::Complex64;

use crate::error::{invalid, QocError, Result};
use crate::linalg::{c, eig_hermitian, frobenius, sqrtm_psd, CMatrix, Hermitian};
use crate::model::DensityMatrix;
use crate::par::{map_range, try_map_range, Execution};
use crate::sampling::{random_full_rank_density, seeded};

pub const DEFAULT_FD_STEP: f64 = 1e-6;
pub const MIN_FD_STEP: f64 = 1e-8;
pub const MAX_FD_STEP: f64 = 1e-4;
/// Relative Frobenius agreement the closed form must reach against the
/// finite-difference oracle.
pub const CLOSED_FORM_TOL: f64 = 1e-6;
/// Regularized states have every eigenvalue at least this many steps.
const REGULARIZED_FLOOR_STEPS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityResult {
    pub value: f64,
    /// `tr √(√ρ σ √ρ)` before squaring.
    pub sqrt_trace: f64,
}

pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<FidelityResult> {
    if rho.dim() != sigma.dim() {
        return Err(QocError::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let sqrt_rho = sqrtm_psd(rho.as_hermitian())?;
    sandwich_fidelity(&sqrt_rho, sigma.as_hermitian())
}

/// `(tr √(A X A))²` with `A` Hermitian, typically a square root.
fn sandwich_fidelity(root: &Hermitian, x: &Hermitian) -> Result<FidelityResult> {
    let m = root.as_matrix() * x.as_matrix() * root.as_matrix();
    let inner = sqrtm_psd(&Hermitian::symmetrized(&m))?;
    let sqrt_trace = inner.trace();
    Ok(FidelityResult {
        value: sqrt_trace * sqrt_trace,
        sqrt_trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientBackend {
    ClosedForm,
    #[default]
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalCostate {
    pub matrix: Hermitian,
    pub backend: GradientBackend,
}

/// Hermitian coordinate directions: `E_aa`, `E_ab + E_ba`, `i(E_ab - E_ba)`.
#[derive(Debug, Clone, Copy)]
enum Direction {
    Diagonal(usize),
    Real(usize, usize),
    Imag(usize, usize),
}

impl Direction {
    fn all(n: usize) -> Vec<Direction> {
        let mut dirs = Vec::with_capacity(n * n);
        for a in 0..n {
            dirs.push(Direction::Diagonal(a));
            for b in a + 1..n {
                dirs.push(Direction::Real(a, b));
                dirs.push(Direction::Imag(a, b));
            }
        }
        dirs
    }

    fn matrix(self, n: usize, scale: f64) -> CMatrix {
        let mut d = CMatrix::zeros(n, n);
        match self {
            Direction::Diagonal(a) => d[(a, a)] = c(scale, 0.0),
            Direction::Real(a, b) => {
                d[(a, b)] = c(scale, 0.0);
                d[(b, a)] = c(scale, 0.0);
            }
            Direction::Imag(a, b) => {
                d[(a, b)] = c(0.0, scale);
                d[(b, a)] = c(0.0, -scale);
            }
        }
        d
    }
}

/// Finite-difference terminal costate with the default execution policy.
pub fn terminal_costate_numeric(rho_t: &DensityMatrix, sigma: &DensityMatrix, h: f64) -> Result<TerminalCostate> {
    terminal_costate_numeric_with(rho_t, sigma, h, Execution::default())
}

/// Central differences of `𝓕` over the `n²` real Hermitian coordinates of
/// `ρ_T`. Requires `h ∈ [1e-8, 1e-4]` and `λ_min(ρ_T) > 10 h`.
pub fn terminal_costate_numeric_with(
    rho_t: &DensityMatrix,
    sigma: &DensityMatrix,
    h: f64,
    exec: Execution,
) -> Result<TerminalCostate> {
    if !(MIN_FD_STEP..=MAX_FD_STEP).contains(&h) {
        return Err(invalid(format!(
            "finite-difference step {h:e} outside [{MIN_FD_STEP:e}, {MAX_FD_STEP:e}]"
        )));
    }
    let n = rho_t.dim();
    if sigma.dim() != n {
        return Err(QocError::DimensionMismatch {
            expected: n,
            found: sigma.dim(),
        });
    }
    let min_eig = rho_t.eigenvalues()?[0];
    if min_eig <= 10.0 * h {
        return Err(QocError::IllConditionedGradient {
            min_eigenvalue: min_eig,
            step: h,
        });
    }

    // 𝓕 is symmetric in its arguments; rooting the fixed σ once leaves a
    // single square root per evaluation.
    let sqrt_sigma = sqrtm_psd(sigma.as_hermitian())?;
    let base = rho_t.as_matrix();
    let eval = |shift: CMatrix| -> Result<f64> {
        let x = Hermitian::symmetrized(&(base + shift));
        Ok(sandwich_fidelity(&sqrt_sigma, &x)?.value)
    };

    let dirs = Direction::all(n);
    let slopes = try_map_range(exec, dirs.len(), |i| -> Result<f64> {
        let d = dirs[i];
        let plus = eval(d.matrix(n, h))?;
        let minus = eval(d.matrix(n, -h))?;
        Ok((plus - minus) / (2.0 * h))
    })?;

    let mut g = CMatrix::zeros(n, n);
    for (d, slope) in dirs.iter().zip(slopes) {
        match *d {
            Direction::Diagonal(a) => g[(a, a)] = c(slope, 0.0),
            // Re tr(G† (E_ab + E_ba)) = 2 Re G_ab
            Direction::Real(a, b) => {
                g[(a, b)].re = slope / 2.0;
                g[(b, a)].re = slope / 2.0;
            }
            // Re tr(G† i(E_ab - E_ba)) = 2 Im G_ab
            Direction::Imag(a, b) => {
                g[(a, b)].im = slope / 2.0;
                g[(b, a)].im = -slope / 2.0;
            }
        }
    }
    Ok(TerminalCostate {
        matrix: Hermitian::symmetrized(&g),
        backend: GradientBackend::FiniteDifference,
    })
}

/// Blends `ρ` toward `I/n` just enough that the finite-difference stencil
/// with step `h` stays inside the positive cone. States already well inside
/// are returned unchanged.
pub fn regularize_for_gradient(rho: &DensityMatrix, h: f64) -> Result<DensityMatrix> {
    let n = rho.dim();
    let floor = REGULARIZED_FLOOR_STEPS * h;
    let min_eig = rho.eigenvalues()?[0];
    if min_eig >= floor {
        return Ok(rho.clone());
    }
    let zeta = (floor * n as f64).min(1.0);
    let blended = rho
        .as_hermitian()
        .scale(1.0 - zeta)
        .add_scaled(zeta / n as f64, &Hermitian::identity(n))?;
    DensityMatrix::from_hermitian(blended)
}

/// Coefficients `α_k` with `√ρ = Σ_{k<n} α_k (ρ - I)^k`, from the 2×2
/// Cayley-Hamilton identity `√ρ = (ρ + √det ρ · I) / √(tr ρ + 2√det ρ)`.
pub fn sqrt_expansion_coefficients(rho: &DensityMatrix) -> Result<[f64; 2]> {
    if rho.dim() != 2 {
        return Err(QocError::UnsupportedDimension(rho.dim()));
    }
    let m = rho.as_matrix();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re.max(0.0);
    let root_det = det.sqrt();
    let s = (rho.trace() + 2.0 * root_det).sqrt();
    Ok([(1.0 + root_det) / s, 1.0 / s])
}

/// `tr √(ρσ)` for 2×2 operands from the eigenvalues of `ρσ`.
fn trace_sqrt_product_2x2(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let p = rho * sigma;
    let tr = p.trace().re;
    let det = (p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)]).re;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let hi = ((tr + disc) / 2.0).max(0.0);
    let lo = ((tr - disc) / 2.0).max(0.0);
    hi.sqrt() + lo.sqrt()
}

/// `Λ†(T) = 2 tr√(ρσ) Σ_k α_k Σ_{i<k} ρ̄^i √σ ρ̄^{k-i-1}` with `ρ̄ = ρ - I`,
/// for `n = 2`.
pub fn terminal_costate_closed_form(rho_t: &DensityMatrix, sigma: &DensityMatrix) -> Result<TerminalCostate> {
    let n = rho_t.dim();
    if n != 2 {
        return Err(QocError::UnsupportedDimension(n));
    }
    if sigma.dim() != n {
        return Err(QocError::DimensionMismatch {
            expected: n,
            found: sigma.dim(),
        });
    }
    let alpha = sqrt_expansion_coefficients(rho_t)?;
    let sqrt_sigma = sqrtm_psd(sigma.as_hermitian())?;
    let shifted = rho_t.as_matrix() - CMatrix::identity(n, n);
    let powers: Vec<CMatrix> = std::iter::successors(Some(CMatrix::identity(n, n)), |p| Some(p * &shifted))
        .take(n)
        .collect();

    let mut sum = CMatrix::zeros(n, n);
    for (k, a) in alpha.iter().enumerate() {
        for i in 0..k {
            sum += (&powers[i] * sqrt_sigma.as_matrix() * &powers[k - i - 1]) * c(*a, 0.0);
        }
    }
    let factor = 2.0 * trace_sqrt_product_2x2(rho_t.as_matrix(), sigma.as_matrix());
    let dagger = sum * Complex64::new(factor, 0.0);
    Ok(TerminalCostate {
        matrix: Hermitian::symmetrized(&dagger.adjoint()),
        backend: GradientBackend::ClosedForm,
    })
}

/// Outcome of comparing the closed-form costate with the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormValidation {
    pub samples: usize,
    pub max_relative_error: f64,
    pub tolerance: f64,
    pub conforming: bool,
}

/// Compares the closed form with central differences on `samples` random
/// full-rank 2×2 pairs. The closed form is conforming only if every pair
/// agrees within [`CLOSED_FORM_TOL`] relative Frobenius error.
pub fn validate_closed_form(samples: usize, seed: u64) -> Result<ClosedFormValidation> {
    let mut rng = seeded(seed);
    let pairs: Vec<_> = (0..samples)
        .map(|_| {
            (
                random_full_rank_density(&mut rng, 2, 0.05),
                random_full_rank_density(&mut rng, 2, 0.05),
            )
        })
        .collect();
    let errors = map_range(Execution::default(), pairs.len(), |i| -> Result<f64> {
        let (rho, sigma) = &pairs[i];
        let oracle = terminal_costate_numeric_with(rho, sigma, DEFAULT_FD_STEP, Execution::Sequential)?;
        let closed = terminal_costate_closed_form(rho, sigma)?;
        Ok(frobenius(&(closed.matrix.as_matrix() - oracle.matrix.as_matrix())) / frobenius(oracle.matrix.as_matrix()))
    });
    let max_relative_error = errors
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(ClosedFormValidation {
        samples,
        max_relative_error,
        tolerance: CLOSED_FORM_TOL,
        conforming: max_relative_error <= CLOSED_FORM_TOL,
    })
}

/// Smallest eigenvalue; handy for deciding whether to regularize.
pub fn min_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    Ok(eig_hermitian(rho.as_hermitian())?.values[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hs_inner, Unitary};
    use crate::sampling::{random_density, random_hermitian, random_unitary};
    use rand::Rng;

    fn diag(a: f64) -> DensityMatrix {
        DensityMatrix::new(Hermitian::from_real_diagonal(&[a, 1.0 - a]).into_inner()).unwrap()
    }

    fn traceless_direction<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
        let d = random_hermitian(rng, n, 1.0);
        let shift = d.trace() / n as f64;
        let d = d.into_inner() - CMatrix::identity(n, n) * c(shift, 0.0);
        let norm = frobenius(&d);
        d / c(norm, 0.0)
    }

    fn fidelity_of(rho: &CMatrix, sigma: &DensityMatrix) -> f64 {
        let sqrt_rho = sqrtm_psd(&Hermitian::symmetrized(rho)).unwrap();
        sandwich_fidelity(&sqrt_rho, sigma.as_hermitian()).unwrap().value
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = seeded(1);
        let rho = random_density(&mut rng, 3);
        let f = uhlmann_fidelity(&rho, &rho).unwrap();
        assert!((f.value - 1.0).abs() < 1e-12);
        assert!((f.value - f.sqrt_trace * f.sqrt_trace).abs() < 1e-15);

        let up = DensityMatrix::basis_state(2, 0).unwrap();
        let down = DensityMatrix::basis_state(2, 1).unwrap();
        assert_eq!(uhlmann_fidelity(&up, &down).unwrap().value, 0.0);

        // √(σ/2) for σ = diag(1,0) has trace 1/√2.
        let f = uhlmann_fidelity(&DensityMatrix::maximally_mixed(2), &up).unwrap();
        assert!((f.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn printed_final_state_is_high_fidelity() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0005, 0.0), c(0.0157, 0.0145), c(0.0157, -0.0145), c(0.9995, 0.0)],
        );
        // The printed entries are rounded; the matrix is PSD only up to that
        // rounding, so evaluate 𝓕 through the pure-target identity 𝓕 = ⟨1|ρ|1⟩
        // as well as through the general route on its PSD projection.
        let down = DensityMatrix::basis_state(2, 1).unwrap();
        assert!(m[(1, 1)].re > 0.999);
        let h = Hermitian::new(m).unwrap();
        let e = eig_hermitian(&h).unwrap();
        let projected = e.apply(|l| c(l.max(0.0), 0.0));
        let tr = projected.trace().re;
        let rho = DensityMatrix::new(projected / c(tr, 0.0)).unwrap();
        assert!(uhlmann_fidelity(&rho, &down).unwrap().value > 0.999);
    }

    #[test]
    fn symmetric_and_unitarily_invariant() {
        let mut rng = seeded(2);
        for _ in 0..30 {
            let n = rng.gen_range(2..5);
            let rho = random_density(&mut rng, n);
            let sigma = random_density(&mut rng, n);
            let f = uhlmann_fidelity(&rho, &sigma).unwrap().value;
            let g = uhlmann_fidelity(&sigma, &rho).unwrap().value;
            assert!((f - g).abs() < 1e-10);
            assert!((0.0..=1.0 + 1e-10).contains(&f));
            let u: Unitary = random_unitary(&mut rng, n);
            let rr = DensityMatrix::from_hermitian(u.conjugate_hermitian(rho.as_hermitian())).unwrap();
            let ss = DensityMatrix::from_hermitian(u.conjugate_hermitian(sigma.as_hermitian())).unwrap();
            assert!((uhlmann_fidelity(&rr, &ss).unwrap().value - f).abs() < 1e-10);
        }
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(2);
        let b = DensityMatrix::maximally_mixed(3);
        assert!(uhlmann_fidelity(&a, &b).is_err());
    }

    #[test]
    fn numeric_gradient_matches_secant_oracle() {
        let mut rng = seeded(3);
        for _ in 0..20 {
            let n = rng.gen_range(2..4);
            let rho = random_full_rank_density(&mut rng, n, 0.05);
            let sigma = random_full_rank_density(&mut rng, n, 0.02);
            let g = terminal_costate_numeric(&rho, &sigma, DEFAULT_FD_STEP).unwrap();
            let d = traceless_direction(&mut rng, n);
            let t = 1e-5;
            let secant = (fidelity_of(&(rho.as_matrix() + &d * c(t, 0.0)), &sigma)
                - fidelity_of(&(rho.as_matrix() - &d * c(t, 0.0)), &sigma))
                / (2.0 * t);
            let predicted = hs_inner(g.matrix.as_matrix(), &d).unwrap().re;
            assert!(
                (secant - predicted).abs() <= 1e-6 * secant.abs().max(1e-3),
                "{secant} vs {predicted}"
            );
        }
    }

    #[test]
    fn numeric_gradient_commuting_diagonal() {
        // 𝓕 = (√(as) + √((1-a)(1-s)))², so along diag(1,-1):
        // d𝓕/da = √𝓕 (√(s/a) - √((1-s)/(1-a))).
        for &(a, s) in &[(0.3, 0.6), (0.8, 0.1), (0.5, 0.5), (0.15, 0.9)] {
            let rho = diag(a);
            let sigma = diag(s);
            let g = terminal_costate_numeric(&rho, &sigma, DEFAULT_FD_STEP).unwrap();
            let root_f = (a * s).sqrt() + ((1.0 - a) * (1.0 - s)).sqrt();
            let expected = root_f * ((s / a).sqrt() - ((1.0 - s) / (1.0 - a)).sqrt());
            let got = g.matrix.as_matrix()[(0, 0)].re - g.matrix.as_matrix()[(1, 1)].re;
            assert!((got - expected).abs() < 1e-7, "{got} vs {expected}");
            assert!(g.matrix.as_matrix()[(0, 1)].norm() < 1e-8);
        }
    }

    #[test]
    fn gradient_vanishes_along_traceless_directions_at_maximum() {
        let mut rng = seeded(4);
        for n in 2..5 {
            let rho = random_full_rank_density(&mut rng, n, 0.05);
            let g = terminal_costate_numeric(&rho, &rho, DEFAULT_FD_STEP).unwrap();
            for _ in 0..5 {
                let d = traceless_direction(&mut rng, n);
                assert!(hs_inner(g.matrix.as_matrix(), &d).unwrap().re.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn numeric_gradient_preconditions() {
        let up = DensityMatrix::basis_state(2, 0).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            terminal_costate_numeric(&up, &mixed, DEFAULT_FD_STEP),
            Err(QocError::IllConditionedGradient { .. })
        ));
        assert!(terminal_costate_numeric(&mixed, &mixed, 1e-3).is_err());
        assert!(terminal_costate_numeric(&mixed, &mixed, 1e-9).is_err());
    }

    #[test]
    fn regularization_makes_pure_states_differentiable() {
        let up = DensityMatrix::basis_state(2, 0).unwrap();
        let reg = regularize_for_gradient(&up, DEFAULT_FD_STEP).unwrap();
        assert!(min_eigenvalue(&reg).unwrap() >= 20.0 * DEFAULT_FD_STEP * (1.0 - 1e-9));
        assert!((reg.trace() - 1.0).abs() < 1e-15);
        assert!(terminal_costate_numeric(&reg, &DensityMatrix::basis_state(2, 1).unwrap(), DEFAULT_FD_STEP).is_ok());
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_eq!(regularize_for_gradient(&mixed, DEFAULT_FD_STEP).unwrap(), mixed);
    }

    #[test]
    fn expansion_coefficients_rebuild_square_root() {
        let mut rng = seeded(5);
        for _ in 0..10 {
            let rho = random_full_rank_density(&mut rng, 2, 0.01);
            let [a0, a1] = sqrt_expansion_coefficients(&rho).unwrap();
            let shifted = rho.as_matrix() - CMatrix::identity(2, 2);
            let rebuilt = CMatrix::identity(2, 2) * c(a0, 0.0) + shifted * c(a1, 0.0);
            let root = sqrtm_psd(rho.as_hermitian()).unwrap();
            assert!(frobenius(&(rebuilt - root.as_matrix())) < 1e-12);
        }
    }

    #[test]
    fn closed_form_prefactor_equals_uhlmann_trace() {
        // For invertible ρ, ρσ is similar to √ρ σ √ρ, so tr√(ρσ) equals the
        // Uhlmann inner trace even when ρ and σ do not commute.
        let mut rng = seeded(6);
        for _ in 0..10 {
            let rho = random_full_rank_density(&mut rng, 2, 0.01);
            let sigma = random_density(&mut rng, 2);
            let t = trace_sqrt_product_2x2(rho.as_matrix(), sigma.as_matrix());
            let f = uhlmann_fidelity(&rho, &sigma).unwrap();
            assert!((t - f.sqrt_trace).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_is_finite_and_dimension_gated() {
        let mut rng = seeded(7);
        let rho = random_full_rank_density(&mut rng, 2, 0.01);
        let sigma = random_density(&mut rng, 2);
        let g = terminal_costate_closed_form(&rho, &sigma).unwrap();
        assert!(g
            .matrix
            .as_matrix()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite()));
        assert_eq!(g.backend, GradientBackend::ClosedForm);
        let three = DensityMatrix::maximally_mixed(3);
        assert_eq!(
            terminal_costate_closed_form(&three, &three),
            Err(QocError::UnsupportedDimension(3))
        );
    }

    #[test]
    fn validation_harness_reports_its_verdict() {
        let v = validate_closed_form(20, 2024).unwrap();
        assert_eq!(v.samples, 20);
        assert_eq!(v.conforming, v.max_relative_error <= CLOSED_FORM_TOL);
        // The expansion treats α_k as constants, which drops their own
        // dependence on ρ; the printed form is not the true gradient.
        assert!(!v.conforming, "{v:?}");
    }

    #[test]
    fn parallel_and_sequential_gradients_agree() {
        let mut rng = seeded(8);
        let rho = random_full_rank_density(&mut rng, 4, 0.05);
        let sigma = random_density(&mut rng, 4);
        let a = terminal_costate_numeric_with(&rho, &sigma, DEFAULT_FD_STEP, Execution::Sequential).unwrap();
        let b = terminal_costate_numeric_with(&rho, &sigma, DEFAULT_FD_STEP, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
