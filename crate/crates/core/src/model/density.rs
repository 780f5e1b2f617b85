use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::linalg::{c, check_square, eig_hermitian, hermiticity_defect, CMatrix, Hermitian};

/// Tolerance for the Hermiticity, unit-trace and positivity checks.
pub const DENSITY_TOL: f64 = 1e-10;
const STATE_NORM_TOL: f64 = 1e-9;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Hermitian);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        let defect = hermiticity_defect(&m);
        if defect > DENSITY_TOL {
            return Err(invalid(format!(
                "Hermiticity defect = {defect:e}, expected <= {DENSITY_TOL:e}"
            )));
        }
        Self::from_hermitian(Hermitian::symmetrized(&m))
    }

    pub fn from_hermitian(h: Hermitian) -> Result<Self> {
        let tr = h.trace();
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(invalid(format!("trace = {tr}, expected 1 ± {DENSITY_TOL:e}")));
        }
        let min = eig_hermitian(&h)?.values[0];
        if min < -DENSITY_TOL {
            return Err(invalid(format!(
                "minimum eigenvalue = {min:e}, expected >= -{DENSITY_TOL:e}"
            )));
        }
        Ok(DensityMatrix(h))
    }

    /// `|ψ⟩⟨ψ|`; `ψ` is renormalized if its norm is within 1e-9 of one.
    pub fn pure(psi: &DVector<Complex64>) -> Result<Self> {
        density_from_ensemble(&[1.0], std::slice::from_ref(psi))
    }

    /// `|k⟩⟨k|` in dimension `n`.
    pub fn basis_state(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(invalid(format!("basis index {k} out of range for dimension {n}")));
        }
        let mut diag = vec![0.0; n];
        diag[k] = 1.0;
        Ok(DensityMatrix(Hermitian::from_real_diagonal(&diag)))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix(Hermitian::identity(n).scale(1.0 / n as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_hermitian(&self) -> &Hermitian {
        &self.0
    }

    pub fn as_matrix(&self) -> &CMatrix {
        self.0.as_matrix()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        let m = self.as_matrix();
        (m * m).trace().re
    }

    /// Ascending spectrum.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eig_hermitian(&self.0)?.values.as_slice().to_vec())
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.as_matrix()[(i, j)]
    }
}

/// `Σⱼ pⱼ |ψⱼ⟩⟨ψⱼ|`.
pub fn density_from_ensemble(weights: &[f64], states: &[DVector<Complex64>]) -> Result<DensityMatrix> {
    if weights.is_empty() || weights.len() != states.len() {
        return Err(invalid(format!(
            "{} weights for {} states",
            weights.len(),
            states.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| **w < 0.0 || !w.is_finite()) {
        return Err(invalid(format!("weight {w} is negative or non-finite")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > DENSITY_TOL {
        return Err(invalid(format!("weights sum to {total}, expected 1")));
    }
    let n = states[0].len();
    if n == 0 {
        return Err(invalid("states must have positive dimension"));
    }
    let mut rho = CMatrix::zeros(n, n);
    for (p, psi) in weights.iter().zip(states) {
        if psi.len() != n {
            return Err(invalid("states have differing dimensions"));
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(invalid(format!("state has norm {norm}, expected 1")));
        }
        let unit = psi / c(norm, 0.0);
        rho += (&unit * unit.adjoint()) * c(*p, 0.0);
    }
    DensityMatrix::from_hermitian(Hermitian::symmetrized(&rho))
}
