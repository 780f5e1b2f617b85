//! Real form of the complex Schrödinger flow.
//!
//! With `ψ = ψ_R + i ψ_I` and `-iH = R + iI` (`R` skew-symmetric, `I`
//! symmetric), `x = [ψ_R; ψ_I]` obeys `ẋ = H̃ x` with
//! `H̃ = [[R, -I], [I, R]]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::linalg::{check_square, CMatrix};

const SKEW_TOL: f64 = 1e-10;

/// Maps a skew-Hermitian `-iH` to its skew-symmetric real embedding.
pub fn real_embedding(h_eff: &CMatrix) -> Result<DMatrix<f64>> {
    let n = check_square(h_eff)?;
    let defect = (h_eff + h_eff.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > SKEW_TOL {
        return Err(invalid(format!("generator is not skew-Hermitian (defect {defect:e})")));
    }
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h_eff[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    Ok(out)
}

/// `[Re ψ; Im ψ]`.
pub fn embed_state(psi: &DVector<Complex64>) -> DVector<f64> {
    let n = psi.len();
    DVector::from_fn(2 * n, |i, _| if i < n { psi[i].re } else { psi[i - n].im })
}
