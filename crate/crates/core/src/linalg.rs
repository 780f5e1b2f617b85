//! Dense complex matrix kernel.
//!
//! Matrices here are tiny (dimension rarely above 8), so everything goes
//! through a Hermitian eigendecomposition: exponentials of `-i s H` and
//! principal square roots are both spectral functions of a Hermitian matrix.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, QocError, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest Hermiticity defect accepted (and then symmetrized away) by
/// [`Hermitian::new`].
pub const HERMITIAN_DEFECT_TOL: f64 = 1e-9;
/// `‖U†U - I‖_F` bound accepted by [`Unitary::new`].
pub const UNITARY_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_CLAMP_TOL` are clamped to zero before rooting.
pub const PSD_CLAMP_TOL: f64 = 1e-10;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;
const PHASE_THRESHOLD: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(invalid(format!(
            "matrix must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() == 0 {
        return Err(invalid("matrix must have positive dimension"));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    Ok(a.nrows())
}

fn check_same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(QocError::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(())
}

/// Largest entrywise `|A_ij - conj(A_ji)|`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Frobenius norm.
pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    /// Accepts `a` if its Hermiticity defect is at most
    /// [`HERMITIAN_DEFECT_TOL`] and stores `(a + a†)/2`.
    pub fn new(a: CMatrix) -> Result<Self> {
        check_square(&a)?;
        let defect = hermiticity_defect(&a);
        if defect > HERMITIAN_DEFECT_TOL {
            return Err(invalid(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        Ok(Hermitian(symmetrize(&a)))
    }

    /// Symmetrizes without checking. Used after operations that are
    /// Hermitian-preserving in exact arithmetic.
    pub(crate) fn symmetrized(a: &CMatrix) -> Self {
        Hermitian(symmetrize(a))
    }

    pub fn zeros(n: usize) -> Self {
        Hermitian(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Hermitian(CMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Hermitian(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(diag[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Hermitian(self.0.map(|z| z * s))
    }

    /// Real trace.
    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &Hermitian) -> Result<Self> {
        check_same_dim(&self.0, &other.0)?;
        Ok(Hermitian(&self.0 + other.0.map(|z| z * s)))
    }
}

/// A unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary(CMatrix);

impl Unitary {
    pub fn new(u: CMatrix) -> Result<Self> {
        let n = check_square(&u)?;
        let defect = frobenius(&(u.adjoint() * &u - CMatrix::identity(n, n)));
        if defect > UNITARY_TOL {
            return Err(invalid(format!("matrix is not unitary (defect {defect:e})")));
        }
        Ok(Unitary(u))
    }

    pub fn identity(n: usize) -> Self {
        Unitary(CMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary(self.0.adjoint())
    }

    /// `self · other`.
    pub fn then_after(&self, other: &Unitary) -> Unitary {
        Unitary(&self.0 * &other.0)
    }

    /// `U A U†`.
    pub fn conjugate(&self, a: &CMatrix) -> CMatrix {
        &self.0 * a * self.0.adjoint()
    }

    /// `U A U†` for Hermitian `A`, re-Hermitized.
    pub fn conjugate_hermitian(&self, a: &Hermitian) -> Hermitian {
        Hermitian::symmetrized(&self.conjugate(a.as_matrix()))
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        frobenius(&(self.0.adjoint() * &self.0 - CMatrix::identity(n, n)))
    }
}

/// `AB - BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_square(a)?;
    check_same_dim(a, b)?;
    Ok(a * b - b * a)
}

/// Hilbert-Schmidt inner product `tr(A†B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<Complex64> {
    check_same_dim(a, b)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Eigendecomposition `A = V diag(λ) V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: DVector<f64>,
    /// Columns are eigenvectors; each has its first non-negligible
    /// component real and positive.
    pub vectors: Unitary,
}

impl HermitianEigen {
    /// `V f(Λ) V†` for a complex-valued spectral function.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let v = self.vectors.as_matrix();
        let mut scaled = v.clone();
        for (j, lambda) in self.values.iter().enumerate() {
            let fj = f(*lambda);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= fj);
        }
        scaled * v.adjoint()
    }
}

fn fix_phase(v: &mut DVector<Complex64>) {
    if let Some(first) = v.iter().copied().find(|z| z.norm() > PHASE_THRESHOLD) {
        let phase = first.conj() / first.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
    let norm = v.norm();
    if norm > 0.0 {
        v.iter_mut().for_each(|z| *z /= norm);
    }
}

fn lexicographic(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = x.re.total_cmp(&y.re).then_with(|| x.im.total_cmp(&y.im));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Eigenvalues ascending, eigenvector phases fixed, and degenerate
/// eigenvalues ordered by the lexicographic order of their eigenvectors.
pub fn eig_hermitian(a: &Hermitian) -> Result<HermitianEigen> {
    let n = a.dim();
    let eig = a
        .as_matrix()
        .clone()
        .try_symmetric_eigen(EIG_EPS, EIG_MAX_ITER)
        .ok_or(QocError::EigenSolver)?;

    let mut pairs: Vec<(f64, DVector<Complex64>)> = (0..n)
        .map(|j| {
            let mut v: DVector<Complex64> = eig.eigenvectors.column(j).into_owned();
            fix_phase(&mut v);
            (eig.eigenvalues[j], v)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));

    let scale = pairs.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    let tie = 1e-12 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end].0 - pairs[end - 1].0 <= tie {
            end += 1;
        }
        pairs[start..end].sort_by(|x, y| lexicographic(&x.1, &y.1));
        start = end;
    }

    let values = DVector::from_iterator(n, pairs.iter().map(|p| p.0));
    let vectors = CMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok(HermitianEigen {
        values,
        vectors: Unitary(vectors),
    })
}

/// `exp(-i s H)` via the eigendecomposition of `H`.
pub fn expm_skew_generator(h: &Hermitian, s: f64) -> Result<Unitary> {
    if !s.is_finite() {
        return Err(invalid("time step must be finite"));
    }
    let eig = eig_hermitian(h)?;
    Ok(Unitary(eig.apply(|lambda| Complex64::from_polar(1.0, -s * lambda))))
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in `[-1e-10, 0)` are treated as roundoff and clamped to zero.
pub fn sqrtm_psd(a: &Hermitian) -> Result<Hermitian> {
    let eig = eig_hermitian(a)?;
    let min = eig.values[0];
    if min < -PSD_CLAMP_TOL {
        return Err(QocError::NotPsd { min_eigenvalue: min });
    }
    Ok(Hermitian::symmetrized(
        &eig.apply(|lambda| c(lambda.max(0.0).sqrt(), 0.0)),
    ))
}
