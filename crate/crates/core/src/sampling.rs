//! Seeded random instances: Hermitian matrices, density matrices, unitaries.
//!
//! Used by the closed-form costate validation harness, the test suites and
//! the benches. Entries are uniform on `[-1, 1]` (real and imaginary part);
//! nothing here depends on a particular Haar measure.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, expm_skew_generator, CMatrix, Hermitian, Unitary};
use crate::model::DensityMatrix;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Hermitian matrix with entries scaled by `scale`.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Hermitian {
    let g = random_complex(rng, n);
    Hermitian::symmetrized(&g.map(|z| z * scale))
}

/// `G G†` for a random `G`; full rank with probability one.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize) -> Hermitian {
    let g = random_complex(rng, n);
    Hermitian::symmetrized(&(&g * g.adjoint()))
}

pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> Unitary {
    let h = random_hermitian(rng, n, 2.0);
    expm_skew_generator(&h, 1.0).expect("random Hermitian has a finite spectrum")
}

pub fn random_state_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<Complex64> {
    let v = DVector::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let norm = v.norm();
    v / c(norm, 0.0)
}

/// Random mixed state `G G† / tr(G G†)`.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> DensityMatrix {
    let p = random_psd(rng, n);
    let tr = p.trace();
    DensityMatrix::new(p.scale(1.0 / tr).into_inner()).expect("normalized PSD matrix is a density matrix")
}

/// Random state blended with the maximally mixed state so that every
/// eigenvalue is at least `floor`.
pub fn random_full_rank_density<R: Rng>(rng: &mut R, n: usize, floor: f64) -> DensityMatrix {
    assert!(floor * n as f64 <= 1.0, "eigenvalue floor too large for dimension");
    let zeta = floor * n as f64;
    let base = random_density(rng, n);
    let mixed = base
        .as_hermitian()
        .scale(1.0 - zeta)
        .add_scaled(zeta / n as f64, &Hermitian::identity(n))
        .expect("same dimension");
    DensityMatrix::new(mixed.into_inner()).expect("convex combination of states")
}
