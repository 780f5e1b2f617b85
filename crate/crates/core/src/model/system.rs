use crate::error::{invalid, QocError, Result};
use crate::linalg::{c, CMatrix, Hermitian};

/// `H(u) = H₀ + Σₖ uₖ Hₖ` with time-independent Hermitian terms.
///
/// Any constant, non-optimized control (such as a fixed longitudinal field)
/// belongs in the drift.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSystem {
    drift: Hermitian,
    controls: Vec<Hermitian>,
    channel_names: Vec<String>,
}

impl ControlSystem {
    pub fn new(drift: Hermitian, controls: Vec<Hermitian>, channel_names: Vec<String>) -> Result<Self> {
        if controls.is_empty() {
            return Err(invalid("a control system needs at least one control channel"));
        }
        if channel_names.len() != controls.len() {
            return Err(invalid(format!(
                "{} channel names for {} control Hamiltonians",
                channel_names.len(),
                controls.len()
            )));
        }
        let n = drift.dim();
        for h in &controls {
            if h.dim() != n {
                return Err(QocError::DimensionMismatch {
                    expected: n,
                    found: h.dim(),
                });
            }
        }
        Ok(ControlSystem {
            drift,
            controls,
            channel_names,
        })
    }

    /// Spin-1/2 in a magnetic field with the longitudinal component fixed
    /// at `u_z` (folded into the drift) and transverse `x`, `y` controls.
    pub fn spin_half(u_z: f64) -> Self {
        let [hx, hy, hz] = spin_half_hamiltonians();
        ControlSystem {
            drift: hz.scale(u_z),
            controls: vec![hx, hy],
            channel_names: vec!["x".into(), "y".into()],
        }
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn num_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn drift(&self) -> &Hermitian {
        &self.drift
    }

    pub fn controls(&self) -> &[Hermitian] {
        &self.controls
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn total_hamiltonian(&self, u: &[f64]) -> Result<Hermitian> {
        if u.len() != self.controls.len() {
            return Err(invalid(format!(
                "control vector has length {}, system has {} channels",
                u.len(),
                self.controls.len()
            )));
        }
        let mut h = self.drift.as_matrix().clone();
        for (uk, hk) in u.iter().zip(&self.controls) {
            h += hk.as_matrix().map(|z| z * *uk);
        }
        Ok(Hermitian::symmetrized(&h))
    }
}

/// The skew-Hermitian, traceless spin-1/2 generators
/// `σ̄ₓ = ½[[0,i],[i,0]]`, `σ̄ᵧ = ½[[0,-1],[1,0]]`, `σ̄_z = ½[[i,0],[0,-i]]`,
/// closing under `[σ̄ₓ,σ̄ᵧ] = σ̄_z` and cyclic permutations.
pub fn spin_half_generators() -> [CMatrix; 3] {
    let z = c(0.0, 0.0);
    let x = CMatrix::from_row_slice(2, 2, &[z, c(0.0, 0.5), c(0.0, 0.5), z]);
    let y = CMatrix::from_row_slice(2, 2, &[z, c(-0.5, 0.0), c(0.5, 0.0), z]);
    let zz = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.5), z, z, c(0.0, -0.5)]);
    [x, y, zz]
}

/// Hermitian forms `H̄ = i σ̄` of [`spin_half_generators`], so that
/// `-i H̄ = σ̄`. Numerically `H̄ₓ = -σₓ/2`, `H̄ᵧ = σᵧ/2`, `H̄_z = -σ_z/2`.
pub fn spin_half_hamiltonians() -> [Hermitian; 3] {
    spin_half_generators().map(|g| Hermitian::new(g.map(|z| z * c(0.0, 1.0))).expect("i times skew-Hermitian"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, hs_inner};
    use crate::sampling::{random_hermitian, seeded};
    use rand::Rng;

    #[test]
    fn generators_are_traceless_skew_hermitian() {
        for g in spin_half_generators() {
            assert_eq!(g.trace(), c(0.0, 0.0));
            assert_eq!(g.adjoint(), -g.clone());
        }
    }

    #[test]
    fn generator_table_is_exact() {
        let [x, y, z] = spin_half_generators();
        assert_eq!(&x * &y - &y * &x, z);
        assert_eq!(&y * &z - &z * &y, x);
        assert_eq!(&z * &x - &x * &z, y);
    }

    #[test]
    fn zero_control_gives_drift() {
        let sys = ControlSystem::spin_half(0.001);
        assert_eq!(sys.total_hamiltonian(&[0.0, 0.0]).unwrap(), *sys.drift());
    }

    #[test]
    fn spin_half_hamiltonian_matches_generator_sum() {
        let sys = ControlSystem::spin_half(0.001);
        let (ux, uy) = (0.3, -0.7);
        let h = sys.total_hamiltonian(&[ux, uy]).unwrap();
        let [x, y, z] = spin_half_generators();
        let expected = z * c(0.001, 0.0) + x * c(ux, 0.0) + y * c(uy, 0.0);
        let minus_i_h = h.as_matrix().map(|v| v * c(0.0, -1.0));
        assert!(frobenius(&(minus_i_h - expected)) < 1e-15);
    }

    #[test]
    fn total_hamiltonian_is_affine() {
        let mut rng = seeded(11);
        let drift = random_hermitian(&mut rng, 3, 1.0);
        let controls: Vec<_> = (0..3).map(|_| random_hermitian(&mut rng, 3, 1.0)).collect();
        let sys = ControlSystem::new(drift, controls.clone(), vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let diff = sys.total_hamiltonian(&uv).unwrap().into_inner() - sys.total_hamiltonian(&v).unwrap().into_inner();
        let mut expected = CMatrix::zeros(3, 3);
        for (uk, hk) in u.iter().zip(&controls) {
            expected += hk.as_matrix() * c(*uk, 0.0);
        }
        assert!(frobenius(&(diff - expected)) < 1e-14);
        assert!(hs_inner(sys.drift().as_matrix(), sys.drift().as_matrix()).unwrap().re > 0.0);
    }

    #[test]
    fn rejects_bad_systems() {
        let h = Hermitian::identity(2);
        assert!(ControlSystem::new(h.clone(), vec![], vec![]).is_err());
        assert!(ControlSystem::new(h.clone(), vec![Hermitian::identity(3)], vec!["x".into()]).is_err());
        assert!(ControlSystem::new(h.clone(), vec![h.clone()], vec![]).is_err());
        let sys = ControlSystem::spin_half(0.0);
        assert!(sys.total_hamiltonian(&[1.0]).is_err());
    }
}
