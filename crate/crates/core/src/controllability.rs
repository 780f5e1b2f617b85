//! Lie-algebra rank condition.
//!
//! A closed system `dX/dt = (A_0 + Σ u_c A_c) X` on SU(n) is controllable iff
//! the real Lie algebra generated by the `A_i` is all of su(n), i.e. has
//! dimension `n² - 1`.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::linalg::{check_square, commutator, frobenius, hermiticity_defect, hs_inner, CMatrix};
use crate::model::ControlSystem;

/// Relative norm below which a Gram–Schmidt residual counts as dependent.
pub const INDEPENDENCE_TOL: f64 = 1e-8;
const SHAPE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LieClosureReport {
    pub dimension: usize,
    pub target_dimension: usize,
    pub controllable: bool,
    /// Orthonormal under `Re tr(A† B)`, skew-Hermitian and traceless.
    pub basis: Vec<CMatrix>,
    /// Deepest commutator nesting that contributed a new direction
    /// (0 = the generators alone).
    pub depth: usize,
    /// True if any generator had a trace component that was dropped.
    pub trace_removed: bool,
}

/// Brings a generator into traceless skew-Hermitian form. Hermitian input
/// `H` is read as the Hamiltonian of `-iH`.
fn normalize(a: &CMatrix) -> Result<(CMatrix, bool)> {
    let n = check_square(a)?;
    let scale = frobenius(a).max(1.0);
    let skew = if hermiticity_defect(&(a * Complex64::i())) <= SHAPE_TOL * scale {
        a.clone()
    } else if hermiticity_defect(a) <= SHAPE_TOL * scale {
        a * Complex64::new(0.0, -1.0)
    } else {
        return Err(invalid("generators must be Hermitian or skew-Hermitian"));
    };
    let tr = skew.trace() / n as f64;
    let removed = tr.norm() > SHAPE_TOL * scale;
    let mut out = skew;
    for i in 0..n {
        out[(i, i)] -= tr;
    }
    Ok((out, removed))
}

/// Orthogonalizes `x` against `basis` (twice, for stability) and returns the
/// unit residual if its norm exceeds `INDEPENDENCE_TOL * reference`.
///
/// `reference` is the scale `x` was built from, not `‖x‖` itself: the
/// commutator of two commuting unit matrices is pure round-off and must not
/// be judged against its own norm.
fn orthonormal_residual(basis: &[CMatrix], x: &CMatrix, reference: f64) -> Result<Option<CMatrix>> {
    if reference == 0.0 {
        return Ok(None);
    }
    let mut r = x.clone();
    for _ in 0..2 {
        for b in basis {
            let coeff = hs_inner(b, &r)?.re;
            r -= b * Complex64::new(coeff, 0.0);
        }
    }
    let norm = frobenius(&r);
    if norm <= INDEPENDENCE_TOL * reference {
        return Ok(None);
    }
    Ok(Some(r.unscale(norm)))
}

/// Breadth-first closure of `generators` under commutators.
pub fn lie_closure(generators: &[CMatrix]) -> Result<LieClosureReport> {
    let first = generators
        .first()
        .ok_or_else(|| invalid("at least one generator is required"))?;
    let n = check_square(first)?;
    let target = n * n - 1;

    let mut trace_removed = false;
    let mut basis: Vec<CMatrix> = Vec::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for g in generators {
        if check_square(g)? != n {
            return Err(invalid("generators must share one dimension"));
        }
        let (a, removed) = normalize(g)?;
        trace_removed |= removed;
        if let Some(e) = orthonormal_residual(&basis, &a, frobenius(&a))? {
            queue.push_back((basis.len(), 0));
            basis.push(e);
        }
    }

    let mut depth = 0;
    // Every pair (i, j) is bracketed once, when the later of the two is popped.
    while let Some((i, level)) = queue.pop_front() {
        if basis.len() == target {
            break;
        }
        for j in 0..i {
            // Basis elements have unit norm.
            let c = commutator(&basis[i], &basis[j])?;
            if let Some(e) = orthonormal_residual(&basis, &c, 1.0)? {
                queue.push_back((basis.len(), level + 1));
                basis.push(e);
                depth = depth.max(level + 1);
                if basis.len() == target {
                    break;
                }
            }
        }
    }

    Ok(LieClosureReport {
        dimension: basis.len(),
        target_dimension: target,
        controllable: basis.len() == target,
        basis,
        depth,
        trace_removed,
    })
}

/// Closure of `{-iH_0, -iH_1, ..., -iH_m}`.
pub fn system_closure(sys: &ControlSystem) -> Result<LieClosureReport> {
    let mut gens = vec![sys.drift().as_matrix().clone()];
    gens.extend(sys.controls().iter().map(|h| h.as_matrix().clone()));
    lie_closure(&gens)
}

pub fn is_controllable(sys: &ControlSystem) -> Result<bool> {
    Ok(system_closure(sys)?.controllable)
}
