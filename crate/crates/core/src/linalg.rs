//! Dense symmetric positive-definite helpers on top of nalgebra.
//!
//! Every system the solvers build has the form `Aᵀ W A + P` with diagonal
//! positive `W` and `P`, so a Cholesky factorization always exists in exact
//! arithmetic. A failed factorization is reported as
//! [`Error::SingularSystem`].

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// `Aᵀ diag(w) A`.
pub fn weighted_gram(a: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = a.clone();
    for (mut row, &wi) in scaled.row_iter_mut().zip(w.iter()) {
        row *= wi;
    }
    let mut gram = a.transpose() * scaled;
    symmetrize(&mut gram);
    gram
}

/// `Aᵀ diag(w) b`.
pub fn weighted_at_b(a: &DMatrix<f64>, w: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.tr_mul(&w.component_mul(b))
}

/// Adds `d` to the diagonal of `m` in place.
pub fn add_diagonal(m: &mut DMatrix<f64>, d: &DVector<f64>) {
    for (i, &di) in d.iter().enumerate() {
        m[(i, i)] += di;
    }
}

pub fn cholesky(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let chol = Cholesky::new(m).ok_or(Error::SingularSystem)?;
    // nalgebra accepts tiny positive pivots; reject anything that would
    // leave the solve meaningless.
    let l = chol.l_dirty();
    let max_pivot = l.diagonal().iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if !(min_pivot > 0.0) || min_pivot < max_pivot * f64::EPSILON {
        return Err(Error::SingularSystem);
    }
    Ok(chol)
}

pub fn spd_solve(m: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = cholesky(m)?;
    let x = chol.solve(rhs);
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularSystem)
    }
}

/// Explicit inverse through the Cholesky factor, symmetrized exactly.
pub fn spd_inverse(chol: &Cholesky<f64, Dyn>) -> DMatrix<f64> {
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    inv
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// `max |m - mᵀ| / max |m|`, zero for the zero matrix.
pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).amax() / scale
}

/// `‖new - old‖ / max(‖new‖, ‖old‖)`, zero when both vanish.
pub fn relative_change(new: &DVector<f64>, old: &DVector<f64>) -> f64 {
    let denom = new.norm().max(old.norm());
    if denom == 0.0 {
        0.0
    } else {
        (new - old).norm() / denom
    }
}
