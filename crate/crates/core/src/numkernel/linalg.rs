use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Gram matrices with a (column-equilibrated) condition number above this
/// are treated as rank deficient.
pub const CONDITION_LIMIT: f64 = 1e12;

/// 2-norm condition number of a symmetric PSD matrix after scaling it to unit
/// diagonal, so that column units do not matter. Returns `inf` for singular
/// input or a zero column.
pub(crate) fn condition_number(gram: &DMatrix<f64>) -> f64 {
    let k = gram.nrows();
    let mut scale = DVector::zeros(k);
    for i in 0..k {
        let d = gram[(i, i)];
        if !(d > 0.0) {
            return f64::INFINITY;
        }
        scale[i] = 1.0 / d.sqrt();
    }
    let mut eq = gram.clone();
    for i in 0..k {
        for j in 0..k {
            eq[(i, j)] *= scale[i] * scale[j];
        }
    }
    let eig = SymmetricEigen::new(eq).eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return f64::INFINITY;
    }
    max / min
}

/// Inverse of a symmetric positive definite matrix via Cholesky; the result is
/// symmetrized to remove round-off asymmetry.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = m.clone().cholesky()?.inverse();
    Some((&inv + inv.transpose()) * 0.5)
}

/// In-place lower Cholesky factor of a row-major `k × k` matrix. Only the lower
/// triangle is read and written. Returns `false` if the matrix is not PD.
pub(crate) fn cholesky_lower(a: &mut [f64], k: usize) -> bool {
    for j in 0..k {
        let mut d = a[j * k + j];
        for p in 0..j {
            d -= a[j * k + p] * a[j * k + p];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[j * k + j] = d;
        for i in (j + 1)..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= a[i * k + p] * a[j * k + p];
            }
            a[i * k + j] = s / d;
        }
    }
    true
}

/// Solves `L x = b` in place (forward substitution), `L` row-major lower.
pub(crate) fn solve_lower(l: &[f64], k: usize, b: &mut [f64]) {
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * k + p] * b[p];
        }
        b[i] = s / l[i * k + i];
    }
}

/// Solves `Lᵀ x = b` in place (back substitution), `L` row-major lower.
pub(crate) fn solve_upper_t(l: &[f64], k: usize, b: &mut [f64]) {
    for i in (0..k).rev() {
        let mut s = b[i];
        for p in (i + 1)..k {
            s -= l[p * k + i] * b[p];
        }
        b[i] = s / l[i * k + i];
    }
}
