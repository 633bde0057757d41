//! Small dense linear-algebra helpers with explicit conditioning checks.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition number above which an inverse is refused.
pub const MAX_CONDITION: f64 = 1e12;
/// Absolute tolerance on symmetry of inputs.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub fn require_square(m: &DMatrix<f64>, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::shape(
            format!("{n}x{n} {what}"),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

pub fn require_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if let Some(v) = m.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what} has non-finite entry {v}"
        )));
    }
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::InvalidInput(format!(
                    "{what} is not symmetric at ({i},{j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// `(m + m^T) / 2`, removing rounding asymmetry from products.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigenpairs sorted by ascending eigenvalue; eigenvectors are columns.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (values, vectors)
}

/// Fails with [`Error::NotPositiveDefinite`] naming the smallest eigenvalue.
pub fn require_positive_definite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    let min = sym_eigenvalues(m).first().copied().unwrap_or(0.0);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            what,
            eigenvalue: min,
        });
    }
    Ok(())
}

pub fn require_psd(m: &DMatrix<f64>, what: &'static str, tol: f64) -> Result<()> {
    let min = sym_eigenvalues(m).first().copied().unwrap_or(0.0);
    if min < -tol {
        return Err(Error::NotPositiveDefinite {
            what,
            eigenvalue: min,
        });
    }
    Ok(())
}

/// 2-norm condition number from singular values; infinite when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// LU inverse guarded by a condition-number check.
pub fn inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let cond = condition_number(m);
    if !cond.is_finite() {
        return Err(Error::Singular {
            what,
            hint: "matrix has a zero singular value",
        });
    }
    if cond > MAX_CONDITION {
        return Err(Error::NearSingular {
            what,
            condition: cond,
        });
    }
    m.clone().lu().try_inverse().ok_or(Error::Singular {
        what,
        hint: "LU factorization broke down",
    })
}

/// Solves `m x = b` with the same guard as [`inverse`].
pub fn solve(m: &DMatrix<f64>, b: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    let cond = condition_number(m);
    if !cond.is_finite() {
        return Err(Error::Singular {
            what,
            hint: "matrix has a zero singular value",
        });
    }
    if cond > MAX_CONDITION {
        return Err(Error::NearSingular {
            what,
            condition: cond,
        });
    }
    m.clone().lu().solve(b).ok_or(Error::Singular {
        what,
        hint: "LU factorization broke down",
    })
}

/// Orthonormal basis (columns) of the null space of a symmetric matrix:
/// eigenvectors whose eigenvalue is below `rel_tol` times the largest.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen_sorted(m);
    let scale = values
        .iter()
        .fold(0.0_f64, |s, v| s.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let cols: Vec<usize> = (0..values.len())
        .filter(|&k| values[k].abs() <= rel_tol * scale)
        .collect();
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| vectors[(i, cols[j])])
}

/// Orthonormalizes the columns of `m` (thin QR).
pub fn orthonormal_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.ncols();
    let q = m.clone().qr().q();
    q.columns(0, k).into_owned()
}

/// Largest principal angle between the column spans of two orthonormal bases.
/// Returns `pi/2` when the dimensions differ.
pub fn max_principal_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    if u.ncols() != v.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if u.ncols() == 0 {
        return 0.0;
    }
    // sines of the angles are the singular values of the part of v outside span(u)
    let residual = v - u * (u.transpose() * v);
    let s = residual.singular_values();
    s.iter().copied().fold(0.0_f64, f64::max).min(1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_rejects_singular_and_ill_conditioned() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            inverse(&s, "m"),
            Err(Error::Singular { .. }) | Err(Error::NearSingular { .. })
        ));
        let ill = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]);
        assert!(matches!(
            inverse(&ill, "m"),
            Err(Error::NearSingular { .. })
        ));
        let ok = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let inv = inverse(&ok, "m").unwrap();
        assert!(((&ok * inv) - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let n = null_space(&m, 1e-10);
        assert_eq!(n.ncols(), 1);
        assert!((n[(0, 0)] + n[(1, 0)]).abs() < 1e-12);
    }

    #[test]
    fn principal_angle_of_same_span_is_zero() {
        let u = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let v = DMatrix::from_column_slice(2, 1, &[-1.0, 0.0]);
        assert!(max_principal_angle(&u, &v) < 1e-15);
        let w = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert!((max_principal_angle(&u, &w) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
}
