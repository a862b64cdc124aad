use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenpairs of a symmetric-definite pencil, ascending.
#[derive(Clone, Debug)]
pub struct PencilEigen<T: Real> {
    pub values: Vec<T>,
    /// Columns are `B`-orthonormal eigenvectors, ordered like `values`.
    pub vectors: DMatrix<T>,
}

/// Solves `A x = μ B x` for symmetric `A` and symmetric positive definite `B`
/// by Cholesky reduction `B = L Lᵀ` to the standard problem `L⁻¹ A L⁻ᵀ`.
pub fn symmetric_pencil_eigen<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<PencilEigen<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::Shape { expected: n, got: b.nrows() });
    }
    let chol = Cholesky::new(b.clone())
        .ok_or_else(|| Error::Eigen("right-hand matrix is not positive definite".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let mut c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let half = T::lit(0.5);
    for i in 0..n {
        for j in 0..i {
            let v = (c[(i, j)] + c[(j, i)]) * half;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(c);
    let z = l
        .transpose()
        .solve_upper_triangular(&eig.eigenvectors)
        .ok_or_else(|| Error::Eigen("back transformation failed".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &z.column(i));
    }
    Ok(PencilEigen { values, vectors })
}

/// Flips the sign of each column so that its entry of largest magnitude is positive.
pub fn normalize_signs<T: Real>(vectors: &mut DMatrix<T>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = T::zero();
        let mut sign = T::one();
        for &v in col.iter() {
            if v.abs() > best {
                best = v.abs();
                sign = if v < T::zero() { -T::one() } else { T::one() };
            }
        }
        col *= sign;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pencil() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![6.0, 1.0, 4.0]));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 1.0]));
        let e = symmetric_pencil_eigen(&a, &b).unwrap();
        assert_eq!(e.values.len(), 3);
        for (got, want) in e.values.iter().zip([1.0f64, 3.0, 4.0]) {
            assert!((*got - want).abs() < 1e-12);
        }
        let g = e.vectors.transpose() * &b * &e.vectors;
        assert!((g - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn sign_rule_is_applied() {
        let mut m = DMatrix::from_row_slice(2, 2, &[0.1, 0.5, -0.9, -0.2]);
        normalize_signs(&mut m);
        assert_eq!(m[(1, 0)], 0.9);
        assert_eq!(m[(0, 1)], 0.5);
    }
}
