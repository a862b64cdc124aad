//! Sparse direct factorizations on a bandwidth-reducing ordering.

use crate::error::{Error, Result};
use crate::linalg::ordering::reverse_cuthill_mckee;
use crate::linalg::sparse::CsrMatrix;
use crate::scalar::Real;

/// A symmetric permutation `perm[new] = old` with its inverse.
#[derive(Clone, Debug)]
pub struct Ordering {
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl Ordering {
    pub fn rcm<T: Real>(pattern: &CsrMatrix<T>) -> Self {
        Self::from_perm(reverse_cuthill_mckee(&pattern.adjacency()))
    }

    pub fn from_perm(perm: Vec<usize>) -> Self {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        Self { perm, inv }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    fn gather<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.perm.iter().map(|&old| x[old]).collect()
    }

}

/// Envelope (profile) Cholesky factorization `P A Pᵀ = L Lᵀ` of a sparse
/// symmetric positive definite matrix. Fails with
/// [`Error::NotPositiveDefinite`] on the first non-positive pivot, which makes
/// it usable as a definiteness test.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky<T> {
    ordering: Ordering,
    first: Vec<usize>,
    row_start: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> EnvelopeCholesky<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        Self::factor_with(a, Ordering::rcm(a))
    }

    pub fn factor_with(a: &CsrMatrix<T>, ordering: Ordering) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        assert_eq!(n, ordering.len());
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = ordering.inv[old];
            for (j_old, _) in a.row(old) {
                let j = ordering.inv[j_old];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0);
        for i in 0..n {
            row_start.push(row_start[i] + i - first[i] + 1);
        }
        let mut data = vec![T::zero(); row_start[n]];
        for old in 0..n {
            let i = ordering.inv[old];
            for (j_old, v) in a.row(old) {
                let j = ordering.inv[j_old];
                if j <= i {
                    data[row_start[i] + j - first[i]] += v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let (head, tail) = data.split_at_mut(row_start[i]);
            let row_i = &mut tail[..i - fi + 1];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let s = if j == i {
                    let r = &row_i[k0 - fi..j - fi];
                    row_i[j - fi] - r.iter().fold(T::zero(), |acc, &x| acc + x * x)
                } else {
                    let row_j = &head[row_start[j]..row_start[j] + j - fj + 1];
                    let mut acc = T::zero();
                    for (x, y) in row_i[k0 - fi..j - fi].iter().zip(&row_j[k0 - fj..j - fj]) {
                        acc += *x * *y;
                    }
                    (row_i[j - fi] - acc) / row_j[j - fj]
                };
                if j == i {
                    if !(s > T::zero()) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: s.as_f64() });
                    }
                    row_i[j - fi] = s.sqrt();
                } else {
                    row_i[j - fi] = s;
                }
            }
        }
        Ok(Self { ordering, first, row_start, data })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Number of stored factor entries.
    pub fn profile(&self) -> usize {
        self.data.len()
    }

    fn row(&self, i: usize) -> &[T] {
        &self.data[self.row_start[i]..self.row_start[i + 1]]
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y = self.ordering.gather(b);
        // L y = b; skip the leading zeros of sparse right-hand sides
        let start = y.iter().position(|v| *v != T::zero()).unwrap_or(n);
        for i in start..n {
            let fi = self.first[i];
            let row = self.row(i);
            let k0 = fi.max(start);
            let mut acc = y[i];
            for k in k0..i {
                acc -= row[k - fi] * y[k];
            }
            y[i] = acc / row[i - fi];
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for k in fi..i {
                y[k] -= row[k - fi] * xi;
            }
        }
        scatter_real(&self.ordering, &y)
    }
}

fn scatter_real<T: Real>(ordering: &Ordering, y: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); y.len()];
    for (new, &old) in ordering.perm.iter().enumerate() {
        out[old] = y[new];
    }
    out
}

/// Banded LU factorization with partial pivoting on an RCM ordering, for
/// symmetric-pattern matrices that may be indefinite (Newton Jacobians).
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    ordering: Ordering,
    n: usize,
    kl: usize,
    ld: usize,
    ab: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Real> BandLu<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        Self::factor_with(a, Ordering::rcm(a))
    }

    pub fn factor_with(a: &CsrMatrix<T>, ordering: Ordering) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let mut kl = 0;
        for old in 0..n {
            let i = ordering.inv[old];
            for (j_old, _) in a.row(old) {
                kl = kl.max(i.abs_diff(ordering.inv[j_old]));
            }
        }
        let ku = kl;
        let ld = 2 * kl + ku + 1;
        let mut lu = Self { ordering, n, kl, ld, ab: vec![T::zero(); ld * n], pivots: vec![0; n] };
        for old in 0..n {
            let i = lu.ordering.inv[old];
            for (j_old, v) in a.row(old) {
                let j = lu.ordering.inv[j_old];
                *lu.at_mut(i, j) += v;
            }
        }
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // valid for j - 2kl <= i <= j + kl
        j * self.ld + 2 * self.kl + i - j
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.ab[self.idx(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let k = self.idx(i, j);
        &mut self.ab[k]
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl) = (self.n, self.kl);
        let ku = kl;
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = self.at(j, j).abs();
            for i in 1..=km {
                let v = self.at(j + i, j).abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            self.pivots[j] = j + jp;
            if best == T::zero() || !best.is_finite() {
                return Err(Error::Singular(j));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let (a, b) = (self.idx(j, c), self.idx(j + jp, c));
                    self.ab.swap(a, b);
                }
            }
            if km > 0 {
                let inv = T::one() / self.at(j, j);
                for i in 1..=km {
                    *self.at_mut(j + i, j) *= inv;
                }
                for c in j + 1..=ju {
                    let ajc = self.at(j, c);
                    if ajc != T::zero() {
                        for i in 1..=km {
                            let l = self.at(j + i, j);
                            *self.at_mut(j + i, c) -= l * ajc;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let (n, kl) = (self.n, self.kl);
        assert_eq!(b.len(), n);
        let mut x = self.ordering.gather(b);
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let p = self.pivots[j];
            if p != j {
                x.swap(p, j);
            }
            let xj = x[j];
            for i in 1..=km {
                x[j + i] -= self.at(j + i, j) * xj;
            }
        }
        let ub = 2 * kl;
        for j in (0..n).rev() {
            x[j] /= self.at(j, j);
            let xj = x[j];
            for i in j.saturating_sub(ub)..j {
                x[i] -= self.at(i, j) * xj;
            }
        }
        scatter_real(&self.ordering, &x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    fn residual(a: &CsrMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
        a.mul_vec(x).iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = laplacian_1d(50, 0.01);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let f = EnvelopeCholesky::factor(&a).unwrap();
        let x = f.solve(&b);
        assert!(residual(&a, &x, &b) < 1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = laplacian_1d(10, -3.0);
        assert!(matches!(EnvelopeCholesky::factor(&a), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn lu_solves_indefinite_system() {
        let a = laplacian_1d(40, -1.3);
        let b: Vec<f64> = (0..40).map(|i| 1.0 + 0.1 * i as f64).collect();
        let f = BandLu::factor(&a).unwrap();
        let x = f.solve(&b);
        assert!(residual(&a, &x, &b) < 1e-9);
    }

    #[test]
    fn lu_pivots_on_zero_diagonal() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 1, 1.0), (1, 0, 1.0), (1, 1, 0.0), (1, 2, 2.0), (2, 1, 2.0), (2, 2, 1.0)],
        );
        let f = BandLu::factor(&a).unwrap();
        let b = [1.0, 2.0, 3.0];
        assert!(residual(&a, &f.solve(&b), &b) < 1e-12);
    }

    #[test]
    fn lu_detects_singularity() {
        // Neumann Laplacian: constants span the kernel
        let n = 5;
        let mut t = Vec::new();
        for i in 0..n {
            let deg = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            t.push((i, i, deg));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        assert!(matches!(BandLu::factor(&a), Err(Error::Singular(_))));
    }
}
