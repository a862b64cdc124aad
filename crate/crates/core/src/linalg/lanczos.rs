//! Largest eigenpair of a sparse symmetric-definite pencil by shift-invert Lanczos.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::factor::{EnvelopeCholesky, Ordering};
use crate::linalg::sparse::CsrMatrix;
use crate::scalar::{dot, norm2, Real};

#[derive(Clone, Debug)]
pub struct TopEigenpair<T> {
    pub value: T,
    pub vector: Vec<T>,
    /// `‖Aψ − σMψ‖ / ‖Aψ‖`.
    pub relative_residual: T,
    pub shift: T,
}

/// Computes the largest eigenvalue of `A ψ = σ M ψ` (`M` SPD).
///
/// A shift `s` with `sM − A` positive definite is found by doubling from
/// `initial_shift`; Lanczos then runs on `(sM − A)⁻¹ M` in the `M` inner
/// product, whose dominant eigenvalue `1/(s − σ_max)` is well separated.
pub fn largest_eigenpair<T: Real>(
    a: &CsrMatrix<T>,
    m: &CsrMatrix<T>,
    initial_shift: T,
    tol: T,
) -> Result<TopEigenpair<T>> {
    let n = a.nrows();
    let ordering = Ordering::rcm(&CsrMatrix::linear_combination(T::one(), a, T::one(), m));
    let mut shift = initial_shift.max(T::lit(1e-3));
    let mut factor = None;
    for _ in 0..60 {
        let shifted = CsrMatrix::linear_combination(shift, m, -T::one(), a);
        match EnvelopeCholesky::factor_with(&shifted, ordering.clone()) {
            Ok(f) => {
                factor = Some(f);
                break;
            }
            Err(Error::NotPositiveDefinite { .. }) => shift = shift * T::lit(2.0) + T::one(),
            Err(e) => return Err(e),
        }
    }
    let factor = factor.ok_or_else(|| Error::Eigen("no definite shift found".into()))?;

    let mut start: Vec<T> = (0..n)
        .map(|i| T::one() + T::lit(0.25) * T::lit((i as f64 * 0.618_033_988_75).fract()))
        .collect();
    let krylov = 40.min(n);
    let mut best = None;
    for _restart in 0..50 {
        let (theta, vector) = lanczos_dominant(&factor, m, &start, krylov);
        let value = shift - T::one() / theta;
        let av = a.mul_vec(&vector);
        let mv = m.mul_vec(&vector);
        let r: Vec<T> = av.iter().zip(&mv).map(|(&x, &y)| x - value * y).collect();
        let scale = norm2(&av).max(T::eps());
        let rel = norm2(&r) / scale;
        let done = rel <= tol;
        best = Some(TopEigenpair { value, vector: vector.clone(), relative_residual: rel, shift });
        if done {
            return Ok(best.unwrap());
        }
        start = vector;
    }
    best.ok_or_else(|| Error::Eigen("lanczos produced no estimate".into()))
}

fn lanczos_dominant<T: Real>(
    factor: &EnvelopeCholesky<T>,
    m: &CsrMatrix<T>,
    start: &[T],
    steps: usize,
) -> (T, Vec<T>) {
    let n = start.len();
    let m_norm = |x: &[T]| m.quad(x).max(T::zero()).sqrt();
    let mut q: Vec<Vec<T>> = Vec::with_capacity(steps);
    let mut mq: Vec<Vec<T>> = Vec::with_capacity(steps);
    let nrm = m_norm(start);
    let q0: Vec<T> = start.iter().map(|&x| x / nrm).collect();
    mq.push(m.mul_vec(&q0));
    q.push(q0);
    let mut alpha = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    for j in 0..steps {
        let mut w = factor.solve(&mq[j]);
        let a_j = dot(&w, &mq[j]);
        alpha.push(a_j);
        // full reorthogonalization in the M inner product, applied twice
        for _ in 0..2 {
            for k in 0..q.len() {
                let c = dot(&w, &mq[k]);
                for (wi, &qi) in w.iter_mut().zip(&q[k]) {
                    *wi -= c * qi;
                }
            }
        }
        if j + 1 == steps {
            break;
        }
        let b_j = m_norm(&w);
        if b_j <= T::lit(1e-14) * a_j.abs().max(T::eps()) {
            break;
        }
        beta.push(b_j);
        let qn: Vec<T> = w.iter().map(|&x| x / b_j).collect();
        mq.push(m.mul_vec(&qn));
        q.push(qn);
    }
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (imax, theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, T::min_value().unwrap()), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let y = eig.eigenvectors.column(imax);
    let mut v = vec![T::zero(); n];
    for (c, qk) in y.iter().zip(&q) {
        for (vi, &x) in v.iter_mut().zip(qk) {
            *vi += *c * x;
        }
    }
    let nrm = m_norm(&v);
    v.iter_mut().for_each(|x| *x /= nrm);
    (theta, v)
}
