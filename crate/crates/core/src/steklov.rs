//! Steklov spectra through the discrete Dirichlet-to-Neumann map.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::assembly::{assemble, DiscreteOperators};
use crate::error::{check_len, invalid, Error, Result};
use crate::geometry::DomainSpec;
use crate::linalg::{normalize_signs, symmetric_pencil_eigen, CsrMatrix, EnvelopeCholesky};
use crate::meshing::mesh_domain;
use crate::scalar::Real;

/// `|μ₀|` above this marks the solve as unhealthy (reported, not fatal).
pub const MU0_TOLERANCE: f64 = 1e-8;

/// Schur complement `S = K_bb − K_bi K_ii⁻¹ K_ib` with the factor kept for
/// harmonic extension.
pub struct DtnMap<T: Real> {
    pub s: DMatrix<T>,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    k_ib: CsrMatrix<T>,
    k_ii: Option<EnvelopeCholesky<T>>,
}

impl<T: Real> DtnMap<T> {
    pub fn new(ops: &DiscreteOperators<T>) -> Result<Self> {
        let boundary = ops.boundary_index.clone();
        let interior = ops.interior_index.clone();
        let nb = boundary.len();
        let mut s = ops.k.submatrix(&boundary, &boundary).to_dense();
        let k_ib = ops.k.submatrix(&interior, &boundary);
        if interior.is_empty() {
            return Ok(Self { s, boundary, interior, k_ib, k_ii: None });
        }
        let k_ii = EnvelopeCholesky::factor(&ops.k.submatrix(&interior, &interior))
            .map_err(|e| Error::DegenerateMesh(format!("interior stiffness block: {e}")))?;
        let k_bi = ops.k.submatrix(&boundary, &interior);
        let ni = interior.len();
        let columns: Vec<Vec<T>> = (0..nb)
            .into_par_iter()
            .map(|j| {
                let mut rhs = vec![T::zero(); ni];
                for (i, v) in k_bi.row(j) {
                    rhs[i] = v;
                }
                k_bi.mul_vec(&k_ii.solve(&rhs))
            })
            .collect();
        for (j, col) in columns.iter().enumerate() {
            for i in 0..nb {
                s[(i, j)] -= col[i];
            }
        }
        let half = T::lit(0.5);
        for i in 0..nb {
            for j in 0..i {
                let v = (s[(i, j)] + s[(j, i)]) * half;
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(Self { s, boundary, interior, k_ib, k_ii: Some(k_ii) })
    }

    pub fn boundary_index(&self) -> &[usize] {
        &self.boundary
    }

    /// Full nodal field equal to `psi` on the boundary and discrete-harmonic inside.
    pub fn harmonic_extension(&self, psi: &[T]) -> Result<Vec<T>> {
        check_len(self.boundary.len(), psi.len())?;
        let n = self.boundary.len() + self.interior.len();
        let mut u = vec![T::zero(); n];
        for (&b, &v) in self.boundary.iter().zip(psi) {
            u[b] = v;
        }
        if let Some(k_ii) = &self.k_ii {
            let rhs = self.k_ib.mul_vec(psi);
            let x = k_ii.solve(&rhs);
            for (&i, v) in self.interior.iter().zip(x) {
                u[i] = -v;
            }
        }
        Ok(u)
    }
}

pub fn dtn_matrix<T: Real>(ops: &DiscreteOperators<T>) -> Result<DMatrix<T>> {
    Ok(DtnMap::new(ops)?.s)
}

#[derive(Clone, Debug)]
pub struct SteklovSpectrum<T: Real> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// Boundary nodal values (rows follow `boundary_index`), `B`-orthonormal.
    pub eigenvectors: DMatrix<T>,
    pub boundary_index: Vec<usize>,
    /// `‖Sψ − μBψ‖ / ‖Sψ‖` per pair; zero where `Sψ` vanishes.
    pub residuals: Vec<T>,
    /// `|μ₀| ≤ 1e−8`.
    pub mu0_healthy: bool,
}

impl<T: Real> SteklovSpectrum<T> {
    pub fn mu1(&self) -> T {
        self.eigenvalues[1]
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        self.eigenvectors.column(k).iter().copied().collect()
    }
}

/// The `k` smallest eigenpairs of `Sψ = μ B_bb ψ`.
pub fn steklov_spectrum<T: Real>(ops: &DiscreteOperators<T>, k: usize) -> Result<SteklovSpectrum<T>> {
    spectrum_from_map(&DtnMap::new(ops)?, ops, k)
}

pub fn spectrum_from_map<T: Real>(map: &DtnMap<T>, ops: &DiscreteOperators<T>, k: usize) -> Result<SteklovSpectrum<T>> {
    let nb = map.boundary.len();
    if k == 0 || k > nb {
        return Err(invalid(format!("k = {k} must lie in 1..={nb} (boundary vertex count)")));
    }
    let bbb = ops.b.submatrix(&map.boundary, &map.boundary).to_dense();
    let eig = symmetric_pencil_eigen(&map.s, &bbb)?;
    let mut vectors = eig.vectors.columns(0, k).into_owned();
    normalize_signs(&mut vectors);
    let eigenvalues: Vec<T> = eig.values[..k].to_vec();
    let residuals = (0..k)
        .map(|j| {
            let psi: DVector<T> = vectors.column(j).into_owned();
            let sp = &map.s * &psi;
            let r = &sp - (&bbb * &psi) * eigenvalues[j];
            let scale = sp.norm();
            if scale > T::zero() {
                r.norm() / scale
            } else {
                T::zero()
            }
        })
        .collect();
    let mu0_healthy = eigenvalues[0].abs() <= T::lit(MU0_TOLERANCE);
    Ok(SteklovSpectrum { eigenvalues, eigenvectors: vectors, boundary_index: map.boundary.clone(), residuals, mu0_healthy })
}

/// Steklov eigenvalues from the full pencil `Bφ = θ(K + B)φ`, `μ = 1/θ − 1`.
///
/// Dense and independent of the Schur route; meant for small meshes.
pub fn full_pencil_spectrum<T: Real>(ops: &DiscreteOperators<T>, k: usize) -> Result<Vec<T>> {
    let b = ops.b.to_dense();
    let kb = CsrMatrix::linear_combination(T::one(), &ops.k, T::one(), &ops.b).to_dense();
    let eig = symmetric_pencil_eigen(&b, &kb)?;
    let n = eig.values.len();
    if k > ops.boundary_index.len() {
        return Err(invalid(format!("k = {k} exceeds boundary vertex count")));
    }
    Ok((0..k).map(|j| T::one() / eig.values[n - 1 - j] - T::one()).collect())
}

/// `vᵀKv / vᵀBv` after removing the `B`-weighted boundary mean of `v`.
pub fn rayleigh_upper_bound<T: Real>(ops: &DiscreteOperators<T>, v: &[T]) -> Result<T> {
    check_len(ops.n(), v.len())?;
    let ones = vec![T::one(); v.len()];
    let b1 = ops.b.mul_vec(&ones);
    let mean = crate::scalar::dot(&b1, v) / ops.perimeter;
    let centered: Vec<T> = v.iter().map(|&x| x - mean).collect();
    let den = ops.b.quad(&centered);
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if !(den > T::lit(100.0) * T::eps() * scale * scale * ops.perimeter) {
        return Err(Error::DegenerateTrial);
    }
    Ok(ops.k.quad(&centered) / den)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceFamily<T> {
    /// Stadia of fixed cap radius.
    Stadium { radius: T },
    /// Disks of radius `D/2`.
    Disk,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceConstantReport<T> {
    pub diameter: T,
    pub inradius: T,
    pub mu1: T,
    pub mu1_d: T,
    pub mu1_d2_over_r: T,
    /// `1/√(μ₁ D)`.
    pub c_emp: T,
    pub n_vertices: usize,
    pub n_boundary: usize,
}

/// Measures `μ₁` across a diameter sweep of one family.
pub fn trace_probe<T: Real>(family: TraceFamily<T>, diameters: &[T], h: T) -> Result<Vec<TraceConstantReport<T>>> {
    diameters
        .par_iter()
        .map(|&d| {
            let spec = match family {
                TraceFamily::Stadium { radius } => DomainSpec::stadium(radius, d),
                TraceFamily::Disk => DomainSpec::disk(d * T::lit(0.5)),
            };
            let (_, mesh) = mesh_domain(&spec, h)?;
            let r = match family {
                TraceFamily::Stadium { radius } => radius,
                TraceFamily::Disk => d * T::lit(0.5),
            };
            let ops = assemble(&mesh)?;
            let mu1 = steklov_spectrum(&ops, 2)?.mu1();
            Ok(TraceConstantReport {
                diameter: d,
                inradius: r,
                mu1,
                mu1_d: mu1 * d,
                mu1_d2_over_r: mu1 * d * d / r,
                c_emp: T::one() / (mu1 * d).sqrt(),
                n_vertices: mesh.n_vertices(),
                n_boundary: ops.boundary_index.len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::meshing::Mesh;

    fn disk_ops(r: f64, h: f64) -> DiscreteOperators<f64> {
        assemble(&mesh_domain(&DomainSpec::disk(r), h).unwrap().1).unwrap()
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let ops = disk_ops(1.0, 0.15);
        let s = dtn_matrix(&ops).unwrap();
        let ones = DVector::from_element(s.nrows(), 1.0);
        assert!((&s * ones).amax() < 1e-10);
    }

    #[test]
    fn no_interior_vertices_gives_kbb() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        let mesh = Mesh::<f64>::new(v, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let ops = assemble(&mesh).unwrap();
        let s = dtn_matrix(&ops).unwrap();
        let kbb = ops.k.submatrix(&ops.boundary_index, &ops.boundary_index).to_dense();
        assert_eq!(s, kbb);
    }

    #[test]
    fn disk_linear_trace_quotient() {
        let ops = disk_ops(1.0, 0.1);
        let map = DtnMap::new(&ops).unwrap();
        let mesh = mesh_domain(&DomainSpec::disk(1.0), 0.1).unwrap().1;
        let psi: Vec<f64> = map.boundary_index().iter().map(|&i| mesh.vertices()[i].x).collect();
        let bbb = ops.b.submatrix(&ops.boundary_index, &ops.boundary_index).to_dense();
        let v = DVector::from_vec(psi);
        let q = (v.transpose() * &map.s * &v)[0] / (v.transpose() * bbb * &v)[0];
        assert!((q - 1.0).abs() < 0.01, "{q}");
    }

    #[test]
    fn disk_spectrum_and_orthonormality() {
        let ops = disk_ops(1.0, 0.05);
        let spec = steklov_spectrum(&ops, 5).unwrap();
        assert!(spec.mu0_healthy);
        for (mu, want) in spec.eigenvalues.iter().zip([0.0, 1.0, 1.0, 2.0, 2.0]) {
            assert!((mu - want).abs() <= 0.01 * want.max(1e-6) + 1e-8, "{mu}");
        }
        let bbb = ops.b.submatrix(&ops.boundary_index, &ops.boundary_index).to_dense();
        let g = spec.eigenvectors.transpose() * bbb * &spec.eigenvectors;
        assert!((g - DMatrix::identity(5, 5)).amax() < 1e-8);
        assert!(spec.residuals[1..].iter().all(|r| *r < 1e-8));
        assert!(matches!(steklov_spectrum(&ops, 10_000), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn radius_two_disk() {
        let mu1 = steklov_spectrum(&disk_ops(2.0, 0.1), 2).unwrap().mu1();
        assert!((mu1 - 0.5).abs() < 0.005, "{mu1}");
    }

    #[test]
    fn dilation_scaling() {
        let (_, mesh) = mesh_domain(&DomainSpec::ellipse(2.0f64, 1.0), 0.2).unwrap();
        let mu = steklov_spectrum(&assemble(&mesh).unwrap(), 2).unwrap().mu1();
        let s = 2.5;
        let mu_s = steklov_spectrum(&assemble(&mesh.scaled(s)).unwrap(), 2).unwrap().mu1();
        assert!((mu_s * s / mu - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rayleigh_attains_and_rejects() {
        let ops = disk_ops(1.0, 0.2);
        let map = DtnMap::new(&ops).unwrap();
        let spec = spectrum_from_map(&map, &ops, 2).unwrap();
        let v = map.harmonic_extension(&spec.vector(1)).unwrap();
        let q = rayleigh_upper_bound(&ops, &v).unwrap();
        assert!((q - spec.mu1()).abs() < 1e-10);
        let c = vec![3.0; ops.n()];
        assert!(matches!(rayleigh_upper_bound(&ops, &c), Err(Error::DegenerateTrial)));
    }

    #[test]
    fn stadium_x_trial_closed_form() {
        let (r, d) = (1.0f64, 12.0);
        let (_, mesh) = mesh_domain(&DomainSpec::stadium(r, d), 0.1).unwrap();
        let ops = assemble(&mesh).unwrap();
        let x: Vec<f64> = mesh.vertices().iter().map(|p| p.x).collect();
        let q = rayleigh_upper_bound(&ops, &x).unwrap();
        let a = d / 2.0 - r;
        let pi = std::f64::consts::PI;
        let area = 4.0 * a * r + pi * r * r;
        let trace = 4.0 * a.powi(3) / 3.0 + 2.0 * r * (pi * a * a + 4.0 * a * r + pi * r * r / 2.0);
        assert!((q / (area / trace) - 1.0).abs() < 5e-3, "{q} vs {}", area / trace);
        assert!(q <= 12.0 * r / (d * d) * 1.5);
        let mu1 = steklov_spectrum(&ops, 2).unwrap().mu1();
        assert!(q >= mu1 - 1e-10);
    }

    #[test]
    fn schur_matches_full_pencil() {
        let (_, mesh) = mesh_domain(&DomainSpec::ellipse(1.5f64, 1.0), 0.2).unwrap();
        assert!(mesh.n_vertices() <= 400);
        let ops = assemble(&mesh).unwrap();
        let schur = steklov_spectrum(&ops, 4).unwrap();
        let full = full_pencil_spectrum(&ops, 4).unwrap();
        for k in 1..4 {
            assert!((schur.eigenvalues[k] - full[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn disk_family_probe() {
        let rows = trace_probe(TraceFamily::Disk, &[2.0f64, 4.0], 0.1).unwrap();
        for row in rows {
            assert!((row.mu1_d - 2.0).abs() < 0.02, "{row:?}");
        }
    }
}
