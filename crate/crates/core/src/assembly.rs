//! P1 operators, the bistable nonlinearity and the energy functional.

use std::ops::Deref;

use crate::error::{check_len, Error, Result};
use crate::geometry::{BoundaryPart, PartitionLabels, Point};
use crate::linalg::CsrMatrix;
use crate::meshing::Mesh;
use crate::scalar::Real;

/// `g(u) = u − u³` with primitive `G(u) = u²/2 − u⁴/4`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Bistable;

impl Bistable {
    #[inline]
    pub fn g<T: Real>(u: T) -> T {
        u - u * u * u
    }

    #[inline]
    pub fn dg<T: Real>(u: T) -> T {
        T::one() - T::lit(3.0) * u * u
    }

    #[inline]
    pub fn big_g<T: Real>(u: T) -> T {
        let u2 = u * u;
        u2 * T::lit(0.5) - u2 * u2 * T::lit(0.25)
    }
}

/// Nodal values of a P1 function.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T>(Vec<T>);

impl<T: Real> Field<T> {
    pub fn new(values: Vec<T>, n_vertices: usize) -> Result<Self> {
        check_len(n_vertices, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("field value at vertex {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn constant(n_vertices: usize, value: T) -> Self {
        Self(vec![value; n_vertices])
    }

    pub fn from_fn(mesh: &Mesh<T>, f: impl Fn(&Point<T>) -> T) -> Self {
        Self(mesh.vertices().iter().map(f).collect())
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> Deref for Field<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeRef<T> {
    pub start: usize,
    pub end: usize,
    pub length: T,
}

/// Stiffness, interior mass and boundary mass, all full-size.
#[derive(Clone, Debug)]
pub struct DiscreteOperators<T: Real> {
    pub k: CsrMatrix<T>,
    pub m: CsrMatrix<T>,
    pub b: CsrMatrix<T>,
    /// Boundary vertices in cycle order.
    pub boundary_index: Vec<usize>,
    pub interior_index: Vec<usize>,
    /// Boundary edges in cycle order, aligned with mesh partition labels.
    pub edges: Vec<EdgeRef<T>>,
    pub area: T,
    pub perimeter: T,
}

impl<T: Real> DiscreteOperators<T> {
    pub fn n(&self) -> usize {
        self.k.nrows()
    }
}

/// `∫ ∇φ_i·∇φ_j` on one triangle.
pub fn element_stiffness<T: Real>(p: [Point<T>; 3]) -> [[T; 3]; 3] {
    let b = [p[1].y - p[2].y, p[2].y - p[0].y, p[0].y - p[1].y];
    let c = [p[2].x - p[1].x, p[0].x - p[2].x, p[1].x - p[0].x];
    let area = ((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y)) * T::lit(0.5);
    let s = T::one() / (T::lit(4.0) * area);
    let mut k = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) * s;
        }
    }
    k
}

/// `∫ φ_i φ_j` on a triangle of the given area.
pub fn element_mass<T: Real>(area: T) -> [[T; 3]; 3] {
    let off = area / T::lit(12.0);
    let diag = off + off;
    [[diag, off, off], [off, diag, off], [off, off, diag]]
}

/// `∫ φ_i φ_j dσ` on a boundary segment of the given length.
pub fn edge_mass<T: Real>(length: T) -> [[T; 2]; 2] {
    let off = length / T::lit(6.0);
    [[off + off, off], [off, off + off]]
}

pub fn assemble<T: Real>(mesh: &Mesh<T>) -> Result<DiscreteOperators<T>> {
    let n = mesh.n_vertices();
    let v = mesh.vertices();
    let mut kt = Vec::with_capacity(9 * mesh.triangles().len());
    let mut mt = Vec::with_capacity(9 * mesh.triangles().len());
    let mut area = T::zero();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = [v[tri[0]], v[tri[1]], v[tri[2]]];
        let a = mesh.triangle_area(t);
        let h = (0..3).map(|k| (p[(k + 1) % 3] - p[k]).norm()).fold(T::zero(), |x, y| x.max(y));
        if !(a >= T::lit(1e-14) * h * h) {
            return Err(Error::Assembly(format!("triangle {t} is degenerate (area {a})")));
        }
        area += a;
        let ke = element_stiffness(p);
        let me = element_mass(a);
        for i in 0..3 {
            for j in 0..3 {
                kt.push((tri[i], tri[j], ke[i][j]));
                mt.push((tri[i], tri[j], me[i][j]));
            }
        }
    }
    let mut bt = Vec::with_capacity(4 * mesh.boundary_edges().len());
    let mut edges = Vec::with_capacity(mesh.boundary_edges().len());
    let mut perimeter = T::zero();
    for e in mesh.boundary_edges() {
        let be = edge_mass(e.length);
        let ids = [e.start, e.end];
        for i in 0..2 {
            for j in 0..2 {
                bt.push((ids[i], ids[j], be[i][j]));
            }
        }
        perimeter += e.length;
        edges.push(EdgeRef { start: e.start, end: e.end, length: e.length });
    }
    let boundary_index = mesh.boundary_vertices();
    let on_boundary = mesh.is_boundary_vertex();
    let interior_index = (0..n).filter(|&i| !on_boundary[i]).collect();
    Ok(DiscreteOperators {
        k: CsrMatrix::from_triplets(n, n, &kt),
        m: CsrMatrix::from_triplets(n, n, &mt),
        b: CsrMatrix::from_triplets(n, n, &bt),
        boundary_index,
        interior_index,
        edges,
        area,
        perimeter,
    })
}

/// Gauss–Legendre nodes on `[0, 1]` with weights summing to 1.
fn gauss3<T: Real>() -> [(T, T); 3] {
    let a = T::lit(0.5) * T::lit(0.6).sqrt();
    let half = T::lit(0.5);
    [(half - a, T::lit(5.0 / 18.0)), (half, T::lit(8.0 / 18.0)), (half + a, T::lit(5.0 / 18.0))]
}

fn gauss2<T: Real>() -> [(T, T); 2] {
    let a = T::lit(0.5) / T::lit(3.0).sqrt();
    let half = T::lit(0.5);
    [(half - a, half), (half + a, half)]
}

/// `½ uᵀKu`.
pub fn dirichlet_energy<T: Real>(u: &[T], ops: &DiscreteOperators<T>) -> T {
    ops.k.quad(u) * T::lit(0.5)
}

/// `Σ_edges ∫ G(u_h) dσ`, exact for linear `u_h` on each edge.
pub fn boundary_potential<T: Real>(u: &[T], ops: &DiscreteOperators<T>) -> T {
    let rule = gauss3::<T>();
    ops.edges.iter().fold(T::zero(), |acc, e| {
        let (ua, ub) = (u[e.start], u[e.end]);
        let s = rule.iter().fold(T::zero(), |s, &(x, w)| s + w * Bistable::big_g(ua + (ub - ua) * x));
        acc + s * e.length
    })
}

/// `E(u) = ½ uᵀKu − λ Σ ∫ G(u_h) dσ`.
pub fn energy<T: Real>(u: &[T], lambda: T, ops: &DiscreteOperators<T>) -> Result<T> {
    check_len(ops.n(), u.len())?;
    Ok(dirichlet_energy(u, ops) - lambda * boundary_potential(u, ops))
}

/// `F_i = ∫_∂Ω g(u_h) φ_i dσ`, the gradient of the boundary potential.
pub fn reaction_load<T: Real>(u: &[T], ops: &DiscreteOperators<T>) -> Vec<T> {
    let rule = gauss3::<T>();
    let mut f = vec![T::zero(); u.len()];
    for e in &ops.edges {
        let (ua, ub) = (u[e.start], u[e.end]);
        let (mut fa, mut fb) = (T::zero(), T::zero());
        for &(x, w) in &rule {
            let g = Bistable::g(ua + (ub - ua) * x) * w;
            fa += g * (T::one() - x);
            fb += g * x;
        }
        f[e.start] += fa * e.length;
        f[e.end] += fb * e.length;
    }
    f
}

/// `J_ij = ∫_∂Ω g′(u_h) φ_i φ_j dσ`, the Jacobian of [`reaction_load`].
pub fn reaction_jacobian<T: Real>(u: &[T], ops: &DiscreteOperators<T>) -> CsrMatrix<T> {
    let rule = gauss3::<T>();
    let mut t = Vec::with_capacity(4 * ops.edges.len());
    for e in &ops.edges {
        let (ua, ub) = (u[e.start], u[e.end]);
        let mut j = [[T::zero(); 2]; 2];
        for &(x, w) in &rule {
            let d = Bistable::dg(ua + (ub - ua) * x) * w * e.length;
            let phi = [T::one() - x, x];
            for a in 0..2 {
                for b in 0..2 {
                    j[a][b] += d * phi[a] * phi[b];
                }
            }
        }
        let ids = [e.start, e.end];
        for a in 0..2 {
            for b in 0..2 {
                t.push((ids[a], ids[b], j[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(u.len(), u.len(), &t)
}

/// `∫_{S_j} v dσ` over the edges labeled `part`.
pub fn boundary_average<T: Real>(
    v: &[T],
    ops: &DiscreteOperators<T>,
    labels: &PartitionLabels<T>,
    part: BoundaryPart,
) -> Result<T> {
    check_len(ops.edges.len(), labels.labels.len())?;
    if !(labels.measure(part) > T::zero()) {
        return Err(Error::MeasureZero(part.to_string()));
    }
    let rule = gauss2::<T>();
    let mut total = T::zero();
    for (e, &l) in ops.edges.iter().zip(&labels.labels) {
        if l == part {
            let (va, vb) = (v[e.start], v[e.end]);
            total += rule.iter().fold(T::zero(), |s, &(x, w)| s + w * (va + (vb - va) * x)) * e.length;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::meshing::{mesh_domain, mesh_domain_aligned, Mesh};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn reference_element_matrices() {
        let k = element_stiffness([Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]);
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(k[i][j], want[i][j], 1e-15));
            }
        }
        let m = element_mass(0.3f64);
        assert!(close(m[0][0], 0.05, 1e-16) && close(m[0][1], 0.025, 1e-16));
        let b = edge_mass(0.6f64);
        assert!(close(b[0][0], 0.2, 1e-16) && close(b[1][0], 0.1, 1e-16));
    }

    #[test]
    fn nonlinearity_values() {
        assert_eq!(Bistable::big_g(1.0f64), 0.25);
        assert_eq!(Bistable::big_g(-1.0f64), 0.25);
        for u in [-1.0f64, 0.0, 1.0] {
            assert_eq!(Bistable::g(u), 0.0);
        }
        for i in 0..=200 {
            let u = -1.0 + i as f64 / 100.0;
            let g = Bistable::big_g(u);
            assert!((0.0..=0.25).contains(&g));
        }
    }

    #[test]
    fn operator_invariants_on_ellipse() {
        let (poly, mesh) = mesh_domain(&DomainSpec::ellipse(2.0f64, 1.0), 0.15).unwrap();
        let ops = assemble(&mesh).unwrap();
        assert!(ops.k.max_asymmetry() < 1e-14);
        assert!(ops.m.max_asymmetry() < 1e-14);
        assert!(ops.b.max_asymmetry() < 1e-14);
        let kone = ops.k.row_sums();
        assert!(kone.iter().all(|v| v.abs() < 1e-12));
        let bsum: f64 = ops.b.row_sums().iter().sum();
        assert!(close(bsum, poly.perimeter(), 1e-12));
        let msum: f64 = ops.m.row_sums().iter().sum();
        assert!(close(msum, poly.signed_area(), 1e-12));
        let x: Vec<f64> = mesh.vertices().iter().map(|p| p.x).collect();
        let y: Vec<f64> = mesh.vertices().iter().map(|p| p.y).collect();
        assert!(close(ops.k.quad(&x) / ops.area, 1.0, 1e-10));
        assert!(close(ops.k.bilinear(&x, &y), 0.0, 1e-10));
    }

    #[test]
    fn constant_energies() {
        let (_, mesh) = mesh_domain(&DomainSpec::stadium(1.0f64, 6.0), 0.2).unwrap();
        let ops = assemble(&mesh).unwrap();
        let n = mesh.n_vertices();
        let lambda = 1.7;
        let e1 = energy(&vec![1.0; n], lambda, &ops).unwrap();
        assert!(close(e1, -lambda * ops.perimeter / 4.0, 1e-12));
        assert_eq!(energy(&vec![0.0; n], lambda, &ops).unwrap(), 0.0);
        for c in [-0.9, -0.3, 0.5, 0.99] {
            assert!(e1 <= energy(&vec![c; n], lambda, &ops).unwrap());
        }
        assert!(matches!(energy(&vec![0.0; n - 1], lambda, &ops), Err(Error::Shape { .. })));
    }

    #[test]
    fn ramp_field_on_aligned_stadium() {
        let delta = 2.0;
        let spec = DomainSpec::stadium(1.0f64, 12.0);
        let (_, mesh) = mesh_domain_aligned(&spec, 0.2, &[-delta / 2.0, delta / 2.0]).unwrap();
        let ops = assemble(&mesh).unwrap();
        let w: Field<f64> = Field::from_fn(&mesh, |p| (2.0 * p.x / delta).clamp(-1.0, 1.0));
        assert!(close(dirichlet_energy(&w, &ops), 4.0 / delta, 1e-10));
        let labels = mesh.partition(delta).unwrap();
        let strip_potential: f64 = ops
            .edges
            .iter()
            .zip(&labels.labels)
            .filter(|(_, l)| **l == BoundaryPart::Strip)
            .map(|(e, _)| {
                let ops1 = DiscreteOperators { edges: vec![*e], ..ops.clone() };
                boundary_potential(&w, &ops1)
            })
            .sum();
        assert!(close(strip_potential, 7.0 / 30.0 * delta, 1e-10));
        let sl = boundary_average(&w, &ops, &labels, BoundaryPart::Left).unwrap();
        assert!(close(sl, -labels.measure_left, 1e-12));
        let ones = vec![1.0; mesh.n_vertices()];
        let sr = boundary_average(&ones, &ops, &labels, BoundaryPart::Right).unwrap();
        assert!(close(sr, labels.measure_right, 1e-12));
        let tot = boundary_average(&w, &ops, &labels, BoundaryPart::Left).unwrap()
            + boundary_average(&w, &ops, &labels, BoundaryPart::Right).unwrap();
        assert!(tot.abs() < 1e-12);
    }

    #[test]
    fn empty_part_is_measure_zero() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let mesh = Mesh::<f64>::new(v, vec![[0, 1, 2]]).unwrap();
        let ops = assemble(&mesh).unwrap();
        let labels = mesh.partition(100.0).unwrap();
        let err = boundary_average(&[0.0; 3], &ops, &labels, BoundaryPart::Left).unwrap_err();
        assert!(matches!(err, Error::MeasureZero(_)));
    }

    #[test]
    fn load_is_energy_gradient() {
        let (_, mesh) = mesh_domain(&DomainSpec::disk(1.0f64), 0.25).unwrap();
        let ops = assemble(&mesh).unwrap();
        let u: Vec<f64> = mesh.vertices().iter().map(|p| 0.7 * p.x - 0.4 * p.y * p.y + 0.1).collect();
        let f = reaction_load(&u, &ops);
        let j = reaction_jacobian(&u, &ops);
        let step = 1e-6;
        for &i in ops.boundary_index.iter().take(5) {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[i] += step;
            dn[i] -= step;
            let fd = (boundary_potential(&up, &ops) - boundary_potential(&dn, &ops)) / (2.0 * step);
            assert!(close(fd, f[i], 1e-8));
            let (fu, fdn) = (reaction_load(&up, &ops), reaction_load(&dn, &ops));
            for &k in &ops.boundary_index {
                assert!(close((fu[k] - fdn[k]) / (2.0 * step), j.get(k, i), 1e-7));
            }
        }
        // constants reduce to B·g(c)
        let c = vec![0.3; u.len()];
        let fc = reaction_load(&c, &ops);
        let bg = ops.b.mul_vec(&vec![Bistable::g(0.3); u.len()]);
        assert!(fc.iter().zip(&bg).all(|(a, b)| close(*a, *b, 1e-14)));
    }

    #[test]
    fn single_precision_assembly() {
        let (_, mesh) = mesh_domain(&DomainSpec::disk(1.0f32), 0.2).unwrap();
        let ops = assemble(&mesh).unwrap();
        let s: f32 = ops.k.row_sums().iter().map(|v| v.abs()).sum();
        assert!(s < 1e-3);
    }
}
