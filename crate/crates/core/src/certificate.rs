//! Pattern certificates: the closed-form recipe and the computed membership test.

use rayon::prelude::*;

use crate::assembly::{
    assemble, boundary_average, energy, reaction_load, Bistable, DiscreteOperators, Field,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    check_partition_delta, clip_halfplane, BoundaryPart, BoundaryPolygon, DomainSpec, PartitionLabels, Side,
};
use crate::meshing::{mesh_domain_aligned, triangulate, Mesh};
use crate::scalar::{norm_inf, Real};
use crate::steklov::steklov_spectrum;

/// `G(1)`.
pub fn g_one<T: Real>() -> T {
    Bistable::big_g(T::one())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Closes,
    FailsDiscriminant,
}

/// Closed-form recipe for a stadium-like domain of cap radius `r`.
///
/// `window` holds the roots of `4cδ² − (cd + 2cr)δ + 16rd`; `window_sufficient`
/// the roots of `cδ² − (cd − 2cr)δ + 16rd`, which is what the sufficient
/// inequality `c/4 ≥ 4r/δ + (c/4d)(δ + 2r)` reduces to after clearing
/// denominators. They overlap only partially, so both are reported.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCertificate<T> {
    pub r: T,
    pub d: T,
    pub c: T,
    pub lambda: T,
    pub discriminant: T,
    pub window: Option<(T, T)>,
    /// Vertex of the recipe quadratic.
    pub delta_star: T,
    /// `2d + 2δ*`.
    pub diameter: T,
    pub verdict: Verdict,
    pub discriminant_sufficient: T,
    pub window_sufficient: Option<(T, T)>,
    /// `c/4 − 4r/δ* − (c/4d)(δ* + 2r)`.
    pub margin_sufficient: T,
}

impl<T: Real> BoundCertificate<T> {
    /// Slack of the sufficient inequality at `δ`.
    pub fn sufficient_margin_at(&self, delta: T) -> T {
        sufficient_inequality_margin(self.r, self.d, self.c, delta)
    }

    pub fn delta_star_is_sufficient(&self) -> bool {
        self.margin_sufficient >= T::zero()
    }
}

pub fn sufficient_inequality_margin<T: Real>(r: T, d: T, c: T, delta: T) -> T {
    let four = T::lit(4.0);
    c / four - four * r / delta - c / (four * d) * (delta + r + r)
}

fn roots<T: Real>(a: T, b: T, disc: T) -> Option<(T, T)> {
    // a x² − b x + …, b > 0
    (disc > T::zero()).then(|| {
        let s = disc.sqrt();
        ((b - s) / (a + a), (b + s) / (a + a))
    })
}

pub fn recipe_bound_mode<T: Real>(r: T, d: T, c: T) -> Result<BoundCertificate<T>> {
    if !(r > T::zero()) || !(c > T::zero()) {
        return Err(invalid(format!("r = {r} and c = {c} must be positive")));
    }
    if !(d > T::lit(4.0) * r) {
        return Err(invalid(format!("the recipe assumes d > 4r; got d = {d}, r = {r}")));
    }
    let two = T::lit(2.0);
    let linear = c * d + two * c * r;
    let discriminant = linear * linear - T::lit(256.0) * c * r * d;
    let window = roots(T::lit(4.0) * c, linear, discriminant);
    let delta_star = linear / (T::lit(8.0) * c);
    let linear_sufficient = c * d - two * c * r;
    let discriminant_sufficient = linear_sufficient * linear_sufficient - T::lit(64.0) * c * r * d;
    let window_sufficient = if linear_sufficient > T::zero() { roots(c, linear_sufficient, discriminant_sufficient) } else { None };
    Ok(BoundCertificate {
        r,
        d,
        c,
        lambda: c / (two * d),
        discriminant,
        window,
        delta_star,
        diameter: two * d + two * delta_star,
        verdict: if discriminant > T::zero() { Verdict::Closes } else { Verdict::FailsDiscriminant },
        discriminant_sufficient,
        window_sufficient,
        margin_sufficient: sufficient_inequality_margin(r, d, c, delta_star),
    })
}

/// Nodal ramp `clamp(2x/δ, −1, 1)`.
pub fn build_w0<T: Real>(mesh: &Mesh<T>, delta: T) -> Field<T> {
    let s = T::lit(2.0) / delta;
    Field::from_fn(mesh, |p| (p.x * s).max(-T::one()).min(T::one()))
}

/// `G(1)·min{ℋ¹(S_l)·min{λ, μ_l}, ℋ¹(S_r)·min{λ, μ_r}}`.
pub fn epsilon0<T: Real>(lambda: T, h_left: T, h_right: T, mu_left: T, mu_right: T) -> Result<T> {
    if !(h_left > T::zero()) {
        return Err(Error::MeasureZero(BoundaryPart::Left.to_string()));
    }
    if !(h_right > T::zero()) {
        return Err(Error::MeasureZero(BoundaryPart::Right.to_string()));
    }
    if !(lambda > T::zero() && mu_left > T::zero() && mu_right > T::zero()) {
        return Err(invalid("lambda and subdomain eigenvalues must be positive"));
    }
    let left = h_left * lambda.min(mu_left);
    let right = h_right * lambda.min(mu_right);
    Ok(g_one::<T>() * left.min(right))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubdomainSpectra<T> {
    pub mu_left: T,
    pub mu_right: T,
    pub n_vertices_left: usize,
    pub n_vertices_right: usize,
}

/// `μ₁` of `{x < −δ}` and `{x > δ}`, cut straight and remeshed at `h`.
pub fn subdomain_spectra<T: Real>(polygon: &BoundaryPolygon<T>, delta: T, h: T) -> Result<SubdomainSpectra<T>> {
    let left = clip_halfplane(polygon, -delta, Side::Left)?;
    let right = clip_halfplane(polygon, delta, Side::Right)?;
    let run = |p: &BoundaryPolygon<T>| -> Result<(T, usize)> {
        let mesh = triangulate(p, h)?;
        let mu = steklov_spectrum(&assemble(&mesh)?, 2)?.mu1();
        Ok((mu, mesh.n_vertices()))
    };
    let ((mu_left, n_vertices_left), (mu_right, n_vertices_right)) = (run(&left)?, run(&right)?);
    Ok(SubdomainSpectra { mu_left, mu_right, n_vertices_left, n_vertices_right })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipReport<T> {
    pub bounds_ok: bool,
    pub sign_l: T,
    pub sign_r: T,
    pub energy: T,
    pub measure_left: T,
    pub measure_right: T,
    pub epsilon0: T,
    /// `ε₀ − λ G(1) ℋ¹(∂Ω)`.
    pub threshold: T,
    /// `ε₀ − G(1) ℋ¹(∂Ω)`, reported for comparison only.
    pub threshold_lambda_free: T,
    pub margin: T,
    pub member: bool,
}

pub fn check_membership<T: Real>(
    ops: &DiscreteOperators<T>,
    labels: &PartitionLabels<T>,
    v: &[T],
    lambda: T,
    spectra: &SubdomainSpectra<T>,
) -> Result<MembershipReport<T>> {
    let bounds_ok = v.iter().all(|&x| x >= -T::one() && x <= T::one());
    let sign_l = boundary_average(v, ops, labels, BoundaryPart::Left)?;
    let sign_r = boundary_average(v, ops, labels, BoundaryPart::Right)?;
    let e = energy(v, lambda, ops)?;
    let eps0 = epsilon0(lambda, labels.measure_left, labels.measure_right, spectra.mu_left, spectra.mu_right)?;
    let threshold = eps0 - lambda * g_one::<T>() * ops.perimeter;
    let threshold_lambda_free = eps0 - g_one::<T>() * ops.perimeter;
    let margin = threshold - e;
    Ok(MembershipReport {
        bounds_ok,
        sign_l,
        sign_r,
        energy: e,
        measure_left: labels.measure_left,
        measure_right: labels.measure_right,
        epsilon0: eps0,
        threshold,
        threshold_lambda_free,
        margin,
        member: bounds_ok && sign_l < T::zero() && sign_r > T::zero() && e < threshold,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchPoint<T> {
    pub delta: T,
    pub lambda: T,
    pub mu_left: Option<T>,
    pub mu_right: Option<T>,
    pub report: Option<MembershipReport<T>>,
    /// Why `report` is missing.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult<T> {
    /// `δ`-major, in grid order.
    pub table: Vec<SearchPoint<T>>,
    /// Index into `table` of the largest margin.
    pub best: Option<usize>,
}

impl<T: Real> SearchResult<T> {
    pub fn best_point(&self) -> Option<&SearchPoint<T>> {
        self.best.map(|i| &self.table[i])
    }
}

struct DeltaSetup<T: Real> {
    ops: DiscreteOperators<T>,
    labels: PartitionLabels<T>,
    w0: Field<T>,
    spectra: SubdomainSpectra<T>,
}

fn setup_delta<T: Real>(spec: &DomainSpec<T>, delta: T, h: T) -> Result<DeltaSetup<T>> {
    let (polygon, mesh, ops, labels) = aligned_setup(spec, delta, h)?;
    let w0 = build_w0(&mesh, delta);
    let spectra = subdomain_spectra(&polygon, delta, h)?;
    Ok(DeltaSetup { ops, labels, w0, spectra })
}

/// Evaluates `w₀(δ)` membership over the `(δ, λ)` grid.
///
/// Meshes are aligned with `x = ±δ/2` so `w₀` is represented exactly.
pub fn computed_mode_search<T: Real>(spec: &DomainSpec<T>, deltas: &[T], lambdas: &[T], h: T) -> Result<SearchResult<T>> {
    if deltas.is_empty() || lambdas.is_empty() {
        return Err(invalid("delta and lambda grids must be nonempty"));
    }
    let rows: Vec<Vec<SearchPoint<T>>> = deltas
        .par_iter()
        .map(|&delta| match setup_delta(spec, delta, h) {
            Ok(s) => lambdas
                .iter()
                .map(|&lambda| {
                    let (report, error) = match check_membership(&s.ops, &s.labels, &s.w0, lambda, &s.spectra) {
                        Ok(r) => (Some(r), None),
                        Err(e) => (None, Some(e.to_string())),
                    };
                    SearchPoint {
                        delta,
                        lambda,
                        mu_left: Some(s.spectra.mu_left),
                        mu_right: Some(s.spectra.mu_right),
                        report,
                        error,
                    }
                })
                .collect(),
            Err(e) => lambdas
                .iter()
                .map(|&lambda| SearchPoint {
                    delta,
                    lambda,
                    mu_left: None,
                    mu_right: None,
                    report: None,
                    error: Some(e.to_string()),
                })
                .collect(),
        })
        .collect();
    let table: Vec<SearchPoint<T>> = rows.into_iter().flatten().collect();
    let mut best: Option<usize> = None;
    for (i, p) in table.iter().enumerate() {
        let Some(r) = &p.report else { continue };
        let better = match best.and_then(|b| table[b].report.as_ref().map(|rb| (b, rb))) {
            None => true,
            Some((b, rb)) => {
                let pb = &table[b];
                r.margin > rb.margin
                    || (r.margin == rb.margin
                        && (p.delta < pb.delta || (p.delta == pb.delta && p.lambda < pb.lambda)))
            }
        };
        if better {
            best = Some(i);
        }
    }
    Ok(SearchResult { table, best })
}

/// Membership of `w₀(δ)` at a single `(δ, λ)`.
pub fn membership_of_w0<T: Real>(spec: &DomainSpec<T>, delta: T, lambda: T, h: T) -> Result<MembershipReport<T>> {
    let s = setup_delta(spec, delta, h)?;
    check_membership(&s.ops, &s.labels, &s.w0, lambda, &s.spectra)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxStop {
    Converged,
    SignFlip,
    IterationCap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxMinimization<T> {
    pub field: Vec<T>,
    pub energy: T,
    pub iterations: usize,
    pub stop: BoxStop,
}

pub const BOX_TOLERANCE: f64 = 1e-8;

/// Projected, diagonally preconditioned gradient descent on `E` over
/// `[−1, 1]^n` with Armijo backtracking. A step that would make
/// `∫_{S_l} u ≥ 0` or `∫_{S_r} u ≤ 0` is rejected and ends the descent.
pub fn minimize_energy_box<T: Real>(
    ops: &DiscreteOperators<T>,
    lambda: T,
    labels: &PartitionLabels<T>,
    initial: &[T],
    max_iterations: usize,
) -> Result<BoxMinimization<T>> {
    let signs_hold = |u: &[T]| -> Result<bool> {
        Ok(boundary_average(u, ops, labels, BoundaryPart::Left)? < T::zero()
            && boundary_average(u, ops, labels, BoundaryPart::Right)? > T::zero())
    };
    if !signs_hold(initial)? {
        return Err(invalid("initial field violates the boundary sign conditions"));
    }
    let one = T::one();
    let precond: Vec<T> = ops
        .k
        .diagonal()
        .iter()
        .zip(ops.b.diagonal())
        .map(|(&k, b)| one / (k + T::lit(2.0) * lambda * b))
        .collect();
    let mut u: Vec<T> = initial.iter().map(|&x| x.max(-one).min(one)).collect();
    let mut e = energy(&u, lambda, ops)?;
    let mut alpha = one;
    for it in 0..max_iterations {
        let ku = ops.k.mul_vec(&u);
        let f = reaction_load(&u, ops);
        let grad: Vec<T> = ku.iter().zip(&f).map(|(&a, &b)| a - lambda * b).collect();
        let projected: Vec<T> = (0..u.len())
            .map(|i| {
                let blocked = (u[i] <= -one && grad[i] > T::zero()) || (u[i] >= one && grad[i] < T::zero());
                if blocked {
                    T::zero()
                } else {
                    grad[i] * precond[i]
                }
            })
            .collect();
        if norm_inf(&projected) < T::lit(BOX_TOLERANCE) {
            return Ok(BoxMinimization { field: u, energy: e, iterations: it, stop: BoxStop::Converged });
        }
        let mut accepted = None;
        alpha = (alpha * T::lit(2.0)).min(one);
        while alpha > T::lit(1e-12) {
            let trial: Vec<T> =
                u.iter().zip(&projected).map(|(&x, &p)| (x - alpha * p).max(-one).min(one)).collect();
            let decrease = trial.iter().zip(&u).zip(&grad).fold(T::zero(), |s, ((&t, &x), &g)| s + g * (t - x));
            let et = energy(&trial, lambda, ops)?;
            if et <= e + T::lit(1e-4) * decrease {
                accepted = Some((trial, et));
                break;
            }
            alpha *= T::lit(0.5);
        }
        let Some((trial, et)) = accepted else {
            return Ok(BoxMinimization { field: u, energy: e, iterations: it, stop: BoxStop::Converged });
        };
        if !signs_hold(&trial)? {
            return Ok(BoxMinimization { field: u, energy: e, iterations: it, stop: BoxStop::SignFlip });
        }
        u = trial;
        e = et;
    }
    Ok(BoxMinimization { field: u, energy: e, iterations: max_iterations, stop: BoxStop::IterationCap })
}

/// Meshes `spec` aligned with `x = ±δ/2` and returns the pieces the
/// membership test needs.
pub fn aligned_setup<T: Real>(
    spec: &DomainSpec<T>,
    delta: T,
    h: T,
) -> Result<(BoundaryPolygon<T>, Mesh<T>, DiscreteOperators<T>, PartitionLabels<T>)> {
    let half = delta * T::lit(0.5);
    let (polygon, mesh) = mesh_domain_aligned(spec, h, &[-half, half])?;
    check_partition_delta(&polygon, delta)?;
    let ops = assemble(&mesh)?;
    let labels = mesh.partition(delta)?;
    Ok((polygon, mesh, ops, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::dirichlet_energy;

    #[test]
    fn recipe_reference_case() {
        let cert = recipe_bound_mode(1.0f64, 300.0, 1.0).unwrap();
        assert_eq!(cert.discriminant, 14404.0);
        let s = 14404f64.sqrt();
        let (lo, hi) = cert.window.unwrap();
        assert!((lo - (302.0 - s) / 8.0).abs() < 1e-12);
        assert!((hi - (302.0 + s) / 8.0).abs() < 1e-12);
        assert!((lo - 22.748).abs() < 1e-3 && (hi - 52.752).abs() < 1e-3);
        assert!((cert.lambda - 1.0 / 600.0).abs() < 1e-15);
        assert_eq!(cert.verdict, Verdict::Closes);
        assert!(cert.delta_star_is_sufficient());
    }

    #[test]
    fn recipe_failing_discriminant_and_precondition() {
        let cert = recipe_bound_mode(1.0f64, 100.0, 1.0).unwrap();
        assert!(cert.discriminant < 0.0);
        assert_eq!(cert.verdict, Verdict::FailsDiscriminant);
        assert!(cert.window.is_none());
        assert!(recipe_bound_mode(1.0f64, 4.0, 1.0).is_err());
    }

    #[test]
    fn recipe_window_can_miss_the_inequality_for_large_c() {
        let cert = recipe_bound_mode(1.0f64, 5.0, 30.0).unwrap();
        assert_eq!(cert.verdict, Verdict::Closes);
        let (lo, hi) = cert.window.unwrap();
        assert!(cert.sufficient_margin_at(0.5 * (lo + hi)) < 0.0);
    }

    #[test]
    fn w0_values() {
        let v = vec![
            crate::geometry::Point::new(0.0, 0.3),
            crate::geometry::Point::new(-2.0, 0.0),
            crate::geometry::Point::new(0.5, 1.0),
        ];
        let mesh = Mesh::<f64>::new(v, vec![[1, 0, 2]]).unwrap();
        let w = build_w0(&mesh, 2.0);
        assert_eq!(&w[..], &[0.0, -1.0, 0.5]);
    }

    #[test]
    fn epsilon0_cases() {
        let c = 0.7f64;
        let d = 20.0;
        let l = c / (2.0 * d);
        assert!((epsilon0(l, 2.0 * d, 2.0 * d, l, l).unwrap() - c / 4.0).abs() < 1e-15);
        assert_eq!(epsilon0(1.0f64, 10.0, 20.0, 0.5, 0.5).unwrap(), 1.25);
        assert_eq!(epsilon0(1.0f64, 20.0, 10.0, 0.5, 0.5).unwrap(), 1.25);
        assert!(matches!(epsilon0(1.0f64, 0.0, 10.0, 0.5, 0.5), Err(Error::MeasureZero(_))));
    }

    #[test]
    fn membership_branches_on_stadium() {
        let spec = DomainSpec::stadium(1.0f64, 10.0);
        let delta = 2.0;
        let (polygon, mesh, ops, labels) = aligned_setup(&spec, delta, 0.2).unwrap();
        let spectra = subdomain_spectra(&polygon, delta, 0.2).unwrap();
        let n = mesh.n_vertices();
        let ones = check_membership(&ops, &labels, &vec![1.0; n], 1.0, &spectra).unwrap();
        assert!(ones.sign_l > 0.0 && !ones.member);
        let w0 = build_w0(&mesh, delta);
        let rw = check_membership(&ops, &labels, &w0, 1.0, &spectra).unwrap();
        assert!(rw.bounds_ok && rw.sign_l < 0.0 && rw.sign_r > 0.0);
        assert!((rw.sign_l + labels.measure_left).abs() < 1e-12);
        assert!((dirichlet_energy(&w0, &ops) - 4.0 / delta).abs() < 1e-10);
        let zero = check_membership(&ops, &labels, &vec![0.0; n], 0.5, &spectra).unwrap();
        assert_eq!(zero.energy, 0.0);
        assert!((zero.threshold - (zero.epsilon0 - 0.5 * ops.perimeter / 4.0)).abs() < 1e-12);
        assert_eq!(zero.member, 0.0 < zero.threshold);
    }

    #[test]
    fn search_single_point_and_ordering() {
        let spec = DomainSpec::stadium(1.0f64, 8.0);
        let one = computed_mode_search(&spec, &[1.0], &[0.5], 0.2).unwrap();
        assert_eq!(one.table.len(), 1);
        assert_eq!(one.best, Some(0));
        assert!(computed_mode_search(&spec, &[], &[0.5], 0.2).is_err());
    }

    #[test]
    fn box_descent_decreases_energy() {
        let spec = DomainSpec::stadium(1.0f64, 8.0);
        let delta = 2.0;
        let (_, mesh, ops, labels) = aligned_setup(&spec, delta, 0.25).unwrap();
        let w0 = build_w0(&mesh, delta);
        let e0 = energy(&w0, 1.0, &ops).unwrap();
        let out = minimize_energy_box(&ops, 1.0, &labels, &w0, 200).unwrap();
        assert!(out.energy <= e0);
        assert!(out.field.iter().all(|x| x.abs() <= 1.0));
    }
}
