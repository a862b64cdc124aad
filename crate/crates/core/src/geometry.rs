//! Convex planar domains: construction, polygonization, measurement, clipping
//! and the three-way boundary partition around the central strip.
//!
//! Every built-in domain is centred at the origin with its longest axis along
//! `x`. Boundary curves are parametrized by arclength starting at the
//! rightmost point on the `x` axis and running counterclockwise.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::{Point2, Vector2};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub type Point<T> = Point2<T>;

/// Built-in convex domain families.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec<T> {
    /// Two semicircles of radius `radius` capping a rectangle of length `diameter − 2·radius`.
    Stadium { radius: T, diameter: T },
    Ellipse { semi_major: T, semi_minor: T },
    RoundedRectangle { width: T, height: T, corner_radius: T },
    PolygonFile { path: PathBuf },
}

impl<T: Real> DomainSpec<T> {
    pub fn stadium(radius: T, diameter: T) -> Self {
        Self::Stadium { radius, diameter }
    }

    /// The disk of radius `r`, i.e. the degenerate stadium with `D = 2r`.
    pub fn disk(radius: T) -> Self {
        Self::Stadium { radius, diameter: radius + radius }
    }

    pub fn ellipse(semi_major: T, semi_minor: T) -> Self {
        Self::Ellipse { semi_major, semi_minor }
    }

    pub fn rounded_rectangle(width: T, height: T, corner_radius: T) -> Self {
        Self::RoundedRectangle { width, height, corner_radius }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        match self {
            Self::Stadium { radius, diameter } => {
                if !(*radius > zero) {
                    return Err(invalid(format!("stadium radius must be positive, got {radius}")));
                }
                if *diameter < *radius + *radius {
                    return Err(invalid(format!(
                        "stadium requires D >= 2r, got r = {radius}, D = {diameter}"
                    )));
                }
            }
            Self::Ellipse { semi_major, semi_minor } => {
                if !(*semi_minor > zero) || semi_major < semi_minor {
                    return Err(invalid(format!(
                        "ellipse requires a >= b > 0, got a = {semi_major}, b = {semi_minor}"
                    )));
                }
            }
            Self::RoundedRectangle { width, height, corner_radius } => {
                if !(*height > zero) || width < height {
                    return Err(invalid(format!(
                        "rounded rectangle requires width >= height > 0, got {width} x {height}"
                    )));
                }
                if *corner_radius < zero || *corner_radius > height.min(*width) * T::lit(0.5) {
                    return Err(invalid(format!(
                        "corner radius {corner_radius} outside [0, min(width, height)/2]"
                    )));
                }
            }
            Self::PolygonFile { path } => {
                if !path.exists() {
                    return Err(invalid(format!("polygon file {} does not exist", path.display())));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Piece<T: Real> {
    Line { from: Point<T>, to: Point<T> },
    Arc { center: Point<T>, radius: T, start: T },
    Ellipse(EllipseArc<T>),
}

/// Full ellipse `(a cos θ, b sin θ)` with a cumulative arclength table.
#[derive(Clone, Debug)]
struct EllipseArc<T: Real> {
    a: T,
    b: T,
    nodes: Vec<T>,
    cumulative: Vec<T>,
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

impl<T: Real> EllipseArc<T> {
    fn new(a: T, b: T) -> Self {
        let panels = 2048;
        let two_pi = T::two_pi();
        let nodes: Vec<T> =
            (0..=panels).map(|k| two_pi * T::from_usize_lossy(k) / T::from_usize_lossy(panels)).collect();
        let mut cumulative = vec![T::zero(); panels + 1];
        for k in 0..panels {
            cumulative[k + 1] = cumulative[k] + Self::speed_integral(a, b, nodes[k], nodes[k + 1]);
        }
        Self { a, b, nodes, cumulative }
    }

    fn speed(a: T, b: T, t: T) -> T {
        let (s, c) = t.sin_cos();
        (a * a * s * s + b * b * c * c).sqrt()
    }

    fn speed_integral(a: T, b: T, lo: T, hi: T) -> T {
        let half = (hi - lo) * T::lit(0.5);
        let mid = (hi + lo) * T::lit(0.5);
        GL5_NODES
            .iter()
            .zip(GL5_WEIGHTS)
            .fold(T::zero(), |acc, (&x, w)| acc + T::lit(w) * Self::speed(a, b, mid + half * T::lit(x)))
            * half
    }

    fn length(&self) -> T {
        *self.cumulative.last().unwrap()
    }

    fn angle_at(&self, s: T) -> T {
        let k = match self.cumulative.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(k) => return self.nodes[k],
            Err(k) => k.saturating_sub(1).min(self.nodes.len() - 2),
        };
        let (lo, base) = (self.nodes[k], self.cumulative[k]);
        let mut t = lo + (s - base) / Self::speed(self.a, self.b, lo);
        for _ in 0..8 {
            let f = base + Self::speed_integral(self.a, self.b, lo, t) - s;
            t -= f / Self::speed(self.a, self.b, t);
        }
        t
    }
}

impl<T: Real> Piece<T> {
    fn length(&self, arc_span: T) -> T {
        match self {
            Piece::Line { from, to } => (to - from).norm(),
            Piece::Arc { radius, .. } => *radius * arc_span,
            Piece::Ellipse(e) => e.length(),
        }
    }
}

/// Closed convex boundary curve parametrized by arclength.
#[derive(Clone, Debug)]
pub struct BoundaryCurve<T: Real> {
    pieces: Vec<(Piece<T>, T)>,
    offsets: Vec<T>,
    perimeter: T,
}

impl<T: Real> BoundaryCurve<T> {
    fn from_pieces(raw: Vec<(Piece<T>, T)>) -> Self {
        let pieces: Vec<_> = raw.into_iter().filter(|(p, span)| p.length(*span) > T::zero()).collect();
        let mut offsets = Vec::with_capacity(pieces.len());
        let mut acc = T::zero();
        for (p, span) in &pieces {
            offsets.push(acc);
            acc += p.length(*span);
        }
        Self { pieces, offsets, perimeter: acc }
    }

    pub fn perimeter(&self) -> T {
        self.perimeter
    }

    /// Point at arclength `s`, taken modulo the perimeter.
    pub fn point_at(&self, s: T) -> Point<T> {
        let mut s = s % self.perimeter;
        if s < T::zero() {
            s += self.perimeter;
        }
        let k = match self.offsets.binary_search_by(|o| o.partial_cmp(&s).unwrap()) {
            Ok(k) => k,
            Err(k) => k - 1,
        };
        let local = s - self.offsets[k];
        match &self.pieces[k].0 {
            Piece::Line { from, to } => {
                let len = (to - from).norm();
                from + (to - from) * (local / len)
            }
            Piece::Arc { center, radius, start } => {
                let t = *start + local / *radius;
                Point::new(center.x + *radius * t.cos(), center.y + *radius * t.sin())
            }
            Piece::Ellipse(e) => {
                let t = e.angle_at(local);
                Point::new(e.a * t.cos(), e.b * t.sin())
            }
        }
    }
}

/// Builds the boundary curve of a domain.
///
/// ```
/// use steklov_patterns::geometry::{make_domain, DomainSpec};
/// let c = make_domain(&DomainSpec::stadium(1.0f64, 10.0)).unwrap();
/// assert!((c.perimeter() - (16.0 + 2.0 * std::f64::consts::PI)).abs() < 1e-12);
/// ```
pub fn make_domain<T: Real>(spec: &DomainSpec<T>) -> Result<BoundaryCurve<T>> {
    spec.validate()?;
    let half = T::lit(0.5);
    let pi = T::pi();
    let quarter = T::frac_pi_2();
    let p = |x: T, y: T| Point::new(x, y);
    let arc = |cx: T, cy: T, r: T, start: T, span: T| (Piece::Arc { center: p(cx, cy), radius: r, start }, span);
    let line = |a: Point<T>, b: Point<T>| (Piece::Line { from: a, to: b }, T::zero());
    let curve = match spec {
        DomainSpec::Stadium { radius: r, diameter } => {
            let l = (*diameter - *r - *r) * half;
            let r = *r;
            BoundaryCurve::from_pieces(vec![
                arc(l, T::zero(), r, T::zero(), quarter),
                line(p(l, r), p(-l, r)),
                arc(-l, T::zero(), r, quarter, pi),
                line(p(-l, -r), p(l, -r)),
                arc(l, T::zero(), r, quarter * T::lit(3.0), quarter),
            ])
        }
        DomainSpec::Ellipse { semi_major, semi_minor } => BoundaryCurve::from_pieces(vec![(
            Piece::Ellipse(EllipseArc::new(*semi_major, *semi_minor)),
            T::zero(),
        )]),
        DomainSpec::RoundedRectangle { width, height, corner_radius: rc } => {
            let (hx, hy, rc) = (*width * half, *height * half, *rc);
            let (ix, iy) = (hx - rc, hy - rc);
            BoundaryCurve::from_pieces(vec![
                line(p(hx, T::zero()), p(hx, iy)),
                arc(ix, iy, rc, T::zero(), quarter),
                line(p(ix, hy), p(-ix, hy)),
                arc(-ix, iy, rc, quarter, quarter),
                line(p(-hx, iy), p(-hx, -iy)),
                arc(-ix, -iy, rc, pi, quarter),
                line(p(-ix, -hy), p(ix, -hy)),
                arc(ix, -iy, rc, quarter * T::lit(3.0), quarter),
                line(p(hx, -iy), p(hx, T::zero())),
            ])
        }
        DomainSpec::PolygonFile { path } => {
            let poly = read_polygon_file::<T>(path)?;
            let v = poly.vertices();
            BoundaryCurve::from_pieces(
                (0..v.len()).map(|i| line(v[i], v[(i + 1) % v.len()])).collect(),
            )
        }
    };
    Ok(curve)
}

/// `n` points equidistributed by arclength, starting at arclength zero.
pub fn sample_arclength<T: Real>(curve: &BoundaryCurve<T>, n: usize) -> Vec<Point<T>> {
    let step = curve.perimeter() / T::from_usize_lossy(n);
    (0..n).map(|k| curve.point_at(step * T::from_usize_lossy(k))).collect()
}

/// Smallest vertex count accepted by [`polygonize`].
pub const MIN_POLYGON_VERTICES: usize = 16;

pub fn polygonize<T: Real>(curve: &BoundaryCurve<T>, n: usize) -> Result<BoundaryPolygon<T>> {
    if n < MIN_POLYGON_VERTICES {
        return Err(invalid(format!(
            "polygonization needs at least {MIN_POLYGON_VERTICES} vertices, got {n}"
        )));
    }
    BoundaryPolygon::new(sample_arclength(curve, n))
}

/// Counterclockwise convex polygon, closed implicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPolygon<T: Real> {
    vertices: Vec<Point<T>>,
}

#[inline]
fn cross<T: Real>(a: Vector2<T>, b: Vector2<T>) -> T {
    a.x * b.y - a.y * b.x
}

impl<T: Real> BoundaryPolygon<T> {
    /// Validates orientation, distinctness and convexity.
    pub fn new(vertices: Vec<Point<T>>) -> Result<Self> {
        let poly = Self::from_vertices_unchecked(vertices)?;
        poly.check_convex()?;
        Ok(poly)
    }

    /// Validates orientation and distinctness only; convexity is left to
    /// [`BoundaryPolygon::check_convex`].
    pub fn from_vertices_unchecked(vertices: Vec<Point<T>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(invalid(format!("polygon needs at least 3 vertices, got {}", vertices.len())));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(invalid("polygon has non-finite coordinates"));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(invalid(format!("repeated vertex at index {i}")));
            }
        }
        let poly = Self { vertices };
        if !(poly.signed_area() > T::zero()) {
            return Err(invalid("polygon must be counterclockwise with positive area"));
        }
        Ok(poly)
    }

    pub fn check_convex(&self) -> Result<()> {
        let v = &self.vertices;
        let n = v.len();
        let mut turning = T::zero();
        for i in 0..n {
            let e0 = v[(i + 1) % n] - v[i];
            let e1 = v[(i + 2) % n] - v[(i + 1) % n];
            let c = cross(e0, e1);
            if c < -T::lit(1e-10) * e0.norm() * e1.norm() {
                return Err(Error::NotConvex(format!("reflex vertex at index {}", (i + 1) % n)));
            }
            turning += c.atan2(e0.dot(&e1));
        }
        if (turning - T::two_pi()).abs() > T::lit(1e-6) {
            return Err(Error::NotConvex("boundary winds more than once".into()));
        }
        Ok(())
    }

    pub fn is_convex(&self) -> bool {
        self.check_convex().is_ok()
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` pairs in counterclockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Point<T>, Point<T>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> T {
        self.edges().fold(T::zero(), |acc, (a, b)| acc + a.x * b.y - b.x * a.y) * T::lit(0.5)
    }

    pub fn perimeter(&self) -> T {
        self.edges().fold(T::zero(), |acc, (a, b)| acc + (b - a).norm())
    }

    pub fn vertex_centroid(&self) -> Point<T> {
        let n = T::from_usize_lossy(self.vertices.len());
        let s = self.vertices.iter().fold(Vector2::zeros(), |acc, p| acc + p.coords);
        Point::from(s / n)
    }

    /// Minimum over edges of the inward distance to the edge line; positive
    /// exactly in the interior of a convex polygon.
    pub fn signed_distance(&self, p: &Point<T>) -> T {
        self.edges()
            .map(|(a, b)| {
                let e = b - a;
                cross(e, p - a) / e.norm()
            })
            .fold(T::max_value().unwrap(), |m, d| m.min(d))
    }

    pub fn x_range(&self) -> (T, T) {
        self.vertices.iter().fold((T::max_value().unwrap(), T::min_value().unwrap()), |(lo, hi), p| {
            (lo.min(p.x), hi.max(p.x))
        })
    }

    /// Applies `p ↦ s·p`.
    pub fn scaled(&self, s: T) -> Result<Self> {
        Self::new(self.vertices.iter().map(|p| Point::new(p.x * s, p.y * s)).collect())
    }
}

impl<T: Real> fmt::Display for BoundaryPolygon<T> {
    /// Polygon file layout: vertex count, then one `x y` line per vertex.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.vertices.len())?;
        for p in &self.vertices {
            writeln!(f, "{} {}", p.x, p.y)?;
        }
        Ok(())
    }
}

pub fn parse_polygon<T: Real>(text: &str) -> Result<BoundaryPolygon<T>> {
    let fmt_err = |detail: String| Error::Format { entity: "polygon file".into(), detail };
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let n: usize = lines
        .next()
        .ok_or_else(|| fmt_err("missing vertex count".into()))?
        .parse()
        .map_err(|_| fmt_err("vertex count is not an integer".into()))?;
    let mut vertices = Vec::with_capacity(n);
    for k in 0..n {
        let line = lines.next().ok_or_else(|| fmt_err(format!("missing vertex {k}")))?;
        let mut it = line.split_whitespace().map(|t| t.parse::<T>());
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => vertices.push(Point::new(x, y)),
            _ => return Err(fmt_err(format!("vertex {k}: expected \"x y\", got {line:?}"))),
        }
    }
    if lines.next().is_some() {
        return Err(fmt_err(format!("more than {n} vertex lines")));
    }
    BoundaryPolygon::new(vertices)
}

pub fn read_polygon_file<T: Real>(path: &Path) -> Result<BoundaryPolygon<T>> {
    parse_polygon(&std::fs::read_to_string(path)?)
}

pub fn write_polygon_file<T: Real>(polygon: &BoundaryPolygon<T>, path: &Path) -> Result<()> {
    std::fs::write(path, polygon.to_string())?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryReport<T: Real> {
    pub inradius: T,
    /// Centre of a largest inscribed disk.
    pub incenter: Point<T>,
    pub diameter: T,
    pub perimeter: T,
    pub area: T,
    pub is_convex: bool,
}

pub fn measure<T: Real>(polygon: &BoundaryPolygon<T>) -> Result<GeometryReport<T>> {
    polygon.check_convex()?;
    let v = polygon.vertices();
    let mut diameter = T::zero();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            diameter = diameter.max((v[i] - v[j]).norm());
        }
    }
    let (incenter, inradius) = chebyshev_center(polygon);
    Ok(GeometryReport {
        inradius,
        incenter,
        diameter,
        perimeter: polygon.perimeter(),
        area: polygon.signed_area(),
        is_convex: true,
    })
}

/// Largest inscribed disk via the linear program
/// `max t` s.t. `nᵢ·p + t ≤ cᵢ` for each edge (outward unit normal `nᵢ`),
/// solved by a dense primal simplex with Bland's rule. Coordinates are
/// shifted to the vertex centroid so the slack basis is feasible.
fn chebyshev_center<T: Real>(polygon: &BoundaryPolygon<T>) -> (Point<T>, T) {
    let origin = polygon.vertex_centroid();
    let rows: Vec<(Vector2<T>, T)> = polygon
        .edges()
        .map(|(a, b)| {
            let e = b - a;
            let normal = Vector2::new(e.y, -e.x) / e.norm();
            (normal, normal.dot(&(a - origin)))
        })
        .collect();
    let m = rows.len();
    // columns: x+, x-, y+, y-, t, slacks (m), rhs
    let width = 5 + m + 1;
    let rhs = width - 1;
    let mut tab = vec![T::zero(); (m + 1) * width];
    for (i, (n, c)) in rows.iter().enumerate() {
        let r = &mut tab[i * width..(i + 1) * width];
        r[0] = n.x;
        r[1] = -n.x;
        r[2] = n.y;
        r[3] = -n.y;
        r[4] = T::one();
        r[5 + i] = T::one();
        r[rhs] = *c;
    }
    tab[m * width + 4] = -T::one();
    let mut basis: Vec<usize> = (5..5 + m).collect();
    let tol = T::lit(1e-12).max(T::eps() * T::lit(64.0));

    for _ in 0..(50 * (m + 5)) {
        let obj = &tab[m * width..(m + 1) * width];
        let Some(enter) = (0..rhs).find(|&j| obj[j] < -tol) else { break };
        let mut leave: Option<(usize, T)> = None;
        for i in 0..m {
            let a = tab[i * width + enter];
            if a > tol {
                let ratio = tab[i * width + rhs] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - tol || ((ratio - lr).abs() <= tol && basis[i] < basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((pr, _)) = leave else { break };
        let piv = tab[pr * width + enter];
        for j in 0..width {
            tab[pr * width + j] /= piv;
        }
        let pivot_row: Vec<T> = tab[pr * width..(pr + 1) * width].to_vec();
        for i in 0..=m {
            if i == pr {
                continue;
            }
            let f = tab[i * width + enter];
            if f != T::zero() {
                for j in 0..width {
                    tab[i * width + j] -= f * pivot_row[j];
                }
            }
        }
        basis[pr] = enter;
    }
    let mut z = [T::zero(); 5];
    for (i, &b) in basis.iter().enumerate() {
        if b < 5 {
            z[b] = tab[i * width + rhs];
        }
    }
    (Point::new(origin.x + z[0] - z[1], origin.y + z[2] - z[3]), z[4])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Keep `x ≤ x₀`.
    Left,
    /// Keep `x ≥ x₀`.
    Right,
}

/// Intersection of a convex polygon with a vertical half-plane.
pub fn clip_halfplane<T: Real>(polygon: &BoundaryPolygon<T>, x0: T, side: Side) -> Result<BoundaryPolygon<T>> {
    let inside = |p: &Point<T>| match side {
        Side::Left => p.x <= x0,
        Side::Right => p.x >= x0,
    };
    let mut out: Vec<Point<T>> = Vec::with_capacity(polygon.len() + 2);
    for (a, b) in polygon.edges() {
        let (ia, ib) = (inside(&a), inside(&b));
        if ia {
            out.push(a);
        }
        if ia != ib && a.x != x0 && b.x != x0 {
            let t = (x0 - a.x) / (b.x - a.x);
            out.push(Point::new(x0, a.y + (b.y - a.y) * t));
        }
    }
    let scale = polygon.perimeter();
    let mut cleaned: Vec<Point<T>> = Vec::with_capacity(out.len());
    for p in out {
        if cleaned.last().is_none_or(|q: &Point<T>| (p - q).norm() > T::lit(1e-13) * scale) {
            cleaned.push(p);
        }
    }
    while cleaned.len() > 1 && (cleaned[0] - cleaned[cleaned.len() - 1]).norm() <= T::lit(1e-13) * scale {
        cleaned.pop();
    }
    if cleaned.len() < 3 {
        return Err(Error::EmptyRegion);
    }
    let area = BoundaryPolygon { vertices: cleaned.clone() }.signed_area();
    if !(area > T::lit(1e-12) * scale * scale) {
        return Err(Error::EmptyRegion);
    }
    BoundaryPolygon::new(cleaned)
}

/// Boundary portion an edge belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryPart {
    Left,
    Right,
    Strip,
}

impl fmt::Display for BoundaryPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryPart::Left => "S_l",
            BoundaryPart::Right => "S_r",
            BoundaryPart::Strip => "Sigma_delta",
        })
    }
}

/// Labels of a closed sequence of boundary edges: `Strip` iff the edge
/// midpoint satisfies `|x| < δ/2`, `Left` iff `x ≤ −δ/2`, `Right` otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionLabels<T> {
    pub delta: T,
    pub labels: Vec<BoundaryPart>,
    pub measure_left: T,
    pub measure_right: T,
    pub measure_strip: T,
}

impl<T: Real> PartitionLabels<T> {
    pub fn measure(&self, part: BoundaryPart) -> T {
        match part {
            BoundaryPart::Left => self.measure_left,
            BoundaryPart::Right => self.measure_right,
            BoundaryPart::Strip => self.measure_strip,
        }
    }

    pub fn total(&self) -> T {
        self.measure_left + self.measure_right + self.measure_strip
    }
}

/// Labels arbitrary boundary segments; shared by polygons and mesh boundaries.
pub fn partition_segments<T: Real>(
    segments: impl IntoIterator<Item = (Point<T>, Point<T>)>,
    delta: T,
) -> PartitionLabels<T> {
    let half = delta * T::lit(0.5);
    let mut out = PartitionLabels {
        delta,
        labels: Vec::new(),
        measure_left: T::zero(),
        measure_right: T::zero(),
        measure_strip: T::zero(),
    };
    for (a, b) in segments {
        let mid = (a.x + b.x) * T::lit(0.5);
        let len = (b - a).norm();
        let part = if mid.abs() < half {
            out.measure_strip += len;
            BoundaryPart::Strip
        } else if mid <= -half {
            out.measure_left += len;
            BoundaryPart::Left
        } else {
            out.measure_right += len;
            BoundaryPart::Right
        };
        out.labels.push(part);
    }
    out
}

/// Checks `0 < δ < D/2` and that the strip meets the polygon.
pub fn check_partition_delta<T: Real>(polygon: &BoundaryPolygon<T>, delta: T) -> Result<()> {
    let diameter = measure(polygon)?.diameter;
    if !(delta > T::zero()) || delta >= diameter * T::lit(0.5) {
        return Err(invalid(format!("delta = {delta} must lie in (0, D/2) with D = {diameter}")));
    }
    let (lo, hi) = polygon.x_range();
    let half = delta * T::lit(0.5);
    if !(lo < half && hi > -half) {
        return Err(invalid(format!("strip |x| < {half} does not meet the domain")));
    }
    Ok(())
}

pub fn boundary_partition<T: Real>(polygon: &BoundaryPolygon<T>, delta: T) -> Result<PartitionLabels<T>> {
    check_partition_delta(polygon, delta)?;
    Ok(partition_segments(polygon.edges(), delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square(side: f64) -> BoundaryPolygon<f64> {
        let h = side / 2.0;
        BoundaryPolygon::new(vec![
            Point::new(-h, -h),
            Point::new(h, -h),
            Point::new(h, h),
            Point::new(-h, h),
        ])
        .unwrap()
    }

    #[test]
    fn stadium_curve_matches_construction() {
        let c = make_domain(&DomainSpec::stadium(1.0f64, 10.0)).unwrap();
        assert!((c.perimeter() - (16.0 + 2.0 * PI)).abs() < 1e-12);
        let p = c.point_at(0.0);
        assert!((p.x - 5.0).abs() < 1e-12 && p.y.abs() < 1e-12);
        let top = c.point_at(PI / 2.0 + 4.0);
        assert!((top.x - 0.0).abs() < 1e-12 && (top.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(make_domain(&DomainSpec::stadium(1.0, 1.5)), Err(Error::InvalidParameter(_))));
        assert!(make_domain(&DomainSpec::ellipse(1.0, 2.0)).is_err());
        assert!(make_domain(&DomainSpec::rounded_rectangle(4.0, 2.0, 1.5)).is_err());
        assert!(make_domain(&DomainSpec::<f64>::PolygonFile { path: "/nonexistent".into() }).is_err());
    }

    #[test]
    fn degenerate_stadium_is_the_disk() {
        let c = make_domain(&DomainSpec::disk(1.0f64)).unwrap();
        assert!((c.perimeter() - 2.0 * PI).abs() < 1e-12);
        for k in 0..50 {
            let p = c.point_at(0.3 * k as f64);
            assert!((p.coords.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipse_arclength_is_consistent() {
        let c = make_domain(&DomainSpec::ellipse(2.0f64, 1.0)).unwrap();
        // Ramanujan-II approximation is accurate to ~1e-9 relative at this eccentricity
        let (a, b) = (2.0f64, 1.0f64);
        let hh = ((a - b) / (a + b)).powi(2);
        let ram = PI * (a + b) * (1.0 + 3.0 * hh / (10.0 + (4.0 - 3.0 * hh).sqrt()));
        assert!((c.perimeter() - ram).abs() < 1e-6 * ram);
        let p = c.point_at(c.perimeter() / 4.0);
        assert!(p.x.abs() < 1e-10 && (p.y - 1.0).abs() < 1e-10);
    }

    #[test]
    fn polygonize_inscribed_square_and_fine_circle() {
        let c = make_domain(&DomainSpec::disk(1.0f64)).unwrap();
        let sq = BoundaryPolygon::new(sample_arclength(&c, 4)).unwrap();
        assert!((sq.perimeter() - 4.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(polygonize(&c, 4).is_err());
        let fine = polygonize(&c, 360).unwrap();
        let exact = 2.0 * 360.0 * (PI / 360.0).sin();
        assert!((fine.perimeter() - exact).abs() < 1e-12);
        assert!((fine.perimeter() - 2.0 * PI).abs() < 1e-4);
    }

    #[test]
    fn polygonized_stadium_perimeter() {
        let c = make_domain(&DomainSpec::stadium(1.0f64, 10.0)).unwrap();
        let poly = polygonize(&c, 200).unwrap();
        let exact = 16.0 + 2.0 * PI;
        assert!(poly.perimeter() <= exact);
        assert!((poly.perimeter() - exact).abs() < 1e-3 * exact);
    }

    #[test]
    fn measure_square() {
        let r = measure(&square(2.0)).unwrap();
        assert!((r.inradius - 1.0).abs() < 1e-12);
        assert!((r.diameter - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((r.area - 4.0).abs() < 1e-12);
        assert!((r.perimeter - 8.0).abs() < 1e-12);
        assert!(r.incenter.coords.norm() < 1e-12);
    }

    #[test]
    fn measure_polygonized_families() {
        let st = polygonize(&make_domain(&DomainSpec::stadium(1.0f64, 10.0)).unwrap(), 400).unwrap();
        let r = measure(&st).unwrap();
        assert!((r.inradius - 1.0).abs() < 1e-3, "{}", r.inradius);
        assert!((r.diameter - 10.0).abs() < 1e-3);
        let el = polygonize(&make_domain(&DomainSpec::ellipse(2.0f64, 1.0)).unwrap(), 400).unwrap();
        let r = measure(&el).unwrap();
        assert!((r.diameter - 4.0).abs() < 1e-3);
        assert!(r.inradius < 1.0 && r.inradius > 0.99);
    }

    #[test]
    fn non_convex_is_rejected() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        assert!(matches!(BoundaryPolygon::new(pts.clone()), Err(Error::NotConvex(_))));
        let p = BoundaryPolygon::from_vertices_unchecked(pts).unwrap();
        assert!(matches!(measure(&p), Err(Error::NotConvex(_))));
        let cw = vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0)];
        assert!(BoundaryPolygon::new(cw).is_err());
    }

    #[test]
    fn clip_square_and_stadium() {
        let left = clip_halfplane(&square(2.0), 0.0, Side::Left).unwrap();
        assert!((left.signed_area() - 2.0).abs() < 1e-12);
        assert_eq!(left.len(), 4);
        assert!(matches!(clip_halfplane(&square(2.0), 3.0, Side::Right), Err(Error::EmptyRegion)));

        let st = polygonize(&make_domain(&DomainSpec::stadium(1.0f64, 10.0)).unwrap(), 400).unwrap();
        let right = clip_halfplane(&st, 1.0, Side::Right).unwrap();
        let (lo, hi) = right.x_range();
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - lo - 4.0).abs() < 1e-12);
        let d = 10.0 / 2.0 - 1.0;
        assert!(measure(&right).unwrap().diameter < 2.0 * d);
        assert!(right.is_convex());
    }

    #[test]
    fn stadium_partition_lengths() {
        let st = polygonize(&make_domain(&DomainSpec::stadium(1.0f64, 10.0)).unwrap(), 800).unwrap();
        let lab = boundary_partition(&st, 2.0).unwrap();
        let h = st.perimeter() / 800.0;
        assert!((lab.measure_strip - 4.0).abs() <= 2.0 * h);
        assert!((lab.measure_left - (6.0 + PI)).abs() <= 2.0 * h);
        assert!((lab.measure_left - lab.measure_right).abs() < 1e-9);
        assert!(lab.measure_strip <= 2.0 * 2.0 + 4.0);
        assert!((lab.total() - st.perimeter()).abs() <= 1e-12 * st.perimeter());
        assert!(boundary_partition(&st, 5.0).is_err());
        assert!(boundary_partition(&st, -1.0).is_err());
    }

    #[test]
    fn partition_with_tiny_delta() {
        let st = polygonize(&make_domain(&DomainSpec::ellipse(3.0f64, 1.0)).unwrap(), 301).unwrap();
        let lab = boundary_partition(&st, 1e-9).unwrap();
        assert!(lab.measure_strip < 1e-6);
        assert!((lab.measure_left + lab.measure_right - st.perimeter()).abs() < 1e-6);
    }

    #[test]
    fn polygon_file_round_trip() {
        let st = polygonize(&make_domain(&DomainSpec::stadium(1.0f64, 4.0)).unwrap(), 64).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stadium.poly");
        write_polygon_file(&st, &path).unwrap();
        let back: BoundaryPolygon<f64> = read_polygon_file(&path).unwrap();
        assert_eq!(back, st);
        let c = make_domain(&DomainSpec::<f64>::PolygonFile { path }).unwrap();
        assert!((c.perimeter() - st.perimeter()).abs() < 1e-12);
        assert!(parse_polygon::<f64>("3\n0 0\n1 0\n").is_err());
        assert!(parse_polygon::<f64>("3\n0 0\n1 0\n0 x\n").is_err());
    }

    #[test]
    fn single_precision_measure() {
        let c = make_domain(&DomainSpec::<f32>::stadium(1.0, 6.0)).unwrap();
        let p = polygonize(&c, 128).unwrap();
        let r = measure(&p).unwrap();
        assert!((r.diameter - 6.0).abs() < 1e-3);
        assert!((r.inradius - 1.0).abs() < 1e-2);
    }
}
