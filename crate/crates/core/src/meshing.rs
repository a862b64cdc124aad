//! P1 triangulations of convex polygons and `.node`/`.ele` mesh files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector2;
use spade::{ConstrainedDelaunayTriangulation, HasPosition, Triangulation};

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    make_domain, measure, partition_segments, polygonize, BoundaryPolygon, DomainSpec, PartitionLabels,
    Point, MIN_POLYGON_VERTICES,
};
use crate::scalar::Real;

/// Interior lattice points closer than this fraction of `h` to the boundary are dropped.
pub const BOUNDARY_MARGIN: f64 = 0.4;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryEdge<T: Real> {
    pub start: usize,
    pub end: usize,
    /// Outward unit normal.
    pub normal: Vector2<T>,
    pub length: T,
}

/// Triangulated disk: CCW triangles plus the boundary cycle traced CCW.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh<T: Real> {
    vertices: Vec<Point<T>>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge<T>>,
}

#[inline]
fn signed_area<T: Real>(a: &Point<T>, b: &Point<T>, c: &Point<T>) -> T {
    ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)) * T::lit(0.5)
}

impl<T: Real> Mesh<T> {
    /// Validates the mesh invariants and recovers the boundary cycle.
    ///
    /// The error string names the offending entity.
    pub fn new(vertices: Vec<Point<T>>, triangles: Vec<[usize; 3]>) -> std::result::Result<Self, String> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err("mesh has no triangles".into());
        }
        let mut used = vec![false; nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(format!("triangle {t} references missing vertex {v}"));
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(format!("triangle {t} repeats a vertex"));
            }
            let area = signed_area(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]);
            if !(area > T::zero()) {
                return Err(format!("triangle {t} is inverted or degenerate (area {area})"));
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(format!("vertex {v} is not used by any triangle"));
        }

        // undirected edge -> (count, directed occurrence)
        let mut edges: HashMap<(usize, usize), (usize, (usize, usize))> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = edges.entry((a.min(b), a.max(b))).or_insert((0, (a, b)));
                e.0 += 1;
            }
        }
        if let Some(((a, b), _)) = edges.iter().find(|(_, (c, _))| *c > 2) {
            return Err(format!("edge ({a}, {b}) is shared by more than two triangles"));
        }
        let mut next: HashMap<usize, usize> = HashMap::new();
        for (_, (count, (a, b))) in edges.iter() {
            if *count == 1 && next.insert(*a, *b).is_some() {
                return Err(format!("boundary vertex {a} starts two boundary edges"));
            }
        }
        let nb = next.len();
        if nb < 3 {
            return Err("boundary has fewer than three edges".into());
        }
        let start = *next.keys().min().unwrap();
        let mut cycle = Vec::with_capacity(nb);
        let mut v = start;
        loop {
            let w = *next.get(&v).ok_or_else(|| format!("boundary cycle is open at vertex {v}"))?;
            cycle.push((v, w));
            v = w;
            if v == start {
                break;
            }
            if cycle.len() > nb {
                return Err("boundary edges do not form a simple cycle".into());
            }
        }
        if cycle.len() != nb {
            return Err(format!(
                "boundary splits into several cycles ({} of {nb} edges in the first)",
                cycle.len()
            ));
        }
        let n_edges = edges.len();
        if nv + triangles.len() != n_edges + 1 {
            return Err(format!(
                "Euler relation violated: V - E + F = {} - {} + {}",
                nv,
                n_edges,
                triangles.len()
            ));
        }

        let boundary = cycle
            .into_iter()
            .map(|(a, b)| {
                let e = vertices[b] - vertices[a];
                let length = e.norm();
                BoundaryEdge { start: a, end: b, normal: Vector2::new(e.y, -e.x) / length, length }
            })
            .collect();
        Ok(Self { vertices, triangles, boundary })
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge<T>] {
        &self.boundary
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Boundary vertices in cycle order.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        self.boundary.iter().map(|e| e.start).collect()
    }

    pub fn is_boundary_vertex(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for e in &self.boundary {
            flags[e.start] = true;
        }
        flags
    }

    pub fn boundary_segments(&self) -> impl Iterator<Item = (Point<T>, Point<T>)> + '_ {
        self.boundary.iter().map(|e| (self.vertices[e.start], self.vertices[e.end]))
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        signed_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn area(&self) -> T {
        (0..self.triangles.len()).fold(T::zero(), |acc, t| acc + self.triangle_area(t))
    }

    pub fn perimeter(&self) -> T {
        self.boundary.iter().fold(T::zero(), |acc, e| acc + e.length)
    }

    pub fn edge_count(&self) -> usize {
        let mut set = std::collections::HashSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.len()
    }

    /// Labels the boundary edges of this mesh around the strip `|x| < δ/2`.
    pub fn partition(&self, delta: T) -> Result<PartitionLabels<T>> {
        if !(delta > T::zero()) {
            return Err(invalid(format!("delta must be positive, got {delta}")));
        }
        Ok(partition_segments(self.boundary_segments(), delta))
    }

    /// Applies `p ↦ s·p` to every vertex.
    pub fn scaled(&self, s: T) -> Self {
        let vertices = self.vertices.iter().map(|p| Point::new(p.x * s, p.y * s)).collect();
        Self::new(vertices, self.triangles.clone()).expect("scaling preserves validity")
    }
}

#[derive(Clone, Copy, Debug)]
struct Site {
    position: spade::Point2<f64>,
    id: usize,
}

impl HasPosition for Site {
    type Scalar = f64;

    fn position(&self) -> spade::Point2<f64> {
        self.position
    }
}

/// Meshes a convex polygon: boundary resampled at spacing ≤ `h`, a hexagonal
/// interior lattice of spacing `h` (points within `0.4h` of the boundary
/// dropped), Delaunay triangulation, and a centroid-inside filter.
pub fn triangulate<T: Real>(polygon: &BoundaryPolygon<T>, h: T) -> Result<Mesh<T>> {
    triangulate_aligned(polygon, h, &[])
}

/// Vertical chord `x = x0` of a convex polygon, as `(y_lo, y_hi)`.
fn vertical_chord<T: Real>(polygon: &BoundaryPolygon<T>, x0: T) -> Option<(T, T)> {
    let mut ys: Vec<T> = Vec::new();
    for (a, b) in polygon.edges() {
        if a.x == x0 {
            ys.push(a.y);
        }
        if (a.x - x0) * (b.x - x0) < T::zero() {
            let t = (x0 - a.x) / (b.x - a.x);
            ys.push(a.y + (b.y - a.y) * t);
        }
    }
    let lo = ys.iter().copied().reduce(|p, q| p.min(q))?;
    let hi = ys.iter().copied().reduce(|p, q| p.max(q))?;
    (hi > lo).then_some((lo, hi))
}

/// Like [`triangulate`], but every vertical line `x = x0` in `lines` that
/// crosses the polygon is a union of mesh edges, so fields with kinks along
/// those lines are represented exactly in P1.
pub fn triangulate_aligned<T: Real>(polygon: &BoundaryPolygon<T>, h: T, lines: &[T]) -> Result<Mesh<T>> {
    let report = measure(polygon)?;
    if !(h > T::zero()) || h >= report.inradius * T::lit(0.5) {
        return Err(invalid(format!(
            "mesh size h = {h} must satisfy 0 < h < inradius/2 = {}",
            report.inradius * T::lit(0.5)
        )));
    }
    let margin = h * T::lit(BOUNDARY_MARGIN);
    let chords: Vec<(T, T, T)> = lines
        .iter()
        .filter_map(|&x0| vertical_chord(polygon, x0).map(|(lo, hi)| (x0, lo, hi)))
        .collect();

    // boundary, with chord endpoints spliced in as extra breakpoints
    let mut points: Vec<Point<T>> = Vec::new();
    for (a, b) in polygon.edges() {
        // (edge parameter, chord abscissa the breakpoint must land on)
        let mut breaks = vec![(T::zero(), None)];
        for &(x0, ..) in &chords {
            if (a.x - x0) * (b.x - x0) < T::zero() {
                breaks.push(((x0 - a.x) / (b.x - a.x), Some(x0)));
            }
        }
        breaks.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        breaks.push((T::one(), None));
        for w in breaks.windows(2) {
            let (p, q) = (a + (b - a) * w[0].0, a + (b - a) * w[1].0);
            let k = ((q - p).norm() / h).ceil().to_usize().unwrap_or(1).max(1);
            for j in 0..k {
                let mut v = p + (q - p) * (T::from_usize_lossy(j) / T::from_usize_lossy(k));
                if let (0, Some(x0)) = (j, w[0].1) {
                    v.x = x0;
                }
                points.push(v);
            }
        }
    }
    let n_boundary = points.len();

    // interior chord points; each chord's point list includes its two boundary ends
    let mut chord_paths: Vec<Vec<usize>> = Vec::new();
    for &(x0, lo, hi) in &chords {
        let end_of = |y: T, pts: &[Point<T>]| {
            (0..n_boundary).find(|&i| pts[i].x == x0 && (pts[i].y - y).abs() <= h * T::lit(1e-9))
        };
        let (Some(first), Some(last)) = (end_of(lo, &points), end_of(hi, &points)) else {
            return Err(Error::Meshing(format!("chord x = {x0} does not end on boundary vertices")));
        };
        let k = ((hi - lo) / h).ceil().to_usize().unwrap_or(1).max(1);
        let mut path = vec![first];
        for j in 1..k {
            path.push(points.len());
            points.push(Point::new(x0, lo + (hi - lo) * (T::from_usize_lossy(j) / T::from_usize_lossy(k))));
        }
        path.push(last);
        chord_paths.push(path);
    }

    let dy = h * T::lit(0.75).sqrt();
    let (xmin, xmax) = polygon.x_range();
    let (ymin, ymax) = polygon
        .vertices()
        .iter()
        .fold((T::max_value().unwrap(), T::min_value().unwrap()), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    let row_lo = (ymin / dy).floor().to_i64().unwrap();
    let row_hi = (ymax / dy).ceil().to_i64().unwrap();
    let col_lo = (xmin / h).floor().to_i64().unwrap() - 1;
    let col_hi = (xmax / h).ceil().to_i64().unwrap() + 1;
    for j in row_lo..=row_hi {
        let y = dy * T::lit(j as f64);
        let shift = if j.rem_euclid(2) == 1 { h * T::lit(0.5) } else { T::zero() };
        for i in col_lo..=col_hi {
            let p = Point::new(h * T::lit(i as f64) + shift, y);
            if polygon.signed_distance(&p) >= margin && chords.iter().all(|c| (p.x - c.0).abs() >= margin) {
                points.push(p);
            }
        }
    }

    let mut cdt: ConstrainedDelaunayTriangulation<Site> = ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(points.len());
    for (id, p) in points.iter().enumerate() {
        let position = spade::Point2::new(p.x.as_f64(), p.y.as_f64());
        let handle = cdt.insert(Site { position, id }).map_err(|e| Error::Meshing(format!("point {id}: {e:?}")))?;
        handles.push(handle);
    }
    if cdt.num_vertices() != points.len() {
        return Err(Error::Meshing("coincident mesh points".into()));
    }
    for path in &chord_paths {
        for w in path.windows(2) {
            if !cdt.can_add_constraint(handles[w[0]], handles[w[1]]) {
                return Err(Error::Meshing("chord constraint crosses another constraint".into()));
            }
            cdt.add_constraint(handles[w[0]], handles[w[1]]);
        }
    }

    let tol = h * T::lit(1e-6);
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices().map(|v| v.data().id);
        let (pa, pb, pc) = (points[a], points[b], points[c]);
        let centroid = Point::from((pa.coords + pb.coords + pc.coords) / T::lit(3.0));
        if polygon.signed_distance(&centroid) <= tol {
            continue;
        }
        if signed_area(&pa, &pb, &pc) > T::zero() {
            triangles.push([a, b, c]);
        } else {
            triangles.push([a, c, b]);
        }
    }
    if triangles.is_empty() {
        return Err(Error::Meshing("point set is collinear".into()));
    }
    triangles.sort_unstable();
    Mesh::new(points, triangles).map_err(Error::Meshing)
}

/// Polygonizes a domain with boundary spacing about `h` and triangulates it.
pub fn mesh_domain<T: Real>(spec: &DomainSpec<T>, h: T) -> Result<(BoundaryPolygon<T>, Mesh<T>)> {
    mesh_domain_aligned(spec, h, &[])
}

/// [`mesh_domain`] with mesh edges along the vertical lines `x = x0`.
pub fn mesh_domain_aligned<T: Real>(
    spec: &DomainSpec<T>,
    h: T,
    lines: &[T],
) -> Result<(BoundaryPolygon<T>, Mesh<T>)> {
    let curve = make_domain(spec)?;
    let polygon = match spec {
        DomainSpec::PolygonFile { path } => crate::geometry::read_polygon_file(path)?,
        _ => {
            let n = (curve.perimeter() / h).ceil().to_usize().unwrap_or(0).max(MIN_POLYGON_VERTICES);
            polygonize(&curve, n + n % 2)?
        }
    };
    let mesh = triangulate_aligned(&polygon, h, lines)?;
    Ok((polygon, mesh))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshQuality<T> {
    /// Degrees.
    pub min_angle: T,
    pub edge_ratio: T,
    /// Longest edge.
    pub h: T,
}

pub fn mesh_quality<T: Real>(mesh: &Mesh<T>) -> MeshQuality<T> {
    let mut min_angle = T::max_value().unwrap();
    let mut longest = T::zero();
    let mut shortest = T::max_value().unwrap();
    let v = mesh.vertices();
    for tri in mesh.triangles() {
        for k in 0..3 {
            let p = v[tri[k]];
            let e1 = v[tri[(k + 1) % 3]] - p;
            let e2 = v[tri[(k + 2) % 3]] - p;
            let angle = (e1.x * e2.y - e1.y * e2.x).abs().atan2(e1.dot(&e2));
            min_angle = min_angle.min(angle);
            longest = longest.max(e1.norm());
            shortest = shortest.min(e1.norm());
        }
    }
    MeshQuality { min_angle: min_angle * T::lit(180.0) / T::pi(), edge_ratio: longest / shortest, h: longest }
}

fn format_err(entity: impl Into<String>, detail: impl Into<String>) -> Error {
    Error::Format { entity: entity.into(), detail: detail.into() }
}

fn parse_header(line: Option<&str>, file: &str, min_fields: usize) -> Result<usize> {
    let line = line.ok_or_else(|| format_err(file, "missing header"))?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < min_fields {
        return Err(format_err(file, format!("malformed header {line:?}")));
    }
    fields[0].parse().map_err(|_| format_err(file, format!("bad count in header {line:?}")))
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(|l| l.split('#').next().unwrap().trim()).filter(|l| !l.is_empty())
}

/// Parses `.node` / `.ele` contents (1-based indices).
pub fn parse_mesh<T: Real>(node_text: &str, ele_text: &str) -> Result<Mesh<T>> {
    let mut lines = data_lines(node_text);
    let n = parse_header(lines.next(), ".node", 2)?;
    let mut vertices = Vec::with_capacity(n);
    for k in 1..=n {
        let line = lines.next().ok_or_else(|| format_err(format!("node {k}"), "missing line"))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = || format_err(format!("node {k}"), format!("expected \"{k} x y\", got {line:?}"));
        if f.len() < 3 || f[0].parse::<usize>().ok() != Some(k) {
            return Err(bad());
        }
        let x = f[1].parse::<T>().map_err(|_| bad())?;
        let y = f[2].parse::<T>().map_err(|_| bad())?;
        vertices.push(Point::new(x, y));
    }
    let mut lines = data_lines(ele_text);
    let t = parse_header(lines.next(), ".ele", 2)?;
    let mut triangles = Vec::with_capacity(t);
    for k in 1..=t {
        let line = lines.next().ok_or_else(|| format_err(format!("triangle {k}"), "missing line"))?;
        let f: Vec<usize> = line
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| format_err(format!("triangle {k}"), format!("non-integer field in {line:?}")))?;
        if f.len() < 4 || f[0] != k {
            return Err(format_err(format!("triangle {k}"), format!("expected \"{k} v1 v2 v3\", got {line:?}")));
        }
        let mut tri = [0; 3];
        for (slot, &v) in tri.iter_mut().zip(&f[1..4]) {
            if v == 0 || v > n {
                return Err(format_err(format!("triangle {k}"), format!("references node {v} of {n}")));
            }
            *slot = v - 1;
        }
        triangles.push(tri);
    }
    Mesh::new(vertices, triangles).map_err(|e| format_err("mesh", e))
}

pub fn import_mesh<T: Real>(node_path: &Path, ele_path: &Path) -> Result<Mesh<T>> {
    parse_mesh(&std::fs::read_to_string(node_path)?, &std::fs::read_to_string(ele_path)?)
}

/// Renders the `.node` and `.ele` file contents.
pub fn format_mesh<T: Real>(mesh: &Mesh<T>) -> (String, String) {
    let mut node = format!("{} 2 0 0\n", mesh.n_vertices());
    for (k, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(node, "{} {} {}", k + 1, p.x, p.y);
    }
    let mut ele = format!("{} 3 0\n", mesh.triangles().len());
    for (k, t) in mesh.triangles().iter().enumerate() {
        let _ = writeln!(ele, "{} {} {} {}", k + 1, t[0] + 1, t[1] + 1, t[2] + 1);
    }
    (node, ele)
}

pub fn export_mesh<T: Real>(mesh: &Mesh<T>, node_path: &Path, ele_path: &Path) -> Result<()> {
    let (node, ele) = format_mesh(mesh);
    std::fs::write(node_path, node)?;
    std::fs::write(ele_path, ele)?;
    Ok(())
}
