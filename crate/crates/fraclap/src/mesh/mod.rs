//! Structured, symmetry-respecting triangulations of cell domains with
//! global vertex identification, plus uniform red refinement.
//!
//! Every cell of a domain is meshed by the same affine template (quads get
//! an n-by-n grid of 4-triangle center fans, triangles a uniform n^2
//! subdivision, octagons an 8-triangle center fan subdivided n^2 times), so
//! the dihedral symmetries of the presets act exactly on the mesh. Vertices
//! shared between cells are identified globally; for overlapping cells
//! (sawtooth and dilated-gasket domains) the coincident template triangles
//! in the overlap are deduplicated, which requires the subdivision to be
//! commensurate with the overlap fraction.

mod templates;

use crate::error::{Error, Result};
use crate::geometry::{polygon_area, CellDomain, Point};
use std::collections::{BTreeMap, HashMap};

pub use templates::QuadTemplate;

/// Relative tolerance (times domain diameter) for global vertex
/// identification.
pub const IDENTIFY_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub cell_of_triangle: Vec<usize>,
    pub refinement: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub max_aspect: f64,
    pub vertex_count: usize,
    pub triangle_count: usize,
}

impl TriMesh {
    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(|t| self.triangle_area(t)).sum()
    }

    fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let [a, b, c] = [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]];
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    }

    /// Map from undirected edges to incident triangle indices.
    pub fn edge_incidence(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                edges.entry((a.min(b), a.max(b))).or_default().push(ti);
            }
        }
        edges
    }

    /// Checks positive orientation and that no edge has more than two
    /// incident triangles.
    pub fn validate(&self) -> Result<()> {
        for t in &self.triangles {
            if self.triangle_area(t) <= 0.0 {
                return Err(Error::numerical("mesh contains a degenerate or inverted triangle"));
            }
        }
        for (e, ts) in self.edge_incidence() {
            if ts.len() > 2 {
                return Err(Error::numerical(format!(
                    "nonconforming mesh: edge {e:?} belongs to {} triangles",
                    ts.len()
                )));
            }
        }
        Ok(())
    }
}

/// Triangulates a cell domain with `subdivision` segments per cell edge
/// using the default templates (center fans on quads and octagons).
pub fn triangulate(domain: &CellDomain, subdivision: usize) -> Result<TriMesh> {
    triangulate_with(domain, subdivision, QuadTemplate::CenterFan)
}

pub fn triangulate_with(domain: &CellDomain, subdivision: usize, quad: QuadTemplate) -> Result<TriMesh> {
    if subdivision == 0 {
        return Err(Error::invalid("subdivision must be at least 1"));
    }
    if domain.cells.is_empty() {
        return Err(Error::invalid("domain has no cells"));
    }

    let diam = domain.diameter();
    let tol = IDENTIFY_REL_TOL * diam.max(1.0);
    let mut merger = VertexMerger::new(tol);
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut cell_of_triangle: Vec<usize> = Vec::new();
    let mut seen: HashMap<[usize; 3], usize> = HashMap::new();

    for (ci, cell) in domain.cells.iter().enumerate() {
        let local = match cell.polygon.len() {
            3 => templates::triangle_template(&cell.polygon, subdivision),
            4 => templates::quad_template(&cell.polygon, subdivision, quad),
            8 => templates::octagon_template(&cell.polygon, subdivision),
            n => {
                return Err(Error::invalid(format!(
                    "unsupported cell shape with {n} vertices (cell {ci})"
                )))
            }
        };
        let ids: Vec<usize> = local.vertices.iter().map(|&p| merger.insert(p)).collect();
        for t in &local.triangles {
            let tri = [ids[t[0]], ids[t[1]], ids[t[2]]];
            let mut key = tri;
            key.sort_unstable();
            // Coincident triangles from overlapping cells collapse to one.
            if seen.insert(key, triangles.len()).is_none() {
                triangles.push(tri);
                cell_of_triangle.push(ci);
            }
        }
    }

    let mesh = TriMesh {
        vertices: merger.coords,
        triangles,
        cell_of_triangle,
        refinement: 0,
    };
    mesh.validate()?;
    check_union_area(domain, &mesh)?;
    Ok(mesh)
}

/// For domains whose cells may overlap, the triangulated area must equal the
/// union area (cells minus pairwise overlaps); a mismatch means the
/// subdivision is incommensurate with the overlap and the overlap region was
/// double-covered.
fn check_union_area(domain: &CellDomain, mesh: &TriMesh) -> Result<()> {
    let may_overlap = matches!(domain.ifs.name.as_str(), "sg_triangle" | "sawtooth");
    let cell_sum = domain.cell_area_sum();
    let expected = if may_overlap {
        let mut overlap = 0.0;
        let boxes: Vec<(Point, Point)> = domain.cells.iter().map(|c| bbox(&c.polygon)).collect();
        for i in 0..domain.cells.len() {
            for j in i + 1..domain.cells.len() {
                if boxes_intersect(&boxes[i], &boxes[j]) {
                    overlap += convex_intersection_area(&domain.cells[i].polygon, &domain.cells[j].polygon);
                }
            }
        }
        cell_sum - overlap
    } else {
        cell_sum
    };
    let got = mesh.total_area();
    if (got - expected).abs() > 1e-9 * expected.abs().max(1e-30) {
        return Err(Error::invalid(format!(
            "mesh area {got} does not match domain union area {expected}; \
             the subdivision is incommensurate with the cell overlaps"
        )));
    }
    Ok(())
}

fn bbox(poly: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in poly {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (lo, hi)
}

fn boxes_intersect(a: &(Point, Point), b: &(Point, Point)) -> bool {
    a.0[0] <= b.1[0] && b.0[0] <= a.1[0] && a.0[1] <= b.1[1] && b.0[1] <= a.1[1]
}

/// Area of the intersection of two convex polygons (Sutherland-Hodgman).
pub fn convex_intersection_area(a: &[Point], b: &[Point]) -> f64 {
    let mut poly = a.to_vec();
    let n = b.len();
    for i in 0..n {
        if poly.is_empty() {
            return 0.0;
        }
        let p = b[i];
        let q = b[(i + 1) % n];
        let inside = |v: Point| (q[0] - p[0]) * (v[1] - p[1]) - (q[1] - p[1]) * (v[0] - p[0]) >= -1e-15;
        let cross = |u: Point, v: Point| -> Point {
            let dx = v[0] - u[0];
            let dy = v[1] - u[1];
            let t = ((q[0] - p[0]) * (u[1] - p[1]) - (q[1] - p[1]) * (u[0] - p[0]))
                / ((q[1] - p[1]) * dx - (q[0] - p[0]) * dy);
            [u[0] + t * dx, u[1] + t * dy]
        };
        let mut out = Vec::with_capacity(poly.len() + 2);
        for k in 0..poly.len() {
            let cur = poly[k];
            let nxt = poly[(k + 1) % poly.len()];
            match (inside(cur), inside(nxt)) {
                (true, true) => out.push(nxt),
                (true, false) => out.push(cross(cur, nxt)),
                (false, true) => {
                    out.push(cross(cur, nxt));
                    out.push(nxt);
                }
                (false, false) => {}
            }
        }
        poly = out;
    }
    polygon_area(&poly).abs()
}

/// Red refinement: every triangle is split into four by its edge midpoints.
pub fn refine(mesh: &TriMesh) -> TriMesh {
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let p = vertices[a];
            let q = vertices[b];
            vertices.push([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(mesh.triangles.len() * 4);
    let mut cell_of_triangle = Vec::with_capacity(mesh.triangles.len() * 4);
    for (t, &cell) in mesh.triangles.iter().zip(&mesh.cell_of_triangle) {
        let [a, b, c] = *t;
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        for tri in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
            triangles.push(tri);
            cell_of_triangle.push(cell);
        }
    }
    TriMesh {
        vertices,
        triangles,
        cell_of_triangle,
        refinement: mesh.refinement + 1,
    }
}

/// Merges vertices closer than `tol` into single degrees of freedom.
/// Errors when a merge collapses a triangle, which signals that `tol` is
/// larger than the local mesh size.
pub fn identify_vertices(mesh: &TriMesh, tol: f64) -> Result<TriMesh> {
    if tol < 0.0 {
        return Err(Error::invalid("identification tolerance must be nonnegative"));
    }
    let mut merger = VertexMerger::new(tol);
    let remap: Vec<usize> = mesh.vertices.iter().map(|&p| merger.insert(p)).collect();
    let mut triangles = Vec::with_capacity(mesh.triangles.len());
    for t in &mesh.triangles {
        let tri = [remap[t[0]], remap[t[1]], remap[t[2]]];
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(Error::invalid(
                "identification tolerance collapses a triangle; tol is too large",
            ));
        }
        triangles.push(tri);
    }
    Ok(TriMesh {
        vertices: merger.coords,
        triangles,
        cell_of_triangle: mesh.cell_of_triangle.clone(),
        refinement: mesh.refinement,
    })
}

pub fn mesh_quality(mesh: &TriMesh) -> MeshQuality {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect = 0.0f64;
    for t in &mesh.triangles {
        let p = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        let mut lens = [0.0; 3];
        for k in 0..3 {
            let a = p[k];
            let b = p[(k + 1) % 3];
            lens[k] = (b[0] - a[0]).hypot(b[1] - a[1]);
        }
        for k in 0..3 {
            // Angle at vertex k is between edges k (to k+1) and k+2 (from k+2).
            let a = lens[k];
            let b = lens[(k + 2) % 3];
            let c = lens[(k + 1) % 3];
            let cos = ((a * a + b * b - c * c) / (2.0 * a * b)).clamp(-1.0, 1.0);
            min_angle = min_angle.min(cos.acos().to_degrees());
        }
        let lmax = lens.iter().cloned().fold(0.0, f64::max);
        let lmin = lens.iter().cloned().fold(f64::INFINITY, f64::min);
        max_aspect = max_aspect.max(lmax / lmin);
    }
    MeshQuality {
        min_angle_deg: min_angle,
        max_aspect,
        vertex_count: mesh.vertices.len(),
        triangle_count: mesh.triangles.len(),
    }
}

/// First-occurrence-wins vertex deduplication on a quantized grid.
struct VertexMerger {
    tol: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    coords: Vec<Point>,
}

impl VertexMerger {
    fn new(tol: f64) -> Self {
        VertexMerger { tol, buckets: HashMap::new(), coords: Vec::new() }
    }

    fn insert(&mut self, p: Point) -> usize {
        if self.tol == 0.0 {
            // Exact matching only.
            let key = (p[0].to_bits() as i64, p[1].to_bits() as i64);
            if let Some(ids) = self.buckets.get(&key) {
                return ids[0];
            }
            let id = self.coords.len();
            self.coords.push(p);
            self.buckets.insert(key, vec![id]);
            return id;
        }
        let qx = (p[0] / self.tol).round() as i64;
        let qy = (p[1] / self.tol).round() as i64;
        for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                if let Some(ids) = self.buckets.get(&(qx + dx, qy + dy)) {
                    for &id in ids {
                        let c = self.coords[id];
                        if (c[0] - p[0]).hypot(c[1] - p[1]) <= self.tol {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.coords.len();
        self.coords.push(p);
        self.buckets.entry((qx, qy)).or_default().push(id);
        id
    }
}
