//! Per-cell triangulation templates. All templates are defined through the
//! cell's own vertices, so affine images of a cell get the affine image of
//! its template.

use crate::geometry::Point;

pub struct LocalMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
}

/// Template used on quadrilateral cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadTemplate {
    /// n x n grid, each quad split into 4 triangles around its center.
    /// Commutes with the full dihedral symmetry of a square cell.
    CenterFan,
    /// n x n grid, each quad split along one diagonal (2 triangles).
    Diagonal,
}

fn lerp2(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Point at bilinear parameter (u, v) of the quad; exact affine for
/// parallelograms, which is all the presets produce.
fn quad_point(q: &[Point], u: f64, v: f64) -> Point {
    let bottom = lerp2(q[0], q[1], u);
    let top = lerp2(q[3], q[2], u);
    lerp2(bottom, top, v)
}

pub fn quad_template(quad: &[Point], n: usize, kind: QuadTemplate) -> LocalMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    // Lattice of (n+1)^2 grid corners.
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(quad_point(quad, i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    match kind {
        QuadTemplate::CenterFan => {
            for j in 0..n {
                for i in 0..n {
                    let c = vertices.len();
                    vertices.push(quad_point(
                        quad,
                        (i as f64 + 0.5) / n as f64,
                        (j as f64 + 0.5) / n as f64,
                    ));
                    let p00 = idx(i, j);
                    let p10 = idx(i + 1, j);
                    let p11 = idx(i + 1, j + 1);
                    let p01 = idx(i, j + 1);
                    triangles.push([c, p00, p10]);
                    triangles.push([c, p10, p11]);
                    triangles.push([c, p11, p01]);
                    triangles.push([c, p01, p00]);
                }
            }
        }
        QuadTemplate::Diagonal => {
            for j in 0..n {
                for i in 0..n {
                    let p00 = idx(i, j);
                    let p10 = idx(i + 1, j);
                    let p11 = idx(i + 1, j + 1);
                    let p01 = idx(i, j + 1);
                    triangles.push([p00, p10, p11]);
                    triangles.push([p00, p11, p01]);
                }
            }
        }
    }
    LocalMesh { vertices, triangles }
}

/// Uniform subdivision of a triangle into n^2 congruent subtriangles.
pub fn triangle_template(tri: &[Point], n: usize) -> LocalMesh {
    subdivided_triangle(tri[0], tri[1], tri[2], n)
}

fn subdivided_triangle(a: Point, b: Point, c: Point, n: usize) -> LocalMesh {
    let mut vertices = Vec::new();
    // Row j (0..=n) has n+1-j points: a + i/n (b-a) + j/n (c-a).
    let mut row_start = Vec::with_capacity(n + 1);
    for j in 0..=n {
        row_start.push(vertices.len());
        for i in 0..=(n - j) {
            let t = i as f64 / n as f64;
            let s = j as f64 / n as f64;
            vertices.push([
                a[0] + t * (b[0] - a[0]) + s * (c[0] - a[0]),
                a[1] + t * (b[1] - a[1]) + s * (c[1] - a[1]),
            ]);
        }
    }
    let at = |i: usize, j: usize| row_start[j] + i;
    let mut triangles = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..(n - j) {
            triangles.push([at(i, j), at(i + 1, j), at(i, j + 1)]);
            if i + 1 < n - j {
                triangles.push([at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
            }
        }
    }
    LocalMesh { vertices, triangles }
}

/// Center fan of 8 isoceles triangles, each subdivided n^2 times. Commutes
/// with the dihedral symmetry of a regular octagon.
pub fn octagon_template(oct: &[Point], n: usize) -> LocalMesh {
    let cx = oct.iter().map(|p| p[0]).sum::<f64>() / 8.0;
    let cy = oct.iter().map(|p| p[1]).sum::<f64>() / 8.0;
    let center = [cx, cy];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for k in 0..8 {
        let local = subdivided_triangle(center, oct[k], oct[(k + 1) % 8], n);
        let base = vertices.len();
        vertices.extend(local.vertices);
        for t in local.triangles {
            triangles.push([t[0] + base, t[1] + base, t[2] + base]);
        }
    }
    // Duplicates along fan spokes and at the center are resolved by the
    // caller's global vertex identification.
    LocalMesh { vertices, triangles }
}
