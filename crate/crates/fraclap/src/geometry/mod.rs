//! Iterated function systems, the outer domain recursion, preset fractal
//! families and seeded random carpets.

mod carpet;
mod connectivity;
mod presets;

pub use carpet::{bifurcate, random_carpet, CarpetSpec};
pub use connectivity::{connectivity_report, ConnectivityReport};
pub use presets::{make_preset, parse_preset, Preset};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Coordinate tolerance for exact-geometry predicates, relative to the
/// domain diameter. All preset coordinates are dyadic or algebraic at desk
/// scale, so this is far above roundoff and far below any feature size.
pub const GEOM_REL_TOL: f64 = 1e-12;

pub type Point = [f64; 2];

/// A contractive planar similarity `x -> A x + b`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineMap {
    pub linear: [[f64; 2]; 2],
    pub translation: [f64; 2],
    pub contraction_ratio: f64,
}

impl AffineMap {
    /// Builds a similarity, validating `A^T A = r^2 I` and `r < 1`.
    pub fn similarity(linear: [[f64; 2]; 2], translation: [f64; 2]) -> Result<Self> {
        let a = linear;
        let g00 = a[0][0] * a[0][0] + a[1][0] * a[1][0];
        let g11 = a[0][1] * a[0][1] + a[1][1] * a[1][1];
        let g01 = a[0][0] * a[0][1] + a[1][0] * a[1][1];
        let r2 = 0.5 * (g00 + g11);
        if (g00 - g11).abs() > 1e-12 * r2.max(1.0) || g01.abs() > 1e-12 * r2.max(1.0) {
            return Err(Error::invalid("linear part is not a similarity"));
        }
        let r = r2.sqrt();
        if !(r > 0.0) || r >= 1.0 {
            return Err(Error::invalid(format!("map is not a contraction (ratio {r})")));
        }
        Ok(AffineMap { linear, translation, contraction_ratio: r })
    }

    /// Scaling by `s` followed by translation `t`.
    pub fn scale_translate(s: f64, t: Point) -> Result<Self> {
        Self::similarity([[s, 0.0], [0.0, s]], t)
    }

    pub fn apply(&self, p: Point) -> Point {
        [
            self.linear[0][0] * p[0] + self.linear[0][1] * p[1] + self.translation[0],
            self.linear[1][0] * p[0] + self.linear[1][1] * p[1] + self.translation[1],
        ]
    }

    pub fn apply_inverse(&self, p: Point) -> Point {
        let x = p[0] - self.translation[0];
        let y = p[1] - self.translation[1];
        let det = self.linear[0][0] * self.linear[1][1] - self.linear[0][1] * self.linear[1][0];
        [
            (self.linear[1][1] * x - self.linear[0][1] * y) / det,
            (-self.linear[1][0] * x + self.linear[0][0] * y) / det,
        ]
    }

    pub fn apply_poly(&self, poly: &[Point]) -> Vec<Point> {
        poly.iter().map(|&p| self.apply(p)).collect()
    }

    /// Conjugation `S . self . S^{-1}` by the similarity `x -> s x + t`.
    fn conjugate_by_scale(&self, s: f64, t: Point) -> AffineMap {
        // (S F S^-1)(x) = A x - A t + s b + t
        let a = self.linear;
        let b = self.translation;
        let at = [a[0][0] * t[0] + a[0][1] * t[1], a[1][0] * t[0] + a[1][1] * t[1]];
        AffineMap {
            linear: a,
            translation: [s * b[0] + t[0] - at[0], s * b[1] + t[1] - at[1]],
            contraction_ratio: self.contraction_ratio,
        }
    }
}

/// A finite ordered family of contractive similarities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IteratedFunctionSystem {
    pub maps: Vec<AffineMap>,
    pub name: String,
}

impl IteratedFunctionSystem {
    pub fn new(maps: Vec<AffineMap>, name: impl Into<String>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::invalid("an IFS needs at least one map"));
        }
        Ok(IteratedFunctionSystem { maps, name: name.into() })
    }

    /// Applies the composition `F_{w1} o ... o F_{wm}` to a polygon.
    pub fn apply_word(&self, word: &[u8], poly: &[Point]) -> Vec<Point> {
        let mut out = poly.to_vec();
        for &i in word.iter().rev() {
            out = self.maps[i as usize].apply_poly(&out);
        }
        out
    }
}

/// One congruent polygonal piece of `Omega_m`, with the map word that
/// produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cell {
    pub polygon: Vec<Point>,
    pub word: Vec<u8>,
}

/// The outer approximation `Omega_m` as a list of cells.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellDomain {
    pub level: u32,
    pub base: Vec<Point>,
    pub cells: Vec<Cell>,
    pub ifs: IteratedFunctionSystem,
    /// Generation parameters when this domain is a random carpet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carpet_spec: Option<CarpetSpec>,
}

impl CellDomain {
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in &self.cells {
            for p in &c.polygon {
                for d in 0..2 {
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
        }
        (lo, hi)
    }

    /// Total area counted with multiplicity (overlaps counted twice).
    pub fn cell_area_sum(&self) -> f64 {
        self.cells.iter().map(|c| polygon_area(&c.polygon)).sum()
    }
}

/// Parameters of the sawtooth base triangle with vertices
/// `(-eps, 0), (1 + eps, 0), (1/2, h)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SawtoothParams {
    pub epsilon: f64,
    pub height: f64,
}

impl SawtoothParams {
    pub fn new(epsilon: f64, height: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !(height > 0.0) {
            return Err(Error::invalid("sawtooth epsilon and height must be positive"));
        }
        Ok(SawtoothParams { epsilon, height })
    }
}

/// Builds `Omega_m` by applying all length-`m` words to the base polygon.
///
/// For the sawtooth preset the result is mapped by the similarity taking
/// its base segment to `[0, 1]`; the stored IFS and base polygon are
/// conjugated by the same similarity so that word recomposition remains
/// consistent with the stored geometry.
pub fn build_domain(ifs: &IteratedFunctionSystem, base: &[Point], level: u32) -> Result<CellDomain> {
    if base.len() < 3 {
        return Err(Error::invalid("base polygon needs at least 3 vertices"));
    }
    let n = ifs.maps.len();
    let mut cells: Vec<Cell> = vec![Cell { polygon: base.to_vec(), word: Vec::new() }];
    for _ in 0..level {
        let mut next = Vec::with_capacity(cells.len() * n);
        for i in 0..n {
            for c in &cells {
                let mut word = Vec::with_capacity(c.word.len() + 1);
                word.push(i as u8);
                word.extend_from_slice(&c.word);
                next.push(Cell { polygon: ifs.maps[i].apply_poly(&c.polygon), word });
            }
        }
        // Lexicographic order of words for deterministic downstream numbering.
        next.sort_by(|a, b| a.word.cmp(&b.word));
        cells = next;
    }

    let mut domain = CellDomain {
        level,
        base: base.to_vec(),
        cells,
        ifs: ifs.clone(),
        carpet_spec: None,
    };

    if ifs.name == "sawtooth" {
        rescale_sawtooth(&mut domain);
    }
    Ok(domain)
}

/// Maps the sawtooth domain so that its base segment is exactly [0, 1].
fn rescale_sawtooth(domain: &mut CellDomain) {
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    for c in &domain.cells {
        for p in &c.polygon {
            xmin = xmin.min(p[0]);
            xmax = xmax.max(p[0]);
        }
    }
    let s = 1.0 / (xmax - xmin);
    let t = [-xmin * s, 0.0];
    let apply = |p: Point| [s * p[0] + t[0], s * p[1] + t[1]];
    for c in &mut domain.cells {
        for p in &mut c.polygon {
            *p = apply(*p);
        }
    }
    for p in &mut domain.base {
        *p = apply(*p);
    }
    for m in &mut domain.ifs.maps {
        *m = m.conjugate_by_scale(s, t);
    }
}

/// Signed polygon area (positive for counterclockwise orientation).
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

pub fn polygon_centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut area = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let w = a[0] * b[1] - b[0] * a[1];
        cx += (a[0] + b[0]) * w;
        cy += (a[1] + b[1]) * w;
        area += w;
    }
    [cx / (3.0 * area), cy / (3.0 * area)]
}

/// Point-in-polygon test with tolerance `tol`: points within `tol` of the
/// boundary count as inside.
pub fn point_in_polygon(p: Point, poly: &[Point], tol: f64) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if point_segment_distance(p, a, b) <= tol {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 { 0.0 } else { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    (p[0] - q[0]).hypot(p[1] - q[1])
}
