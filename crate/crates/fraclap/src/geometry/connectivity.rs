//! Edge-adjacency connectivity and corner-coupling detection on cell
//! domains.

use super::CellDomain;
use super::Point;
use crate::error::Result;
use std::collections::HashMap;

/// Result of [`connectivity_report`]: number of edge-connected components
/// and the corner-coupled vertices (points where exactly two cells meet
/// without sharing an edge).
#[derive(Clone, Debug)]
pub struct ConnectivityReport {
    pub component_count: usize,
    pub corner_coupled: Vec<Point>,
}

/// Components are computed by union-find over shared full edges; a vertex is
/// corner-coupled when exactly two cells touch it and those cells share no
/// edge (for squares: two diagonal squares with no edge-adjacent square at
/// that vertex).
pub fn connectivity_report(domain: &CellDomain) -> Result<ConnectivityReport> {
    let diam = domain.diameter();
    let tol = super::GEOM_REL_TOL * diam.max(1.0) * 1e3; // vertex matching across float paths
    let quant = |p: Point| -> (i64, i64) { ((p[0] / tol).round() as i64, (p[1] / tol).round() as i64) };

    // Canonical vertex ids via quantized coordinates (bucket + neighbors).
    let mut buckets: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertex_ids: Vec<Vec<usize>> = Vec::with_capacity(domain.cells.len());
    let mut coords: Vec<Point> = Vec::new();
    for cell in &domain.cells {
        let mut ids = Vec::with_capacity(cell.polygon.len());
        for &p in &cell.polygon {
            let (qx, qy) = quant(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(&id) = buckets.get(&(qx + dx, qy + dy)) {
                        let c = coords[id];
                        if (c[0] - p[0]).hypot(c[1] - p[1]) <= tol {
                            found = Some(id);
                            break 'search;
                        }
                    }
                }
            }
            let id = found.unwrap_or_else(|| {
                let id = coords.len();
                coords.push(p);
                buckets.insert((qx, qy), id);
                id
            });
            ids.push(id);
        }
        vertex_ids.push(ids);
    }

    // Edges keyed by sorted vertex-id pairs.
    let mut edge_cells: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (ci, ids) in vertex_ids.iter().enumerate() {
        let n = ids.len();
        for k in 0..n {
            let a = ids[k];
            let b = ids[(k + 1) % n];
            let key = (a.min(b), a.max(b));
            edge_cells.entry(key).or_default().push(ci);
        }
    }

    // Union-find over cells sharing a full edge.
    let mut parent: Vec<usize> = (0..domain.cells.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for cells in edge_cells.values() {
        for w in cells.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut roots: Vec<usize> = (0..domain.cells.len()).map(|c| find(&mut parent, c)).collect();
    roots.sort_unstable();
    roots.dedup();
    let component_count = roots.len();

    // Vertex incidence for corner couplings.
    let mut vertex_cells: HashMap<usize, Vec<usize>> = HashMap::new();
    for (ci, ids) in vertex_ids.iter().enumerate() {
        for &id in ids {
            vertex_cells.entry(id).or_default().push(ci);
        }
    }
    let mut corner_coupled = Vec::new();
    let mut keys: Vec<usize> = vertex_cells.keys().copied().collect();
    keys.sort_unstable();
    for v in keys {
        let cells = &vertex_cells[&v];
        if cells.len() != 2 {
            continue;
        }
        let (a, b) = (cells[0], cells[1]);
        let shares_edge = vertex_ids[a].iter().enumerate().any(|(k, &id1)| {
            let id2 = vertex_ids[a][(k + 1) % vertex_ids[a].len()];
            let key = (id1.min(id2), id1.max(id2));
            edge_cells.get(&key).map(|cs| cs.contains(&b)).unwrap_or(false)
        });
        if !shares_edge {
            corner_coupled.push(coords[v]);
        }
    }

    Ok(ConnectivityReport { component_count, corner_coupled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, make_preset, Cell, CellDomain, IteratedFunctionSystem, Preset};

    fn square_domain(positions: &[(f64, f64)], side: f64) -> CellDomain {
        let cells = positions
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Cell {
                polygon: vec![[x, y], [x + side, y], [x + side, y + side], [x, y + side]],
                word: vec![i as u8],
            })
            .collect();
        let ifs = IteratedFunctionSystem::new(
            vec![crate::geometry::AffineMap::scale_translate(0.5, [0.0, 0.0]).unwrap()],
            "test",
        )
        .unwrap();
        CellDomain {
            level: 1,
            base: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            cells,
            ifs,
            carpet_spec: None,
        }
    }

    #[test]
    fn block_of_four_is_one_component() {
        let d = square_domain(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)], 1.0);
        let r = connectivity_report(&d).unwrap();
        assert_eq!(r.component_count, 1);
        assert!(r.corner_coupled.is_empty());
    }

    #[test]
    fn diagonal_squares_corner_couple() {
        let d = square_domain(&[(0.0, 0.0), (1.0, 1.0)], 1.0);
        let r = connectivity_report(&d).unwrap();
        assert_eq!(r.component_count, 2);
        assert_eq!(r.corner_coupled.len(), 1);
        assert!((r.corner_coupled[0][0] - 1.0).abs() < 1e-12);
        assert!((r.corner_coupled[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l_shape_is_not_coupled() {
        let d = square_domain(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)], 1.0);
        let r = connectivity_report(&d).unwrap();
        assert_eq!(r.component_count, 1);
        assert!(r.corner_coupled.is_empty());
    }

    #[test]
    fn sg_zero_overlap_junctions_are_couplings() {
        let (ifs, base) = make_preset(&Preset::SgTriangle { epsilon: 0.0 }).unwrap();
        let d = build_domain(&ifs, &base, 1).unwrap();
        let r = connectivity_report(&d).unwrap();
        // Three disjoint triangles touching pairwise at single points.
        assert_eq!(r.component_count, 3);
        assert_eq!(r.corner_coupled.len(), 3);
    }

    #[test]
    fn octagasket_level1_connected() {
        let (ifs, base) = make_preset(&Preset::Octagasket).unwrap();
        let d = build_domain(&ifs, &base, 1).unwrap();
        let r = connectivity_report(&d).unwrap();
        assert_eq!(r.component_count, 1);
        assert!(r.corner_coupled.is_empty());
    }
}
