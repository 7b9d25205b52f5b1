//! P1 finite elements: stiffness/mass assembly and the generalized
//! symmetric eigenproblem. Neumann conditions are natural, so assembly has
//! no boundary handling at all.

mod solve;
mod sparse;

pub use solve::{solve_lowest, SolveOptions, SolverPath, DENSE_CUTOFF, MAX_BASIS};
pub use sparse::{reverse_cuthill_mckee, LdltFactor, SparseSym};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    /// Mass-normalized vector over mesh vertices.
    pub vector: Vec<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub domain: String,
    pub epsilon: Option<f64>,
    pub vertex_count: usize,
    pub triangle_count: usize,
}

/// Ascending Neumann eigenvalues with eigenvectors at one level and
/// refinement.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub level: u32,
    pub refinement: u32,
    pub pairs: Vec<EigenPair>,
    pub residuals: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    /// A spectrum carrying eigenvalues only (for oracle or file sources).
    pub fn from_values(values: Vec<f64>) -> Spectrum {
        Spectrum {
            level: 0,
            refinement: 0,
            residuals: vec![0.0; values.len()],
            pairs: values.into_iter().map(|v| EigenPair { value: v, vector: Vec::new() }).collect(),
            meta: SpectrumMeta::default(),
        }
    }

    pub fn with_context(mut self, level: u32, refinement: u32, meta: SpectrumMeta) -> Spectrum {
        self.level = level;
        self.refinement = refinement;
        self.meta = meta;
        self
    }
}

/// Assembles the P1 stiffness and consistent mass matrices. Stiffness uses
/// the exact gradient (cotangent) formulas; mass is area/12 times
/// (2 on the diagonal, 1 off).
pub fn assemble(mesh: &TriMesh) -> Result<(SparseSym, SparseSym)> {
    let n = mesh.vertices.len();
    let mut kt = Vec::with_capacity(mesh.triangles.len() * 6);
    let mut mt = Vec::with_capacity(mesh.triangles.len() * 6);
    for t in &mesh.triangles {
        let [i, j, k] = *t;
        let p = [mesh.vertices[i], mesh.vertices[j], mesh.vertices[k]];
        let two_a = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        if !(two_a > 0.0) {
            return Err(Error::numerical("degenerate triangle in assembly"));
        }
        let area = 0.5 * two_a;
        let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
        let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
        let ids = [i, j, k];
        for a in 0..3 {
            for d in a..3 {
                let kv = (b[a] * b[d] + c[a] * c[d]) / (4.0 * area);
                let mv = area / 12.0 * if a == d { 2.0 } else { 1.0 };
                kt.push((ids[a], ids[d], kv));
                mt.push((ids[a], ids[d], mv));
            }
        }
    }
    Ok((SparseSym::from_triplets(n, &kt), SparseSym::from_triplets(n, &mt)))
}

/// Rayleigh quotient `v^T K v / v^T M v`.
pub fn rayleigh(v: &[f64], k: &SparseSym, m: &SparseSym) -> Result<f64> {
    let kv = k.matvec_alloc(v);
    let mv = m.matvec_alloc(v);
    let num: f64 = v.iter().zip(&kv).map(|(a, b)| a * b).sum();
    let den: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
    if !(den > 0.0) {
        return Err(Error::invalid("vector has nonpositive M-norm"));
    }
    Ok(num / den)
}

/// Relative eigen-residual `|K v - lambda M v| / (|K v| + |lambda| |M v|)`
/// with the convention 0/0 = 0. Near the kernel of K both numerator and
/// denominator vanish together, so when the denominator drops below problem
/// scale the residual is measured against `|K| |v|` instead, which realizes
/// the convention in floating point.
pub fn residual(k: &SparseSym, m: &SparseSym, lambda: f64, v: &[f64]) -> f64 {
    let kv = k.matvec_alloc(v);
    let mv = m.matvec_alloc(v);
    let mut num = 0.0f64;
    let mut nk = 0.0f64;
    let mut nm = 0.0f64;
    let mut nv = 0.0f64;
    for i in 0..v.len() {
        let r = kv[i] - lambda * mv[i];
        num += r * r;
        nk += kv[i] * kv[i];
        nm += mv[i] * mv[i];
        nv += v[i] * v[i];
    }
    let num = num.sqrt();
    let den = nk.sqrt() + lambda.abs() * nm.sqrt();
    let kscale = k.diag().iter().cloned().fold(0.0f64, |a, d| a.max(d.abs()));
    let scale = kscale * nv.sqrt();
    if den <= 1e-6 * scale {
        if scale == 0.0 {
            return 0.0;
        }
        return num / scale;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, make_preset, Preset};
    use crate::mesh::{refine, triangulate};
    use crate::oracles::rectangle_spectrum;
    use approx::assert_relative_eq;

    fn unit_right_triangle_mesh() -> TriMesh {
        TriMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            cell_of_triangle: vec![0],
            refinement: 0,
        }
    }

    #[test]
    fn mass_conserves_area() {
        let mesh = unit_right_triangle_mesh();
        let (_, m) = assemble(&mesh).unwrap();
        let total: f64 = m.to_dense().iter().sum();
        assert_relative_eq!(total, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn stiffness_kernel_is_constants() {
        let (ifs, base) = make_preset(&Preset::SierpinskiCarpet).unwrap();
        let d = build_domain(&ifs, &base, 1).unwrap();
        let mesh = triangulate(&d, 2).unwrap();
        let (k, _) = assemble(&mesh).unwrap();
        let ones = vec![1.0; k.n];
        let kv = k.matvec_alloc(&ones);
        let scale = k.diag().iter().cloned().fold(0.0f64, f64::max);
        for v in kv {
            assert!(v.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn coarse_square_first_eigenvalue() {
        // Unit square, n=1 fan template: the smallest nonzero eigenvalue of
        // (K, M) is exactly 12 (dense solve on the 5-point mesh), a 22%
        // coarse-mesh overestimate of pi^2 that refinement removes.
        let (ifs, base) = make_preset(&Preset::IntervalSquare).unwrap();
        let d = build_domain(&ifs, &base, 0).unwrap();
        let mesh = triangulate(&d, 1).unwrap();
        let (k, m) = assemble(&mesh).unwrap();
        let s = solve_lowest(&k, &m, 3, &SolveOptions::default()).unwrap();
        let lam1 = s.values()[1];
        let pi2 = std::f64::consts::PI.powi(2);
        assert!(lam1 >= pi2 - 1e-9, "conforming P1 must overestimate");
        assert_relative_eq!(lam1, 12.0, max_relative = 1e-9);
    }

    #[test]
    fn rayleigh_basics() {
        let mesh = unit_right_triangle_mesh();
        let (k, m) = assemble(&mesh).unwrap();
        let c = vec![2.0; 3];
        assert_relative_eq!(rayleigh(&c, &k, &m).unwrap(), 0.0, epsilon = 1e-12);
        let v = vec![1.0, -0.5, 0.25];
        assert!(rayleigh(&v, &k, &m).unwrap() >= 0.0);
        assert!(rayleigh(&[0.0, 0.0, 0.0], &k, &m).is_err());
    }

    #[test]
    fn rayleigh_of_eigenvector_is_eigenvalue() {
        let (ifs, base) = make_preset(&Preset::IntervalSquare).unwrap();
        let d = build_domain(&ifs, &base, 1).unwrap();
        let mesh = refine(&triangulate(&d, 2).unwrap());
        let (k, m) = assemble(&mesh).unwrap();
        let s = solve_lowest(&k, &m, 4, &SolveOptions::default()).unwrap();
        for p in &s.pairs[1..] {
            let r = rayleigh(&p.vector, &k, &m).unwrap();
            assert_relative_eq!(r, p.value, max_relative = 1e-9);
        }
    }

    #[test]
    fn residual_conventions() {
        let (ifs, base) = make_preset(&Preset::IntervalSquare).unwrap();
        let d = build_domain(&ifs, &base, 0).unwrap();
        let mesh = triangulate(&d, 2).unwrap();
        let (k, m) = assemble(&mesh).unwrap();
        // Constant vector with lambda = 0 reports (numerically) 0.
        let c = vec![1.0; k.n];
        assert!(residual(&k, &m, 0.0, &c) < 1e-14);
        // Exact eigenpair: tiny residual; perturbed lambda grows linearly.
        let s = solve_lowest(&k, &m, 3, &SolveOptions::default()).unwrap();
        let p = &s.pairs[1];
        let r0 = residual(&k, &m, p.value, &p.vector);
        assert!(r0 < 1e-9);
        let mut prev = r0;
        for &delta in &[1e-6, 1e-5, 1e-4] {
            let r = residual(&k, &m, p.value * (1.0 + delta), &p.vector);
            assert!(r > prev);
            prev = r;
        }
        let r4 = residual(&k, &m, p.value * (1.0 + 1e-4), &p.vector);
        let r5 = residual(&k, &m, p.value * (1.0 + 1e-5), &p.vector);
        let ratio = r4 / r5;
        assert!((ratio - 10.0).abs() < 1.0, "linear growth expected, ratio {ratio}");
    }

    #[test]
    fn rectangle_oracle_convergence_order() {
        // FEM eigenvalues on the unit square converge at order ~2 to the
        // oracle values.
        let (ifs, base) = make_preset(&Preset::IntervalSquare).unwrap();
        let d = build_domain(&ifs, &base, 0).unwrap();
        let oracle: Vec<f64> = rectangle_spectrum(1.0, 1.0, 4).unwrap().iter().map(|v| v.0).collect();
        let mut errs = Vec::new();
        let mut mesh = triangulate(&d, 2).unwrap();
        for _ in 0..4 {
            let (k, m) = assemble(&mesh).unwrap();
            let s = solve_lowest(&k, &m, 4, &SolveOptions::default()).unwrap();
            errs.push((s.values()[1] - oracle[1]).abs());
            mesh = refine(&mesh);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.7..=2.3).contains(&order), "order {order}");
        }
    }

    #[test]
    fn min_max_monotone_under_refinement() {
        let (ifs, base) = make_preset(&Preset::SierpinskiCarpet).unwrap();
        let d = build_domain(&ifs, &base, 1).unwrap();
        let mut mesh = triangulate(&d, 1).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        for _ in 0..3 {
            let (k, m) = assemble(&mesh).unwrap();
            let s = solve_lowest(&k, &m, 8, &SolveOptions::default()).unwrap();
            let vals = s.values();
            if let Some(p) = prev {
                for (a, b) in p.iter().zip(&vals) {
                    assert!(*b <= a + 1e-12 * a.abs().max(1.0), "refinement raised an eigenvalue");
                }
            }
            prev = Some(vals);
            mesh = refine(&mesh);
        }
    }
}
