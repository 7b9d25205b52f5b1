//! Dihedral group actions on meshes and representation-type classification
//! of eigenspaces.

mod miniaturize;

pub use miniaturize::{miniaturize, verify_miniaturization, MiniaturizationCheck, NestedPair};

use crate::error::{Error, Result};
use crate::fem::SparseSym;
use crate::geometry::Point;
use crate::mesh::TriMesh;
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementKind {
    /// Rotation by `2 pi k / n` about the center.
    Rotation { k: usize },
    /// Reflection about the line through the center at `axis_angle`.
    Reflection { axis_angle: f64 },
}

#[derive(Clone, Debug)]
pub struct GroupElement {
    pub matrix: [[f64; 2]; 2],
    pub kind: ElementKind,
}

impl GroupElement {
    pub fn apply(&self, center: Point, p: Point) -> Point {
        let x = p[0] - center[0];
        let y = p[1] - center[1];
        [
            center[0] + self.matrix[0][0] * x + self.matrix[0][1] * y,
            center[1] + self.matrix[1][0] * x + self.matrix[1][1] * y,
        ]
    }
}

/// The dihedral group D_n acting about a center point, with reflection axes
/// at `axis0 + pi k / n`.
#[derive(Clone, Debug)]
pub struct DihedralGroup {
    pub n: usize,
    pub center: Point,
    pub elements: Vec<GroupElement>,
}

impl DihedralGroup {
    pub fn new(n: usize, center: Point, axis0: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("dihedral order parameter must be positive"));
        }
        let mut elements = Vec::with_capacity(2 * n);
        for k in 0..n {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            elements.push(GroupElement {
                matrix: [[t.cos(), -t.sin()], [t.sin(), t.cos()]],
                kind: ElementKind::Rotation { k },
            });
        }
        for k in 0..n {
            let a = axis0 + std::f64::consts::PI * k as f64 / n as f64;
            let (c2, s2) = ((2.0 * a).cos(), (2.0 * a).sin());
            elements.push(GroupElement {
                matrix: [[c2, s2], [s2, -c2]],
                kind: ElementKind::Reflection { axis_angle: a },
            });
        }
        let g = DihedralGroup { n, center, elements };
        g.check_group_axioms()?;
        Ok(g)
    }

    /// D4 of the unit-square carpets.
    pub fn d4_carpet() -> Self {
        DihedralGroup::new(4, [0.5, 0.5], 0.0).expect("static group")
    }

    /// D8 of the octagasket (centered at the origin, vertices at odd
    /// multiples of pi/8 so the D4 axes run between consecutive copies).
    pub fn d8_octagasket() -> Self {
        DihedralGroup::new(8, [0.0, 0.0], 0.0).expect("static group")
    }

    /// D3 of the gasket triangle presets.
    pub fn d3_gasket() -> Self {
        let centroid = [0.5, 3f64.sqrt() / 6.0];
        DihedralGroup::new(3, centroid, std::f64::consts::PI / 6.0).expect("static group")
    }

    fn check_group_axioms(&self) -> Result<()> {
        let prod = |a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]| {
            let mut c = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                }
            }
            c
        };
        let close = |a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]| {
            (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).abs() < 1e-12))
        };
        for x in &self.elements {
            // Orthogonality and, for reflections, involution.
            let xt = [[x.matrix[0][0], x.matrix[1][0]], [x.matrix[0][1], x.matrix[1][1]]];
            let id = [[1.0, 0.0], [0.0, 1.0]];
            if !close(&prod(&x.matrix, &xt), &id) {
                return Err(Error::numerical("group element is not orthogonal"));
            }
            if let ElementKind::Reflection { .. } = x.kind {
                if !close(&prod(&x.matrix, &x.matrix), &id) {
                    return Err(Error::numerical("reflection is not an involution"));
                }
            }
            // Closure.
            for y in &self.elements {
                let m = prod(&x.matrix, &y.matrix);
                if !self.elements.iter().any(|z| close(&z.matrix, &m)) {
                    return Err(Error::numerical("group is not closed"));
                }
            }
        }
        Ok(())
    }

    fn reflection_at(&self, angle: f64) -> Option<usize> {
        let tau = std::f64::consts::PI;
        self.elements.iter().position(|e| match e.kind {
            ElementKind::Reflection { axis_angle } => {
                let mut d = (axis_angle - angle) % tau;
                if d < 0.0 {
                    d += tau;
                }
                d < 1e-9 || (tau - d) < 1e-9
            }
            _ => false,
        })
    }

    /// Reflection about the horizontal axis through the center.
    pub fn rho_h(&self) -> usize {
        self.reflection_at(0.0).expect("rho_H present")
    }

    /// Reflection about the vertical axis.
    pub fn rho_v(&self) -> usize {
        self.reflection_at(std::f64::consts::FRAC_PI_2).expect("rho_V present")
    }

    /// Main-diagonal reflection (axis at pi/4).
    pub fn rho_d1(&self) -> usize {
        self.reflection_at(std::f64::consts::FRAC_PI_4).expect("rho_D' present")
    }

    /// Anti-diagonal reflection (axis at 3 pi/4).
    pub fn rho_d2(&self) -> usize {
        self.reflection_at(3.0 * std::f64::consts::FRAC_PI_4).expect("rho_D'' present")
    }

    /// For D8: a representative reflection outside the D4 subset.
    pub fn rho_other(&self) -> usize {
        self.reflection_at(std::f64::consts::PI / 8.0).expect("pi/8 reflection present")
    }

    /// Rotation by 2 pi / n.
    pub fn rotation_one(&self) -> usize {
        self.elements
            .iter()
            .position(|e| matches!(e.kind, ElementKind::Rotation { k: 1 }))
            .expect("rotation present")
    }
}

/// Vertex permutations realizing the group action on a mesh; `perms[g][i]`
/// is the index of the image of vertex `i` under element `g`.
#[derive(Clone, Debug)]
pub struct VertexAction {
    pub group: DihedralGroup,
    pub perms: Vec<Vec<usize>>,
}

/// Computes the permutation action of the group on the mesh vertices,
/// failing when an image vertex has no match (asymmetric mesh). Also checks
/// that every permutation preserves the triangle set.
pub fn vertex_action(group: &DihedralGroup, mesh: &TriMesh) -> Result<VertexAction> {
    let tol = 1e-10 * mesh.diameter().max(1.0);
    let quant = |p: Point| ((p[0] / tol).round() as i64, (p[1] / tol).round() as i64);
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    for (i, &p) in mesh.vertices.iter().enumerate() {
        index.insert(quant(p), i);
    }
    let lookup = |p: Point| -> Option<usize> {
        let (qx, qy) = quant(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(&i) = index.get(&(qx + dx, qy + dy)) {
                    let c = mesh.vertices[i];
                    if (c[0] - p[0]).hypot(c[1] - p[1]) <= tol {
                        return Some(i);
                    }
                }
            }
        }
        None
    };
    let mut tri_set: std::collections::HashSet<[usize; 3]> = std::collections::HashSet::new();
    for t in &mesh.triangles {
        let mut s = *t;
        s.sort_unstable();
        tri_set.insert(s);
    }
    let mut perms = Vec::with_capacity(group.elements.len());
    for e in &group.elements {
        let mut perm = Vec::with_capacity(mesh.vertices.len());
        for &p in &mesh.vertices {
            let img = e.apply(group.center, p);
            let i = lookup(img).ok_or_else(|| {
                Error::invalid("mesh is not symmetric under the requested group")
            })?;
            perm.push(i);
        }
        for t in &mesh.triangles {
            let mut s = [perm[t[0]], perm[t[1]], perm[t[2]]];
            s.sort_unstable();
            if !tri_set.contains(&s) {
                return Err(Error::invalid("group action does not preserve the triangle set"));
            }
        }
        perms.push(perm);
    }
    Ok(VertexAction { group: group.clone(), perms })
}

impl VertexAction {
    /// Precomposition `u o g`: `(u o g)(x_i) = u(g x_i)`.
    pub fn apply(&self, g: usize, v: &[f64]) -> Vec<f64> {
        self.perms[g].iter().map(|&j| v[j]).collect()
    }

    /// M-inner product `<u o g, u>_M` (for M-normalized `u` this is the
    /// parity score of a reflection).
    pub fn parity(&self, g: usize, v: &[f64], m: &SparseSym) -> f64 {
        let mv = m.matvec_alloc(v);
        self.perms[g].iter().zip(&mv).map(|(&j, &mi)| v[j] * mi).sum()
    }
}

/// Representation label of an eigencluster.
///
/// For D4 the one-dimensional label `One(s1, s2)` reads: `s1` = parity under
/// the diagonal reflections, `s2` = parity under the horizontal/vertical
/// reflections (so the paper's 1+- is odd under rho_H/rho_V and even under
/// the diagonals). For D8, `s1` = parity under the D4-subset reflections and
/// `s2` = parity under the remaining reflections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepLabel {
    One(bool, bool),
    /// The two-dimensional representation of D4.
    Two,
    /// The three two-dimensional representations of D8.
    Two1,
    Two2,
    Two3,
}

impl fmt::Display for RepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepLabel::One(a, b) => {
                write!(f, "1{}{}", if *a { '+' } else { '-' }, if *b { '+' } else { '-' })
            }
            RepLabel::Two => write!(f, "2"),
            RepLabel::Two1 => write!(f, "2_1"),
            RepLabel::Two2 => write!(f, "2_2"),
            RepLabel::Two3 => write!(f, "2_3"),
        }
    }
}

impl RepLabel {
    pub fn parse(s: &str) -> Result<RepLabel> {
        match s {
            "2" => Ok(RepLabel::Two),
            "2_1" => Ok(RepLabel::Two1),
            "2_2" => Ok(RepLabel::Two2),
            "2_3" => Ok(RepLabel::Two3),
            _ if s.len() == 3 && s.starts_with('1') => {
                let b: Vec<char> = s.chars().collect();
                let sig = |c: char| match c {
                    '+' => Ok(true),
                    '-' => Ok(false),
                    _ => Err(Error::invalid(format!("bad label `{s}`"))),
                };
                Ok(RepLabel::One(sig(b[1])?, sig(b[2])?))
            }
            _ => Err(Error::invalid(format!("bad label `{s}`"))),
        }
    }
}

const PARITY_AMBIGUOUS: f64 = 0.99;

/// M-orthonormalizes a small set of vectors (modified Gram-Schmidt).
fn m_orthonormalize(vectors: &[Vec<f64>], m: &SparseSym) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for q in &out {
            let mq = m.matvec_alloc(q);
            let c: f64 = w.iter().zip(&mq).map(|(a, b)| a * b).sum();
            for (x, y) in w.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
        let mw = m.matvec_alloc(&w);
        let nrm = w.iter().zip(&mw).map(|(a, b)| a * b).sum::<f64>().sqrt();
        if !(nrm > 1e-12) {
            return Err(Error::invalid("cluster vectors are M-degenerate"));
        }
        for x in w.iter_mut() {
            *x /= nrm;
        }
        out.push(w);
    }
    Ok(out)
}

/// Classifies a 1- or 2-dimensional eigencluster by its transformation
/// behavior under the group action. Invariant under scaling, sign flips and
/// M-orthonormal basis changes of the input.
pub fn classify(vectors: &[Vec<f64>], action: &VertexAction, m: &SparseSym) -> Result<RepLabel> {
    let vectors = &m_orthonormalize(vectors, m)?;
    match (vectors.len(), action.group.n) {
        (1, 4) => {
            let v = &vectors[0];
            let p_axis = reflection_parity(action, &[action.group.rho_h(), action.group.rho_v()], v, m)?;
            let p_diag = reflection_parity(action, &[action.group.rho_d1(), action.group.rho_d2()], v, m)?;
            Ok(RepLabel::One(p_diag, p_axis))
        }
        (1, 8) => {
            let g = &action.group;
            let v = &vectors[0];
            let p_d4 =
                reflection_parity(action, &[g.rho_h(), g.rho_v(), g.rho_d1(), g.rho_d2()], v, m)?;
            let p_other = reflection_parity(action, &[g.rho_other()], v, m)?;
            Ok(RepLabel::One(p_d4, p_other))
        }
        (2, 4) => Ok(RepLabel::Two),
        (2, 8) => {
            // Character of the rotation by 2 pi / 8 restricted to the
            // cluster span: sqrt2, 0, -sqrt2 for 2_1, 2_2, 2_3.
            let r = action.group.rotation_one();
            let mut trace = 0.0;
            for v in vectors {
                let rv = action.apply(r, v);
                let mv = m.matvec_alloc(v);
                trace += rv.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>();
            }
            let sqrt2 = 2f64.sqrt();
            let candidates = [(sqrt2, RepLabel::Two1), (0.0, RepLabel::Two2), (-sqrt2, RepLabel::Two3)];
            let mut hits = candidates.iter().filter(|(c, _)| (trace - c).abs() <= 0.05);
            match (hits.next(), hits.next()) {
                (Some((_, label)), None) => Ok(*label),
                _ => Err(Error::numerical(format!(
                    "rotation character {trace} matches no two-dimensional type"
                ))),
            }
        }
        (k, n) => Err(Error::invalid(format!(
            "cannot classify a cluster of size {k} under D_{n}"
        ))),
    }
}

/// Common parity of a set of conjugate reflections; errors when any score is
/// ambiguous or the reflections disagree.
fn reflection_parity(action: &VertexAction, refls: &[usize], v: &[f64], m: &SparseSym) -> Result<bool> {
    let mut sign: Option<bool> = None;
    for &g in refls {
        let score = action.parity(g, v, m);
        if score.abs() < PARITY_AMBIGUOUS {
            return Err(Error::numerical(format!(
                "parity score {score} is ambiguous; cluster may be mixed or tau misconfigured"
            )));
        }
        let s = score > 0.0;
        if let Some(prev) = sign {
            if prev != s {
                return Err(Error::numerical("conjugate reflections disagree on parity"));
            }
        }
        sign = Some(s);
    }
    Ok(sign.expect("nonempty reflection set"))
}

/// Rotates an M-orthonormal 2-cluster basis to the parity-adapted basis
/// used by the miniaturization patterns:
/// for D4 rep 2 (and D8 2_1/2_3): `rho_D'' u = u = -rho_D' u`, `v = u o rho_H`;
/// for D8 2_2: `u o rho_H = u`, `v` the odd partner.
pub fn adapt_basis(
    vectors: &[Vec<f64>],
    label: RepLabel,
    action: &VertexAction,
    m: &SparseSym,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if vectors.len() != 2 {
        return Err(Error::invalid("basis adaptation needs a 2-cluster"));
    }
    let vectors = &m_orthonormalize(vectors, m)?;
    let g = &action.group;
    let refl = match label {
        RepLabel::Two | RepLabel::Two1 | RepLabel::Two3 => g.rho_d2(),
        RepLabel::Two2 => g.rho_h(),
        RepLabel::One(..) => return Err(Error::invalid("one-dimensional label has no 2-basis")),
    };
    // 2x2 matrix of the reflection restricted to the span.
    let mut s = [[0.0f64; 2]; 2];
    let mv: Vec<Vec<f64>> = vectors.iter().map(|v| m.matvec_alloc(v)).collect();
    for (i, v) in vectors.iter().enumerate() {
        let rv = action.apply(refl, v);
        for j in 0..2 {
            s[j][i] = rv.iter().zip(&mv[j]).map(|(a, b)| a * b).sum();
        }
    }
    // Symmetric involution: eigenvector for +1 within the span.
    let sym = nalgebra::Matrix2::new(
        s[0][0],
        0.5 * (s[0][1] + s[1][0]),
        0.5 * (s[0][1] + s[1][0]),
        s[1][1],
    );
    let eig = sym.symmetric_eigen();
    let plus = if eig.eigenvalues[0] > eig.eigenvalues[1] { 0 } else { 1 };
    if (eig.eigenvalues[plus] - 1.0).abs() > 0.05 || (eig.eigenvalues[1 - plus] + 1.0).abs() > 0.05 {
        return Err(Error::numerical(
            "cluster span is not invariant under the adapting reflection",
        ));
    }
    let n = vectors[0].len();
    let combine = |c0: f64, c1: f64| -> Vec<f64> {
        (0..n).map(|i| c0 * vectors[0][i] + c1 * vectors[1][i]).collect()
    };
    let u = combine(eig.eigenvectors[(0, plus)], eig.eigenvectors[(1, plus)]);
    let v = match label {
        RepLabel::Two2 => combine(eig.eigenvectors[(0, 1 - plus)], eig.eigenvectors[(1, 1 - plus)]),
        _ => action.apply(g.rho_h(), &u),
    };
    Ok((u, v))
}
