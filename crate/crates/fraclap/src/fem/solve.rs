//! Lowest eigenpairs of the pencil `K v = lambda M v`: dense reduction
//! through a Cholesky factor of `M` for small systems, shift-invert block
//! Lanczos with a sparse LDL^T factorization above the cutoff.

use super::sparse::{LdltFactor, SparseSym};
use super::{EigenPair, Spectrum, SpectrumMeta};
use crate::error::{Error, Result};
use crate::rng::splitmix64;
use nalgebra::DMatrix;

/// Systems at most this large are solved by dense reduction.
pub const DENSE_CUTOFF: usize = 3000;
/// Basis-size budget for the Lanczos path.
pub const MAX_BASIS: usize = 510;
/// Lanczos block size; covers the multiplicity-2 eigenspaces that the
/// dihedral symmetries force, with one spare direction.
const BLOCK: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverPath {
    Dense,
    ShiftInvertLanczos,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub dense_cutoff: usize,
    pub force_path: Option<SolverPath>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-9, dense_cutoff: DENSE_CUTOFF, force_path: None }
    }
}

/// Returns the `nev` algebraically smallest eigenpairs of `K v = lambda M v`
/// in ascending order, M-orthonormal, with deterministic output for fixed
/// inputs.
pub fn solve_lowest(k: &SparseSym, m: &SparseSym, nev: usize, opts: &SolveOptions) -> Result<Spectrum> {
    if nev == 0 {
        return Err(Error::invalid("need at least one eigenpair"));
    }
    if k.n != m.n {
        return Err(Error::invalid("stiffness and mass dimensions differ"));
    }
    if nev > k.n {
        return Err(Error::invalid(format!("requested {nev} eigenpairs of a {}-dim system", k.n)));
    }
    let path = opts.force_path.unwrap_or(if k.n <= opts.dense_cutoff {
        SolverPath::Dense
    } else {
        SolverPath::ShiftInvertLanczos
    });
    let mut pairs = match path {
        SolverPath::Dense => dense_lowest(k, m, nev)?,
        SolverPath::ShiftInvertLanczos => lanczos_lowest(k, m, nev, opts)?,
    };
    for p in &mut pairs {
        fix_sign(&mut p.vector);
    }
    let residuals: Vec<f64> = pairs.iter().map(|p| super::residual(k, m, p.value, &p.vector)).collect();
    Ok(Spectrum {
        level: 0,
        refinement: 0,
        pairs,
        residuals,
        meta: SpectrumMeta::default(),
    })
}

/// Sign convention: the first component of largest absolute value is
/// positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn dense_lowest(k: &SparseSym, m: &SparseSym, nev: usize) -> Result<Vec<EigenPair>> {
    let kd = k.to_dense();
    let md = m.to_dense();
    let chol = md
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("mass matrix is not positive definite"))?;
    let l = chol.l();
    // C = L^-1 K L^-T, symmetrized.
    let y = l.solve_lower_triangular(&kd).ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut idx: Vec<usize> = (0..k.n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut out = Vec::with_capacity(nev);
    for &i in idx.iter().take(nev) {
        let y = eig.eigenvectors.column(i).into_owned();
        let x = l
            .tr_solve_lower_triangular(&y)
            .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
        out.push(EigenPair { value: eig.eigenvalues[i], vector: x.as_slice().to_vec() });
    }
    Ok(out)
}

/// Shift-invert block Lanczos in the M-inner product with full
/// reorthogonalization. The operator is `(K + s M)^-1 M` with `s > 0`, whose
/// eigenvalues `1/(lambda + s)` put the smallest `lambda` first.
fn lanczos_lowest(k: &SparseSym, m: &SparseSym, nev: usize, opts: &SolveOptions) -> Result<Vec<EigenPair>> {
    let n = k.n;
    let shift = lanczos_shift(k, m, nev);
    let a = k.add_scaled(shift, m);
    let factor = LdltFactor::new(&a)
        .map_err(|e| Error::numerical(format!("shift-invert factorization failed: {e}")))?;

    let b = BLOCK.min(n);
    let max_basis = MAX_BASIS.min(n);
    let kscale = k.diag().iter().cloned().fold(0.0f64, |acc, d| acc.max(d.abs())).max(1e-300);

    // Deterministic start block.
    let mut seed = 0x5EED_0BA5Eu64 ^ (n as u64);
    let mut new_random = |seed: &mut u64| -> Vec<f64> {
        (0..n).map(|_| (splitmix64(seed) >> 11) as f64 / (1u64 << 53) as f64 - 0.5).collect()
    };

    // Basis stored column-flat; mv_cache holds M * column for reorthogonalization.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut diag_blocks: Vec<DMatrix<f64>> = Vec::new();
    let mut off_blocks: Vec<DMatrix<f64>> = Vec::new();

    // M-orthonormalizes `cols` against the basis and internally; returns the
    // kept columns and the Gram factor R with `cols ~ kept * R`.
    let orthonormalize = |cols: &mut Vec<Vec<f64>>,
                          basis: &Vec<Vec<f64>>,
                          m: &SparseSym,
                          seed: &mut u64,
                          new_random: &mut dyn FnMut(&mut u64) -> Vec<f64>|
     -> (Vec<Vec<f64>>, DMatrix<f64>) {
        let bsz = cols.len();
        // Two passes of classical Gram-Schmidt against the existing basis.
        for _ in 0..2 {
            for c in cols.iter_mut() {
                let mc = m.matvec_alloc(c);
                for q in basis.iter() {
                    let coef: f64 = q.iter().zip(&mc).map(|(a, b)| a * b).sum();
                    for (x, y) in c.iter_mut().zip(q) {
                        *x -= coef * y;
                    }
                }
            }
        }
        // Symmetric orthonormalization within the block via the Gram matrix.
        let mut gram = DMatrix::zeros(bsz, bsz);
        let mcols: Vec<Vec<f64>> = cols.iter().map(|c| m.matvec_alloc(c)).collect();
        for i in 0..bsz {
            for j in 0..bsz {
                gram[(i, j)] = cols[i].iter().zip(&mcols[j]).map(|(a, b)| a * b).sum();
            }
        }
        let gram = (&gram + gram.transpose()) * 0.5;
        let eig = gram.symmetric_eigen();
        let gmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(bsz);
        let mut r = DMatrix::zeros(bsz, bsz);
        let mut slot = 0usize;
        for i in 0..bsz {
            let lam = eig.eigenvalues[i];
            if lam > 1e-24 * gmax && lam > 0.0 {
                let scale = lam.sqrt();
                let mut col = vec![0.0; n];
                for (j, cj) in cols.iter().enumerate() {
                    let w = eig.eigenvectors[(j, i)];
                    for (x, y) in col.iter_mut().zip(cj) {
                        *x += w * y;
                    }
                }
                for x in col.iter_mut() {
                    *x /= scale;
                }
                // R row: contribution of this direction to the original cols.
                for j in 0..bsz {
                    r[(slot, j)] = scale * eig.eigenvectors[(j, i)];
                }
                kept.push(col);
                slot += 1;
            }
        }
        // Replace lost directions with fresh deterministic vectors; if the
        // space is exhausted this fails and the caller finalizes.
        let mut attempts = 0;
        while kept.len() < bsz && attempts < 8 * bsz {
            attempts += 1;
            let mut c = new_random(seed);
            for _ in 0..2 {
                let mc = m.matvec_alloc(&c);
                for q in basis.iter().chain(kept.iter()) {
                    let coef: f64 = q.iter().zip(&mc).map(|(a, b)| a * b).sum();
                    for (x, y) in c.iter_mut().zip(q) {
                        *x -= coef * y;
                    }
                }
            }
            let mc = m.matvec_alloc(&c);
            let norm: f64 = c.iter().zip(&mc).map(|(a, b)| a * b).sum::<f64>().sqrt();
            if norm > 1e-150 {
                for x in c.iter_mut() {
                    *x /= norm;
                }
                kept.push(c);
                // R row stays zero: the direction carries no component of W.
            }
        }
        (kept, r)
    };

    // Initial block.
    let mut x_cols: Vec<Vec<f64>> = (0..b).map(|_| new_random(&mut seed)).collect();
    let (x0, _) = orthonormalize(&mut x_cols, &basis, m, &mut seed, &mut new_random);
    basis.extend(x0);

    let mut converged: Option<Vec<EigenPair>> = None;
    let mut steps = 0usize;
    while basis.len() < max_basis {
        steps += 1;
        let nb = basis.len();
        let cur = &basis[nb - b..];

        // W = Op(X_j)
        let mut w: Vec<Vec<f64>> = cur.iter().map(|c| factor.solve(&m.matvec_alloc(c))).collect();

        // A_j = X_j^T M W
        let mw: Vec<Vec<f64>> = w.iter().map(|c| m.matvec_alloc(c)).collect();
        let mut a_j = DMatrix::zeros(b, b);
        for i in 0..b {
            for j in 0..b {
                a_j[(i, j)] = cur[i].iter().zip(&mw[j]).map(|(x, y)| x * y).sum();
            }
        }
        let a_j = (&a_j + a_j.transpose()) * 0.5;
        diag_blocks.push(a_j);

        // Remove current and previous blocks, then full reorthogonalization
        // (handled inside orthonormalize), then extend the basis.
        let (xnext, r) = orthonormalize(&mut w, &basis, m, &mut seed, &mut new_random);
        off_blocks.push(r);
        let exhausted = xnext.len() < b;
        basis.extend(xnext);
        if exhausted {
            // The Krylov space is invariant; the extraction is exact.
            let pairs = extract_ritz(
                k, m, &basis, &diag_blocks, &off_blocks, b, nev, shift, f64::INFINITY, kscale,
            )?
            .ok_or_else(|| Error::numerical("invariant subspace smaller than requested count"))?;
            converged = Some(pairs);
            break;
        }

        let enough = basis.len() >= (nev + b).min(n);
        let check_now = enough && (steps % 4 == 0 || basis.len() + b > max_basis || basis.len() >= n);
        if check_now {
            if let Some(pairs) =
                extract_ritz(k, m, &basis, &diag_blocks, &off_blocks, b, nev, shift, opts.tol, kscale)?
            {
                converged = Some(pairs);
                break;
            }
        }
        if basis.len() >= n {
            // Krylov space exhausted: the extraction is exact.
            let pairs = extract_ritz(
                k, m, &basis, &diag_blocks, &off_blocks, b, nev, shift, f64::INFINITY, kscale,
            )?
            .expect("exhaustive basis must yield eigenpairs");
            converged = Some(pairs);
            break;
        }
    }

    match converged {
        Some(pairs) => Ok(pairs),
        None => {
            // One final attempt at the basis cap before giving up.
            if let Some(pairs) =
                extract_ritz(k, m, &basis, &diag_blocks, &off_blocks, b, nev, shift, opts.tol, kscale)?
            {
                Ok(pairs)
            } else {
                Err(Error::numerical(format!(
                    "Lanczos did not converge {nev} eigenpairs within a basis of {}",
                    basis.len()
                )))
            }
        }
    }
}

/// Weyl-calibrated negative shift: `K + s M` stays positive definite and
/// `s` lands near the middle of the wanted eigenvalue range.
fn lanczos_shift(k: &SparseSym, m: &SparseSym, nev: usize) -> f64 {
    let area: f64 = m.diag().iter().sum::<f64>().max(1e-300) * 3.0; // row sums of M total the area
    let weyl = 4.0 * std::f64::consts::PI * (nev.max(8) as f64) / area;
    let kscale = k.diag().iter().cloned().fold(0.0f64, f64::max);
    (weyl * 0.5).max(1e-9 * kscale).max(1e-300)
}

#[allow(clippy::too_many_arguments)]
fn extract_ritz(
    k: &SparseSym,
    m: &SparseSym,
    basis: &[Vec<f64>],
    diag_blocks: &[DMatrix<f64>],
    off_blocks: &[DMatrix<f64>],
    b: usize,
    nev: usize,
    shift: f64,
    tol: f64,
    kscale: f64,
) -> Result<Option<Vec<EigenPair>>> {
    let nblocks = diag_blocks.len();
    let msz = nblocks * b;
    let msz = msz.min(basis.len());
    if msz < nev {
        return Ok(None);
    }
    let mut t = DMatrix::zeros(msz, msz);
    for (jb, a) in diag_blocks.iter().enumerate() {
        for i in 0..b {
            for j in 0..b {
                let (r, c) = (jb * b + i, jb * b + j);
                if r < msz && c < msz {
                    t[(r, c)] = a[(i, j)];
                }
            }
        }
    }
    for (jb, r) in off_blocks.iter().enumerate() {
        // Block row jb+1, block column jb: entries R with W_j ~ X_{j+1} R.
        for i in 0..b {
            for j in 0..b {
                let (rr, cc) = ((jb + 1) * b + i, jb * b + j);
                if rr < msz && cc < msz {
                    t[(rr, cc)] = r[(i, j)];
                    t[(cc, rr)] = r[(i, j)];
                }
            }
        }
    }
    let eig = t.symmetric_eigen();
    // Largest theta of the shift-inverted operator = smallest lambda.
    let mut idx: Vec<usize> = (0..msz).collect();
    idx.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    let n = basis[0].len();
    let mut pairs = Vec::with_capacity(nev);
    for &i in idx.iter().take(nev) {
        let theta = eig.eigenvalues[i];
        if theta <= 0.0 {
            return Ok(None); // spurious direction; keep iterating
        }
        let lambda = 1.0 / theta - shift;
        let mut v = vec![0.0; n];
        for (jcol, col) in basis.iter().enumerate().take(msz) {
            let w = eig.eigenvectors[(jcol, i)];
            if w != 0.0 {
                for (x, y) in v.iter_mut().zip(col) {
                    *x += w * y;
                }
            }
        }
        // M-normalize.
        let mv = m.matvec_alloc(&v);
        let nrm = v.iter().zip(&mv).map(|(a, c)| a * c).sum::<f64>().sqrt();
        if !(nrm > 0.0) {
            return Ok(None);
        }
        for x in v.iter_mut() {
            *x /= nrm;
        }
        pairs.push(EigenPair { value: lambda, vector: v });
    }
    pairs.sort_by(|a, c| a.value.total_cmp(&c.value));

    if tol.is_finite() {
        for p in &pairs {
            let kv = k.matvec_alloc(&p.vector);
            let mv = m.matvec_alloc(&p.vector);
            let mut num = 0.0f64;
            let mut nk = 0.0f64;
            let mut nm = 0.0f64;
            let mut nv = 0.0f64;
            for i in 0..kv.len() {
                let r = kv[i] - p.value * mv[i];
                num += r * r;
                nk += kv[i] * kv[i];
                nm += mv[i] * mv[i];
                nv += p.vector[i] * p.vector[i];
            }
            let num = num.sqrt();
            let den = nk.sqrt() + p.value.abs() * nm.sqrt();
            let floor = kscale * nv.sqrt();
            if num > tol * den && num > tol * floor {
                return Ok(None);
            }
        }
    }
    Ok(Some(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use crate::geometry::{build_domain, make_preset, Preset};
    use crate::mesh::{refine, triangulate};
    use std::f64::consts::PI;

    fn square_system(refines: u32) -> (SparseSym, SparseSym) {
        let (ifs, base) = make_preset(&Preset::IntervalSquare).unwrap();
        let d = build_domain(&ifs, &base, 0).unwrap();
        let mut mesh = triangulate(&d, 2).unwrap();
        for _ in 0..refines {
            mesh = refine(&mesh);
        }
        assemble(&mesh).unwrap()
    }

    #[test]
    fn dense_square_neumann() {
        let (k, m) = square_system(2);
        let s = solve_lowest(&k, &m, 6, &SolveOptions::default()).unwrap();
        let vals = s.values();
        assert!(vals[0].abs() < 1e-8, "lambda0 = {}", vals[0]);
        // pi^2 double, 2 pi^2 simple at a few percent on this mesh.
        assert!((vals[1] / (PI * PI) - 1.0).abs() < 0.02);
        assert!((vals[2] / (PI * PI) - 1.0).abs() < 0.02);
        assert!((vals[3] / (2.0 * PI * PI) - 1.0).abs() < 0.03);
        // Residuals within tolerance.
        assert!(s.residuals.iter().all(|&r| r < 1e-8));
    }

    #[test]
    fn paths_agree() {
        let (k, m) = square_system(1);
        let dense = solve_lowest(&k, &m, 8, &SolveOptions::default()).unwrap();
        let iter = solve_lowest(
            &k,
            &m,
            8,
            &SolveOptions { force_path: Some(SolverPath::ShiftInvertLanczos), ..Default::default() },
        )
        .unwrap();
        for (a, b) in dense.values().iter().zip(iter.values()) {
            let scale = a.abs().max(1.0);
            assert!((a - b).abs() <= 1e-8 * scale, "dense {a} vs lanczos {b}");
        }
    }

    #[test]
    fn orthonormality_block() {
        let (k, m) = square_system(1);
        let s = solve_lowest(
            &k,
            &m,
            6,
            &SolveOptions { force_path: Some(SolverPath::ShiftInvertLanczos), ..Default::default() },
        )
        .unwrap();
        for i in 0..s.pairs.len() {
            let mv = m.matvec_alloc(&s.pairs[i].vector);
            for j in 0..s.pairs.len() {
                let dot: f64 = s.pairs[j].vector.iter().zip(&mv).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= 1e-8, "gram[{i},{j}] = {dot}");
            }
        }
    }

    #[test]
    fn disconnected_mesh_kernel_dimension() {
        // Two separate unit squares: exactly two near-zero eigenvalues.
        use crate::geometry::{Cell, CellDomain, IteratedFunctionSystem};
        let cells = vec![
            Cell {
                polygon: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
                word: vec![0],
            },
            Cell {
                polygon: vec![[2.0, 0.0], [3.0, 0.0], [3.0, 1.0], [2.0, 1.0]],
                word: vec![1],
            },
        ];
        let ifs = IteratedFunctionSystem::new(
            vec![crate::geometry::AffineMap::scale_translate(0.5, [0.0, 0.0]).unwrap()],
            "pair_of_squares",
        )
        .unwrap();
        let d = CellDomain {
            level: 1,
            base: cells[0].polygon.clone(),
            cells,
            ifs,
            carpet_spec: None,
        };
        let mesh = triangulate(&d, 2).unwrap();
        let (k, m) = assemble(&mesh).unwrap();
        let s = solve_lowest(&k, &m, 4, &SolveOptions::default()).unwrap();
        let vals = s.values();
        assert!(vals[0].abs() < 1e-8 && vals[1].abs() < 1e-8);
        assert!(vals[2] > 1.0);
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert!(v[1] > 0.0);
        let mut w = vec![0.1, 0.9, -0.3];
        fix_sign(&mut w);
        assert!(w[1] > 0.0 && w[0] > 0.0);
    }

    #[test]
    fn invalid_requests() {
        let (k, m) = square_system(0);
        assert!(solve_lowest(&k, &m, 0, &SolveOptions::default()).is_err());
        assert!(solve_lowest(&k, &m, k.n + 1, &SolveOptions::default()).is_err());
    }
}
