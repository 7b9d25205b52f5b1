//! Symmetric sparse matrices (upper triangle, compressed rows), reverse
//! Cuthill-McKee ordering and an up-looking sparse LDL^T factorization.

use crate::error::{Error, Result};

/// Symmetric matrix stored as the upper triangle in CSR form.
#[derive(Clone, Debug)]
pub struct SparseSym {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseSym {
    /// Accumulates triplets (either triangle) into upper-triangle CSR.
    /// Duplicate entries are summed in their incoming order, so assembly is
    /// bit-reproducible for a fixed triplet order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut items: Vec<(usize, usize, f64)> = triplets
            .iter()
            .map(|&(r, c, v)| if r <= c { (r, c, v) } else { (c, r, v) })
            .collect();
        items.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut counts = vec![0usize; n];
        let mut i = 0;
        while i < items.len() {
            let (r, c, mut v) = items[i];
            let mut j = i + 1;
            while j < items.len() && items[j].0 == r && items[j].1 == c {
                v += items[j].2;
                j += 1;
            }
            counts[r] += 1;
            col_idx.push(c);
            values.push(v);
            i = j;
        }
        row_ptr[0] = 0;
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        SparseSym { n, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// y = A x using the symmetric expansion of the stored upper triangle.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for i in 0..self.n {
            let xi = x[i];
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                let v = self.values[p];
                acc += v * x[j];
                if j != i {
                    y[j] += v * xi;
                }
            }
            y[i] += acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[p] == i {
                    d[i] += self.values[p];
                }
            }
        }
        d
    }

    /// A + s B over the union pattern.
    pub fn add_scaled(&self, s: f64, other: &SparseSym) -> SparseSym {
        assert_eq!(self.n, other.n);
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                triplets.push((i, self.col_idx[p], self.values[p]));
            }
            for p in other.row_ptr[i]..other.row_ptr[i + 1] {
                triplets.push((i, other.col_idx[p], s * other.values[p]));
            }
        }
        SparseSym::from_triplets(self.n, &triplets)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                m[(i, j)] += self.values[p];
                if i != j {
                    m[(j, i)] += self.values[p];
                }
            }
        }
        m
    }

    /// Undirected adjacency lists of the off-diagonal pattern.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                if j != i {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// Reverse Cuthill-McKee ordering; returns `order` with `order[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs = |start: usize, visited_scratch: &mut Vec<bool>| -> Vec<usize> {
        visited_scratch.fill(false);
        let mut queue = std::collections::VecDeque::new();
        let mut out = Vec::new();
        visited_scratch[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            out.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited_scratch[v]).collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                if !visited_scratch[v] {
                    visited_scratch[v] = true;
                    queue.push_back(v);
                }
            }
        }
        out
    };

    let mut scratch = vec![false; n];
    for s in 0..n {
        if visited[s] {
            continue;
        }
        // Pseudo-peripheral start: two BFS sweeps from the component's
        // minimum-degree node.
        let mut comp_start = s;
        let comp = bfs(comp_start, &mut scratch);
        let comp: Vec<usize> = comp.into_iter().filter(|&v| !visited[v]).collect();
        if let Some(&mind) = comp.iter().min_by_key(|&&v| (degree[v], v)) {
            comp_start = mind;
        }
        for _ in 0..2 {
            let sweep = bfs(comp_start, &mut scratch);
            let sweep: Vec<usize> = sweep.into_iter().filter(|&v| !visited[v]).collect();
            if let Some(&last) = sweep.last() {
                comp_start = last;
            }
        }
        for v in bfs(comp_start, &mut scratch) {
            if !visited[v] {
                visited[v] = true;
                order.push(v);
            }
        }
    }
    order.reverse();
    order
}

/// Sparse LDL^T factorization of a symmetric matrix with a fill-reducing
/// RCM permutation; valid for positive definite input (no pivoting).
pub struct LdltFactor {
    n: usize,
    /// order[new] = old
    order: Vec<usize>,
    inv: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdltFactor {
    pub fn new(a: &SparseSym) -> Result<Self> {
        let n = a.n;
        let order = reverse_cuthill_mckee(&a.adjacency());
        let mut inv = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }

        // Permuted upper triangle in column-compressed form: for the
        // up-looking factorization we need, for each k, the entries
        // B(i, k) with i <= k.
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[p];
                let v = a.values[p];
                let (ni, nj) = (inv[i], inv[j]);
                let (r, c) = if ni <= nj { (ni, nj) } else { (nj, ni) };
                cols[c].push((r, v));
            }
        }
        for c in &mut cols {
            c.sort_unstable_by_key(|e| e.0);
        }

        // Symbolic: elimination tree and column counts.
        let mut parent = vec![usize::MAX; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &(i0, _) in &cols[k] {
                let mut i = i0;
                while i < k && flag[i] != k {
                    if parent[i] == usize::MAX {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let nnz_l = lp[n];
        let mut li = vec![0usize; nnz_l];
        let mut lx = vec![0f64; nnz_l];
        let mut d = vec![0f64; n];

        // Numeric, up-looking row by row.
        let mut y = vec![0f64; n];
        let mut pattern = vec![0usize; n];
        let mut lfill = lp.clone(); // next free slot per column
        for k in 0..n {
            flag[k] = k;
            let mut top = n;
            y[k] = 0.0;
            for &(i0, v) in &cols[k] {
                y[i0] += v;
                let mut i = i0;
                let mut len = 0;
                while i < k && flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                // Push path in reverse so `pattern[top..]` is etree-ascending.
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for t in top..n {
                let i = pattern[t];
                let yi = y[i];
                y[i] = 0.0;
                for p in lp[i]..lfill[i] {
                    y[li[p]] -= lx[p] * yi;
                }
                let lki = yi / d[i];
                d[k] -= lki * yi;
                li[lfill[i]] = k;
                lx[lfill[i]] = lki;
                lfill[i] += 1;
            }
            if !(d[k].is_finite()) || d[k] <= 0.0 {
                return Err(Error::numerical(format!(
                    "LDLT factorization failed at pivot {k}: matrix is not positive definite"
                )));
            }
        }

        Ok(LdltFactor { n, order, inv, lp, li, lx, d })
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|k| b[self.order[k]]).collect();
        for k in 0..n {
            let yk = y[k];
            for p in self.lp[k]..self.lp[k + 1] {
                y[self.li[p]] -= self.lx[p] * yk;
            }
        }
        for k in 0..n {
            y[k] /= self.d[k];
        }
        for k in (0..n).rev() {
            let mut acc = y[k];
            for p in self.lp[k]..self.lp[k + 1] {
                acc -= self.lx[p] * y[self.li[p]];
            }
            y[k] = acc;
        }
        let mut x = vec![0f64; n];
        for k in 0..n {
            x[self.order[k]] = y[k];
        }
        x
    }

    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }

    pub fn inverse_permutation(&self) -> &[usize] {
        &self.inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SparseSym {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SparseSym::from_triplets(n, &t)
    }

    #[test]
    fn triplets_accumulate() {
        let a = SparseSym::from_triplets(2, &[(0, 0, 1.0), (1, 0, 0.5), (0, 1, 0.25), (0, 0, 2.0)]);
        let d = a.to_dense();
        assert_eq!(d[(0, 0)], 3.0);
        assert_eq!(d[(0, 1)], 0.75);
        assert_eq!(d[(1, 0)], 0.75);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = laplacian_1d(7);
        let x: Vec<f64> = (0..7).map(|i| (i as f64).sin() + 1.0).collect();
        let y = a.matvec_alloc(&x);
        let yd = a.to_dense() * nalgebra::DVector::from_vec(x.clone());
        for i in 0..7 {
            assert!((y[i] - yd[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn ldlt_solves() {
        let a = laplacian_1d(50);
        // Shift to make it strictly SPD-ish away from machine noise.
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).cos()).collect();
        let f = LdltFactor::new(&a).unwrap();
        let x = f.solve(&b);
        let r = a.matvec_alloc(&x);
        for i in 0..50 {
            assert!((r[i] - b[i]).abs() < 1e-10, "residual at {i}");
        }
    }

    #[test]
    fn ldlt_rejects_indefinite() {
        let a = SparseSym::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(LdltFactor::new(&a).is_err());
    }

    #[test]
    fn rcm_reduces_bandwidth() {
        // A path graph numbered badly: RCM recovers a small bandwidth.
        let n = 64;
        let scramble: Vec<usize> = (0..n).map(|i| (i * 37) % n).collect();
        let mut t = Vec::new();
        for i in 0..n {
            t.push((scramble[i], scramble[i], 2.0));
            if i + 1 < n {
                t.push((scramble[i], scramble[i + 1], -1.0));
            }
        }
        let a = SparseSym::from_triplets(n, &t);
        let order = reverse_cuthill_mckee(&a.adjacency());
        let mut inv = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        let mut bw = 0usize;
        for i in 0..n {
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[p];
                bw = bw.max(inv[i].abs_diff(inv[j]));
            }
        }
        assert!(bw <= 2, "bandwidth {bw}");
    }
}
