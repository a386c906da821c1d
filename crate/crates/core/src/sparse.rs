//! Compressed sparse column matrices and an LDL^T factorization for
//! quasi-definite systems, used by the QP solver's linear algebra.

const NONE: usize = usize::MAX;

/// Column-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowind: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.rowind.len()
    }

    /// Build from triplets, summing duplicates. Triplet order does not matter.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        Self::from_triplets_with_map(nrows, ncols, triplets).0
    }

    /// Like `from_triplets` but also returns, for each input triplet, the
    /// index into `values` its contribution was merged into.
    pub fn from_triplets_with_map(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> (Self, Vec<usize>) {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].1, triplets[k].0));

        let mut colptr = vec![0usize; ncols + 1];
        let mut rowind = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut map = vec![0usize; triplets.len()];
        let mut last: Option<(usize, usize)> = None;

        for &k in &order {
            let (r, c, v) = triplets[k];
            assert!(r < nrows && c < ncols, "triplet out of bounds");
            if last == Some((c, r)) {
                let lv = values.len() - 1;
                values[lv] += v;
                map[k] = lv;
                continue;
            }
            rowind.push(r);
            values.push(v);
            map[k] = values.len() - 1;
            colptr[c + 1] += 1;
            last = Some((c, r));
        }
        // colptr currently holds counts per column; make cumulative
        for c in 0..ncols {
            colptr[c + 1] += colptr[c];
        }
        (
            CscMatrix {
                nrows,
                ncols,
                colptr,
                rowind,
                values,
            },
            map,
        )
    }

    /// y += A x
    pub fn mul_vec_acc(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for c in 0..self.ncols {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for p in self.colptr[c]..self.colptr[c + 1] {
                y[self.rowind[p]] += self.values[p] * xc;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_acc(x, &mut y);
        y
    }

    /// y += A^T x
    pub fn tr_mul_vec_acc(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for c in 0..self.ncols {
            let mut acc = 0.0;
            for p in self.colptr[c]..self.colptr[c + 1] {
                acc += self.values[p] * x[self.rowind[p]];
            }
            y[c] += acc;
        }
    }

    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        self.tr_mul_vec_acc(x, &mut y);
        y
    }

    /// Infinity norm of each column.
    pub fn col_inf_norms(&self) -> Vec<f64> {
        let mut norms = vec![0.0f64; self.ncols];
        for c in 0..self.ncols {
            for p in self.colptr[c]..self.colptr[c + 1] {
                norms[c] = norms[c].max(self.values[p].abs());
            }
        }
        norms
    }

    /// Infinity norm of each row.
    pub fn row_inf_norms(&self) -> Vec<f64> {
        let mut norms = vec![0.0f64; self.nrows];
        for p in 0..self.nnz() {
            norms[self.rowind[p]] = norms[self.rowind[p]].max(self.values[p].abs());
        }
        norms
    }

    /// Scale in place: A <- diag(dr) * A * diag(dc).
    pub fn scale(&mut self, dr: &[f64], dc: &[f64]) {
        for c in 0..self.ncols {
            for p in self.colptr[c]..self.colptr[c + 1] {
                self.values[p] *= dr[self.rowind[p]] * dc[c];
            }
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for c in 0..self.ncols {
            for p in self.colptr[c]..self.colptr[c + 1] {
                t.push((self.rowind[p], c, self.values[p]));
            }
        }
        t
    }
}

/// Reverse Cuthill-McKee ordering of a symmetric sparsity pattern given as an
/// upper-triangular CSC matrix. Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(n: usize, upper: &CscMatrix) -> Vec<usize> {
    // adjacency (excluding diagonal)
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for c in 0..upper.ncols {
        for p in upper.colptr[c]..upper.colptr[c + 1] {
            let r = upper.rowind[p];
            if r != c {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();

    loop {
        // lowest-degree unvisited node starts the next component
        let start = match (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
        {
            Some(s) => s,
            None => break,
        };
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_by_key(|&u| (degree[u], u));
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// LDL^T factorization of a symmetric quasi-definite matrix supplied as its
/// upper triangle in CSC form (diagonal entries must be present).
pub struct LdlFactor {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LdlError {
    ZeroPivot(usize),
    NotUpperTriangular,
}

impl LdlFactor {
    pub fn new(upper: &CscMatrix) -> Result<Self, LdlError> {
        let n = upper.ncols;
        assert_eq!(upper.nrows, n);

        // elimination tree and column counts
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![NONE; n];
        for k in 0..n {
            flag[k] = k;
            for p in upper.colptr[k]..upper.colptr[k + 1] {
                let mut i = upper.rowind[p];
                if i > k {
                    return Err(LdlError::NotUpperTriangular);
                }
                while i != k && flag[i] != k {
                    if etree[i] == NONE {
                        etree[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = etree[i];
                    if i == NONE {
                        break;
                    }
                }
            }
        }

        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let total = lp[n];
        let mut li = vec![0usize; total];
        let mut lx = vec![0.0f64; total];
        let mut d = vec![0.0f64; n];
        let mut dinv = vec![0.0f64; n];

        let mut lnext = lp.clone();
        let mut y_val = vec![0.0f64; n];
        let mut y_marker = vec![false; n];
        let mut elim_stack = vec![0usize; n];
        let mut topo = vec![0usize; n];

        for k in 0..n {
            let mut topo_len = 0usize;
            d[k] = 0.0;
            for p in upper.colptr[k]..upper.colptr[k + 1] {
                let i = upper.rowind[p];
                let v = upper.values[p];
                if i == k {
                    d[k] = v;
                    continue;
                }
                y_val[i] = v;
                // walk up the etree collecting the unmarked portion of the path
                let mut depth = 0usize;
                let mut node = i;
                while node != NONE && node < k && !y_marker[node] {
                    elim_stack[depth] = node;
                    y_marker[node] = true;
                    depth += 1;
                    node = etree[node];
                }
                // reverse onto topo so ancestors come later
                for s in (0..depth).rev() {
                    topo[topo_len] = elim_stack[s];
                    topo_len += 1;
                }
            }
            // order topo ascending: entries pushed per path are descending in
            // index within a path but paths can interleave; a sort keeps the
            // elimination order valid (children before ancestors).
            topo[..topo_len].sort_unstable();

            for idx in 0..topo_len {
                let i = topo[idx];
                let yi = y_val[i];
                // apply column i of L to the sparse rhs
                for p in lp[i]..lnext[i] {
                    y_val[li[p]] -= lx[p] * yi;
                }
                let lki = yi * dinv[i];
                d[k] -= yi * lki;
                li[lnext[i]] = k;
                lx[lnext[i]] = lki;
                lnext[i] += 1;
                y_val[i] = 0.0;
                y_marker[i] = false;
            }
            if d[k] == 0.0 {
                return Err(LdlError::ZeroPivot(k));
            }
            dinv[k] = 1.0 / d[k];
        }

        Ok(LdlFactor {
            n,
            lp,
            li,
            lx,
            d,
            dinv,
        })
    }

    /// Solve (L D L^T) x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for c in 0..self.n {
            let bc = b[c];
            if bc != 0.0 {
                for p in self.lp[c]..self.lp[c + 1] {
                    b[self.li[p]] -= self.lx[p] * bc;
                }
            }
        }
        for c in 0..self.n {
            b[c] *= self.dinv[c];
        }
        for c in (0..self.n).rev() {
            let mut acc = b[c];
            for p in self.lp[c]..self.lp[c + 1] {
                acc -= self.lx[p] * b[self.li[p]];
            }
            b[c] = acc;
        }
    }

    pub fn diag(&self) -> &[f64] {
        &self.d
    }
}

/// Symmetrically permuted quasi-definite KKT system with refactorization
/// support: the sparsity pattern and value map are built once, values can be
/// refreshed when the regularization diagonal changes.
pub struct KktSystem {
    dim: usize,
    perm: Vec<usize>,
    upper: CscMatrix,
    /// positions in `upper.values` for each source triplet
    value_map: Vec<usize>,
    /// source triplets (row, col, base value) in the unpermuted KKT
    sources: Vec<(usize, usize, f64)>,
    /// indices into `sources` of the n2 lower-right diagonal slots
    rho_slots: Vec<usize>,
    factor: Option<LdlFactor>,
}

impl KktSystem {
    /// K = [P + sigma*I, A^T; A, -diag(1/rho)] built from the upper triangle.
    /// `p_upper` must be the upper triangle of P (n1 x n1), `a` is m x n1.
    pub fn new(p_upper: &CscMatrix, a: &CscMatrix, sigma: f64, rho: &[f64]) -> Self {
        let n1 = p_upper.ncols;
        let m = a.nrows;
        assert_eq!(rho.len(), m);
        let dim = n1 + m;

        let mut sources: Vec<(usize, usize, f64)> = Vec::new();
        // P upper entries
        for (r, c, v) in p_upper.triplets() {
            debug_assert!(r <= c);
            sources.push((r, c, v));
        }
        // sigma on the diagonal (also guarantees diagonal presence)
        for i in 0..n1 {
            sources.push((i, i, sigma));
        }
        // A in the lower-left => upper triangle holds A^T entries (r<n1, c>=n1)
        for (r, c, v) in a.triplets() {
            sources.push((c, n1 + r, v));
        }
        // -1/rho diagonal
        let mut rho_slots = Vec::with_capacity(m);
        for i in 0..m {
            rho_slots.push(sources.len());
            sources.push((n1 + i, n1 + i, -1.0 / rho[i]));
        }

        // ordering computed on the unpermuted pattern
        let pattern_triplets: Vec<(usize, usize, f64)> =
            sources.iter().map(|&(r, c, _)| (r, c, 1.0)).collect();
        let pattern = CscMatrix::from_triplets(dim, dim, &pattern_triplets);
        let perm = rcm_ordering(dim, &pattern);
        let mut iperm = vec![0usize; dim];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // permuted upper triangle
        let permuted: Vec<(usize, usize, f64)> = sources
            .iter()
            .map(|&(r, c, v)| {
                let (pr, pc) = (iperm[r], iperm[c]);
                if pr <= pc {
                    (pr, pc, v)
                } else {
                    (pc, pr, v)
                }
            })
            .collect();
        let (upper, value_map) = CscMatrix::from_triplets_with_map(dim, dim, &permuted);

        KktSystem {
            dim,
            perm,
            upper,
            value_map,
            sources,
            rho_slots,
            factor: None,
        }
    }

    /// Refresh the -1/rho diagonal and refactorize.
    pub fn update_rho(&mut self, rho: &[f64]) -> Result<(), LdlError> {
        assert_eq!(rho.len(), self.rho_slots.len());
        for (i, &slot) in self.rho_slots.iter().enumerate() {
            self.sources[slot].2 = -1.0 / rho[i];
        }
        self.refresh_values();
        self.factorize()
    }

    fn refresh_values(&mut self) {
        for v in self.upper.values.iter_mut() {
            *v = 0.0;
        }
        for (k, &(_, _, v)) in self.sources.iter().enumerate() {
            self.upper.values[self.value_map[k]] += v;
        }
    }

    pub fn factorize(&mut self) -> Result<(), LdlError> {
        self.factor = Some(LdlFactor::new(&self.upper)?);
        Ok(())
    }

    /// Solve K x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let factor = self.factor.as_ref().expect("factorize before solve");
        let mut pb = vec![0.0; self.dim];
        for i in 0..self.dim {
            pb[i] = b[self.perm[i]];
        }
        factor.solve_in_place(&mut pb);
        let mut x = vec![0.0; self.dim];
        for i in 0..self.dim {
            x[self.perm[i]] = pb[i];
        }
        x
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_roundtrip_sums_duplicates() {
        let t = vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0), (1, 0, -1.0)];
        let m = CscMatrix::from_triplets(2, 2, &t);
        let y = m.mul_vec(&[1.0, 1.0]);
        assert_eq!(y, vec![4.0, 1.0]);
    }

    #[test]
    fn ldl_solves_small_quasidefinite() {
        // K = [2 0 1; 0 3 -1; 1 -1 -1]
        let t = vec![
            (0, 0, 2.0),
            (1, 1, 3.0),
            (0, 2, 1.0),
            (1, 2, -1.0),
            (2, 2, -1.0),
        ];
        let upper = CscMatrix::from_triplets(3, 3, &t);
        let f = LdlFactor::new(&upper).unwrap();
        let mut b = vec![1.0, 2.0, 3.0];
        f.solve_in_place(&mut b);
        // verify K x = rhs with the full symmetric K
        let x = b;
        let kx = [
            2.0 * x[0] + x[2],
            3.0 * x[1] - x[2],
            x[0] - x[1] - x[2],
        ];
        for (got, want) in kx.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn kkt_system_solves_and_updates_rho() {
        // P = diag(1, 2), A = [1 1]
        let p = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0)]);
        let a = CscMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]);
        let mut kkt = KktSystem::new(&p, &a, 1e-8, &[10.0]);
        kkt.factorize().unwrap();
        let x = kkt.solve(&[1.0, 0.0, 0.0]);
        // residual check
        let r0 = (1.0 + 1e-8) * x[0] + x[2] - 1.0;
        let r1 = (2.0 + 1e-8) * x[1] + x[2];
        let r2 = x[0] + x[1] - x[2] / 10.0;
        assert!(r0.abs() < 1e-10 && r1.abs() < 1e-10 && r2.abs() < 1e-10);

        kkt.update_rho(&[100.0]).unwrap();
        let x = kkt.solve(&[1.0, 0.0, 0.0]);
        let r2 = x[0] + x[1] - x[2] / 100.0;
        assert!(r2.abs() < 1e-10);
    }

    #[test]
    fn rcm_is_a_permutation() {
        let t = vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)];
        let upper = CscMatrix::from_triplets(4, 4, &t);
        let mut p = rcm_ordering(4, &upper);
        p.sort_unstable();
        assert_eq!(p, vec![0, 1, 2, 3]);
    }
}
