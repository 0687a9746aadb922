//! Direct sparse factorizations: up-looking Cholesky for SPD blocks and a
//! non-pivoting LU fallback, both behind a minimum-degree ordering.

use std::collections::BTreeSet;

use super::csr::SparseMatrix;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Minimum-degree ordering on the elimination graph of `pattern(A + Aᵀ)`.
///
/// Returns `perm` with `perm[new] = old`. Ties are broken by the lowest
/// original index, so the ordering is deterministic.
pub fn minimum_degree(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for &c in a.row_cols(r) {
            if c != r && c < n {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut perm = Vec::with_capacity(n);
    let mut merged = Vec::new();
    while let Some((_, v)) = queue.pop_first() {
        perm.push(v);
        let clique = std::mem::take(&mut adj[v]);
        for &u in &clique {
            queue.remove(&(adj[u].len(), u));
            // adj[u] <- (adj[u] ∪ clique) \ {u, v}
            merged.clear();
            let (mut i, mut j) = (0, 0);
            let (left, right) = (&adj[u], &clique);
            while i < left.len() || j < right.len() {
                let next = match (left.get(i), right.get(j)) {
                    (Some(&x), Some(&y)) if x == y => {
                        i += 1;
                        j += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        i += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        j += 1;
                        y
                    }
                    (Some(&x), None) => {
                        i += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        j += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if next != u && next != v {
                    merged.push(next);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            queue.insert((adj[u].len(), u));
        }
    }
    perm
}

/// `C = P A Pᵀ`, i.e. `C(i, j) = A(perm[i], perm[j])`.
fn permute_symmetric(a: &SparseMatrix, perm: &[usize]) -> SparseMatrix {
    let n = a.nrows();
    let mut inverse = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inverse[old] = new;
    }
    let mut triplets = Vec::with_capacity(a.nnz());
    for (new_r, &old_r) in perm.iter().enumerate() {
        for (old_c, v) in a.row(old_r) {
            triplets.push((new_r, inverse[old_c], v));
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets).expect("permutation preserves bounds")
}

#[derive(Debug, Clone)]
struct CholeskyFactor {
    // lower triangular L in compressed-column form; diagonal first in each column
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LuFactor {
    // unit lower L and upper U by rows, both excluding the diagonal of U
    l_rows: Vec<Vec<(usize, f64)>>,
    u_rows: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Factor {
    Cholesky(CholeskyFactor),
    Lu(LuFactor),
}

/// A direct factorization `P A Pᵀ = L Lᵀ` (SPD) or `P A Pᵀ = L U`.
#[derive(Debug, Clone)]
pub struct Factorization {
    perm: Vec<usize>,
    factor: Factor,
}

/// Factorizes a square matrix. With `spd` set, uses Cholesky and reports
/// [`Error::NotSpd`] on a non-positive pivot; otherwise LU without pivoting.
pub fn factorize(a: &SparseMatrix, spd: bool) -> Result<Factorization> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            op: "factorize",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let n = a.nrows();
    let mut col_seen = vec![false; n];
    for r in 0..n {
        if a.row_cols(r).is_empty() {
            return Err(Error::Singular(format!("structurally singular: row {r} is empty")));
        }
        for &c in a.row_cols(r) {
            col_seen[c] = true;
        }
    }
    if let Some(c) = col_seen.iter().position(|&s| !s) {
        return Err(Error::Singular(format!("structurally singular: column {c} is empty")));
    }
    let perm = minimum_degree(a);
    let c = permute_symmetric(a, &perm);
    let factor = if spd {
        Factor::Cholesky(cholesky(&c)?)
    } else {
        Factor::Lu(lu(&c)?)
    };
    Ok(Factorization { perm, factor })
}

fn elimination_tree(c: &SparseMatrix) -> Vec<usize> {
    let n = c.nrows();
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &start in c.row_cols(k) {
            if start >= k {
                break;
            }
            let mut i = start;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of L, written to `stack[top..]` in topological order.
fn ereach(c: &SparseMatrix, k: usize, parent: &[usize], stack: &mut [usize], mark: &mut [usize]) -> usize {
    let n = c.nrows();
    let mut top = n;
    mark[k] = k;
    for &start in c.row_cols(k) {
        if start >= k {
            break;
        }
        let mut len = 0;
        let mut i = start;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

fn cholesky(c: &SparseMatrix) -> Result<CholeskyFactor> {
    let n = c.nrows();
    let parent = elimination_tree(c);
    let mut stack = vec![0; n];
    let mut mark = vec![NONE; n];

    // symbolic pass: column counts of L
    let mut counts = vec![1usize; n];
    for k in 0..n {
        let top = ereach(c, k, &parent, &mut stack, &mut mark);
        for &j in &stack[top..] {
            counts[j] += 1;
        }
    }
    let mut col_ptr = vec![0; n + 1];
    for j in 0..n {
        col_ptr[j + 1] = col_ptr[j] + counts[j];
    }
    let nnz = col_ptr[n];
    let mut row_idx = vec![0; nnz];
    let mut vals = vec![0.0; nnz];
    // first slot of each column holds the diagonal
    let mut next: Vec<usize> = col_ptr[..n].iter().map(|&p| p + 1).collect();
    let mut x = vec![0.0; n];
    mark.iter_mut().for_each(|m| *m = NONE);

    for k in 0..n {
        let top = ereach(c, k, &parent, &mut stack, &mut mark);
        x[k] = 0.0;
        for (j, v) in c.row(k) {
            if j > k {
                break;
            }
            x[j] = v;
        }
        let mut d = x[k];
        x[k] = 0.0;
        for &j in &stack[top..] {
            let lkj = x[j] / vals[col_ptr[j]];
            x[j] = 0.0;
            for p in col_ptr[j] + 1..next[j] {
                x[row_idx[p]] -= vals[p] * lkj;
            }
            d -= lkj * lkj;
            row_idx[next[j]] = k;
            vals[next[j]] = lkj;
            next[j] += 1;
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotSpd { row: k, value: d });
        }
        row_idx[col_ptr[k]] = k;
        vals[col_ptr[k]] = d.sqrt();
    }
    Ok(CholeskyFactor { col_ptr, row_idx, vals })
}

fn lu(c: &SparseMatrix) -> Result<LuFactor> {
    let n = c.nrows();
    let mut work = vec![0.0; n];
    let mut l_rows = Vec::with_capacity(n);
    let mut u_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut u_diag = Vec::with_capacity(n);
    let mut pattern = BTreeSet::new();
    for i in 0..n {
        pattern.clear();
        for (j, v) in c.row(i) {
            work[j] = v;
            pattern.insert(j);
        }
        let mut l_row = Vec::new();
        let mut cursor = 0;
        while let Some(&k) = pattern.range(cursor..i).next() {
            cursor = k + 1;
            let lik = work[k] / u_diag[k];
            l_row.push((k, lik));
            for &(j, ukj) in &u_rows[k] {
                if pattern.insert(j) {
                    work[j] = 0.0;
                }
                work[j] -= lik * ukj;
            }
        }
        let diag = if pattern.contains(&i) { work[i] } else { 0.0 };
        if diag == 0.0 || !diag.is_finite() {
            return Err(Error::Singular(format!("zero pivot at (permuted) row {i}")));
        }
        u_diag.push(diag);
        u_rows.push(pattern.range(i + 1..).map(|&j| (j, work[j])).collect());
        l_rows.push(l_row);
    }
    Ok(LuFactor { l_rows, u_rows, u_diag })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self.factor, Factor::Cholesky(_))
    }

    /// Ordering permutation, `perm[new] = old`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Stored entries in the triangular factor(s).
    pub fn factor_nnz(&self) -> usize {
        match &self.factor {
            Factor::Cholesky(f) => f.vals.len(),
            Factor::Lu(f) => {
                f.u_diag.len()
                    + f.l_rows.iter().map(Vec::len).sum::<usize>()
                    + f.u_rows.iter().map(Vec::len).sum::<usize>()
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                op: "solve",
                expected: self.dim(),
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Overwrites `x` (holding the right-hand side) with the solution.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.dim(), "solve: dimension mismatch");
        let mut y: Vec<f64> = self.perm.iter().map(|&old| x[old]).collect();
        match &self.factor {
            Factor::Cholesky(f) => {
                let n = y.len();
                for j in 0..n {
                    let start = f.col_ptr[j];
                    y[j] /= f.vals[start];
                    let yj = y[j];
                    for p in start + 1..f.col_ptr[j + 1] {
                        y[f.row_idx[p]] -= f.vals[p] * yj;
                    }
                }
                for j in (0..n).rev() {
                    let start = f.col_ptr[j];
                    let mut s = y[j];
                    for p in start + 1..f.col_ptr[j + 1] {
                        s -= f.vals[p] * y[f.row_idx[p]];
                    }
                    y[j] = s / f.vals[start];
                }
            }
            Factor::Lu(f) => {
                let n = y.len();
                for i in 0..n {
                    let mut s = y[i];
                    for &(k, l) in &f.l_rows[i] {
                        s -= l * y[k];
                    }
                    y[i] = s;
                }
                for i in (0..n).rev() {
                    let mut s = y[i];
                    for &(j, u) in &f.u_rows[i] {
                        s -= u * y[j];
                    }
                    y[i] = s / f.u_diag[i];
                }
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }

    /// For a Cholesky factorization, the factor `K = Pᵀ L` with `K Kᵀ = A`,
    /// in the original row ordering.
    pub fn cholesky_factor(&self) -> Option<SparseMatrix> {
        let Factor::Cholesky(f) = &self.factor else {
            return None;
        };
        let n = self.dim();
        let mut triplets = Vec::with_capacity(f.vals.len());
        for j in 0..n {
            for p in f.col_ptr[j]..f.col_ptr[j + 1] {
                triplets.push((self.perm[f.row_idx[p]], j, f.vals[p]));
            }
        }
        Some(SparseMatrix::from_triplets(n, n, &triplets).expect("factor indices in range"))
    }
}
