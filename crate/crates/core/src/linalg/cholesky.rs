use std::collections::VecDeque;

use super::CsrMatrix;
use crate::error::{Error, Result};

/// Envelope (skyline) Cholesky factorization `P A Pᵀ = L Lᵀ` of a sparse
/// symmetric positive-definite matrix under reverse Cuthill–McKee ordering.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// First stored column of each row of `L`.
    first: Vec<usize>,
    /// Offset of row `i` inside `values`; row `i` holds columns `first[i]..=i`.
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows();
        if n != a.n_cols() {
            return Err(Error::InvalidParameter("Cholesky needs a square matrix".into()));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (c, _) in a.row(old) {
                let j = inv[c];
                if j < first[new] {
                    first[new] = j;
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + (i - first[i] + 1));
        }
        let mut values = vec![0.0; offsets[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (c, v) in a.row(old) {
                let j = inv[c];
                if j <= new {
                    values[offsets[new] + (j - first[new])] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let row_i = offsets[i];
            for j in fi..i {
                let fj = first[j];
                let start = fi.max(fj);
                let row_j = offsets[j];
                let li = &values[row_i + (start - fi)..row_i + (j - fi)];
                let lj = &values[row_j + (start - fj)..row_j + (j - fj)];
                let s: f64 = li.iter().zip(lj).map(|(x, y)| x * y).sum();
                let diag_j = values[row_j + (j - fj)];
                let idx = row_i + (j - fi);
                values[idx] = (values[idx] - s) / diag_j;
            }
            let row = &values[row_i..row_i + (i - fi)];
            let s: f64 = row.iter().map(|x| x * x).sum();
            let idx = row_i + (i - fi);
            let pivot = values[idx] - s;
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::NotPositiveDefinite { row: perm[i], pivot });
            }
            values[idx] = pivot.sqrt();
        }

        Ok(Self {
            n,
            perm,
            first,
            offsets,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (k, l) in (fi..i).zip(&row[..i - fi]) {
                y[k] -= l * xi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Reverse Cuthill–McKee ordering of the symmetric sparsity graph of `a`;
/// returns `perm` with `perm[new] = old`.
pub(crate) fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n_rows();
    let ptr = a.row_ptr();
    let cols = a.col_idx();
    let degree: Vec<usize> = (0..n).map(|i| ptr[i + 1] - ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize| -> (Vec<usize>, usize) {
        let mut level = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        level[start] = 0;
        queue.push_back(start);
        let mut last = Vec::new();
        let mut depth = 0;
        while let Some(v) = queue.pop_front() {
            if level[v] > depth {
                depth = level[v];
                last.clear();
            }
            last.push(v);
            for &w in &cols[ptr[v]..ptr[v + 1]] {
                if level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        (last, depth)
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let mut root = seed;
        let (mut last, mut depth) = bfs_levels(root);
        for _ in 0..8 {
            let candidate = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
            let (next_last, next_depth) = bfs_levels(candidate);
            if next_depth <= depth {
                break;
            }
            root = candidate;
            last = next_last;
            depth = next_depth;
        }

        let mut queue = VecDeque::new();
        visited[root] = true;
        queue.push_back(root);
        let mut neighbours = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            neighbours.clear();
            neighbours.extend(cols[ptr[v]..ptr[v + 1]].iter().copied().filter(|&w| !visited[w]));
            neighbours.sort_by_key(|&w| (degree[w], w));
            for &w in &neighbours {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            let j = (i + 1) % n;
            t.push((i, j, -1.0));
            t.push((j, i, -1.0));
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn solves_periodic_chain() {
        let a = laplacian_1d(50, 0.1);
        let chol = EnvelopeCholesky::factor(&a).unwrap();
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = chol.solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = laplacian_1d(10, -1.0);
        assert!(matches!(
            EnvelopeCholesky::factor(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplacian_1d(17, 1.0);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort();
        assert_eq!(p, (0..17).collect::<Vec<_>>());
    }
}
