//! Envelope (skyline) Cholesky factorization after reverse Cuthill–McKee reordering.

use std::collections::VecDeque;

use crate::assembly::SymSparseMatrix;

/// Reverse Cuthill–McKee ordering; `perm[new] = old`. Each connected component starts
/// from a minimum-degree vertex, neighbours are visited by ascending degree then id.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Lower Cholesky factor in envelope storage of the reordered matrix.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    perm: Vec<usize>,
    /// First stored column of each row.
    first: Vec<usize>,
    /// Offset of row `i`'s first stored entry in `vals`.
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl SkylineCholesky {
    /// Factors `a`; on failure returns the (original) index of the first non-positive pivot.
    pub fn factor(a: &SymSparseMatrix) -> Result<Self, usize> {
        let n = a.n();
        let perm = reverse_cuthill_mckee(&a.adjacency());
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let pa = a.permuted(&perm);
        let mut first = vec![0; n];
        for (i, f) in first.iter_mut().enumerate() {
            *f = pa.lower_row(i).map(|(j, _)| j).next().unwrap_or(i);
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut vals = vec![0.0; start[n]];
        for i in 0..n {
            for (j, v) in pa.lower_row(i) {
                vals[start[i] + j - first[i]] = v;
            }
        }
        for i in 0..n {
            let (fi, si) = (first[i], start[i]);
            for j in fi..=i {
                let (fj, sj) = (first[j], start[j]);
                let lo = fi.max(fj);
                let mut s = vals[si + j - fi];
                for k in lo..j {
                    s -= vals[si + k - fi] * vals[sj + k - fj];
                }
                if j < i {
                    vals[si + j - fi] = s / vals[sj + j - fj];
                } else {
                    if !(s > 0.0) {
                        return Err(perm[i]);
                    }
                    vals[si + i - fi] = s.sqrt();
                }
            }
        }
        Ok(SkylineCholesky { perm, first, start, vals })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let (fi, si) = (self.first[i], self.start[i]);
            let mut s = y[i];
            for k in fi..i {
                s -= self.vals[si + k - fi] * y[k];
            }
            y[i] = s / self.vals[si + i - fi];
        }
        for i in (0..n).rev() {
            let (fi, si) = (self.first[i], self.start[i]);
            y[i] /= self.vals[si + i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.vals[si + k - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
