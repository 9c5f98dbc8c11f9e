use std::collections::BTreeMap;
use std::fmt::Write;

use nalgebra::DMatrix;

/// Symmetric matrix storing only the lower triangle (`col <= row`) in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates entries row by row; the summation order of every entry is the order of
/// the `add` calls, so a fixed call sequence gives bitwise reproducible matrices.
#[derive(Debug, Clone)]
pub struct SymSparseBuilder {
    rows: Vec<BTreeMap<usize, f64>>,
}

impl SymSparseBuilder {
    pub fn new(n: usize) -> Self {
        SymSparseBuilder { rows: vec![BTreeMap::new(); n] }
    }

    /// Adds `v` to entry `(i, j)` and, implicitly, `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        *self.rows[r].entry(c).or_insert(0.0) += v;
    }

    /// Scatters a dense local matrix; only its lower triangle is read.
    pub fn add_local(&mut self, dofs: &[usize], local: &DMatrix<f64>) {
        for a in 0..dofs.len() {
            for b in 0..=a {
                self.add(dofs[a], dofs[b], local[(a, b)]);
            }
        }
    }

    pub fn build(self) -> SymSparseMatrix {
        let n = self.rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in self.rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SymSparseMatrix { n, row_ptr, cols, vals }
    }
}

impl SymSparseMatrix {
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut b = SymSparseBuilder::new(a.nrows());
        for i in 0..a.nrows() {
            for j in 0..=i {
                if a[(i, j)] != 0.0 {
                    b.add(i, j, a[(i, j)]);
                }
            }
        }
        b.build()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored (lower-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries of row `i` with `col <= i`, ascending by column.
    pub fn lower_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(p) => self.vals[span.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.lower_row(i) {
                y[i] += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// `|A| |x|` entrywise, which bounds the rounding error of [`Self::mul_vec`].
    pub fn abs_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.lower_row(i) {
                y[i] += v.abs() * x[j].abs();
                if j != i {
                    y[j] += v.abs() * x[i].abs();
                }
            }
        }
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.lower_row(i) {
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `P A Pᵀ` where `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut inverse = vec![0; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let mut b = SymSparseBuilder::new(self.n);
        for i in 0..self.n {
            for (j, v) in self.lower_row(i) {
                b.add(inverse[i], inverse[j], v);
            }
        }
        b.build()
    }

    /// Neighbours of every row in the full symmetric pattern, excluding the diagonal.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, _) in self.lower_row(i) {
                if j != i {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Coordinate text: one `row col value` line per stored entry, 0-based, lower triangle.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            for (j, v) in self.lower_row(i) {
                let _ = writeln!(s, "{i} {j} {v:.17e}");
            }
        }
        s
    }
}
