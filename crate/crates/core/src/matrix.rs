//! Sparse nonnegative matrices viewed as weighted directed graphs.
//!
//! Arcs are stored once, sorted by `(row, col)`, and addressed by an arc id.
//! A row-major adjacency (`out`) and a column-major adjacency (`in`) both
//! point into the same arc array, so scaled weights can be kept per arc and
//! updated from either endpoint in O(degree).

use crate::error::{BalanceError, Result};

/// A single stored arc `row -> col` with weight `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Off-diagonal positive entries of an `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseNonnegMatrix {
    n: usize,
    arcs: Vec<Arc>,
    // arcs are sorted by (row, col), so the out-adjacency of i is a contiguous range
    row_ptr: Vec<usize>,
    col_ptr: Vec<usize>,
    // arc ids ordered by (col, row)
    col_arcs: Vec<usize>,
    total: f64,
    min_entry: f64,
}

impl SparseNonnegMatrix {
    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Every value must be finite and strictly positive, off the diagonal,
    /// and appear at most once.
    pub fn new(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(BalanceError::EmptyDimension);
        }
        let mut arcs = Vec::new();
        for (row, col, value) in triplets {
            if row >= n || col >= n {
                return Err(BalanceError::IndexOutOfRange { row, col, n });
            }
            if row == col {
                return Err(BalanceError::DiagonalEntry { index: row });
            }
            if !(value.is_finite() && value > 0.0) {
                return Err(BalanceError::NonPositiveEntry { row, col, value });
            }
            arcs.push(Arc { row, col, value });
        }
        arcs.sort_by_key(|a| (a.row, a.col));
        if let Some(w) = arcs
            .windows(2)
            .find(|w| w[0].row == w[1].row && w[0].col == w[1].col)
        {
            return Err(BalanceError::DuplicateEntry {
                row: w[0].row,
                col: w[0].col,
            });
        }

        let mut row_ptr = vec![0; n + 1];
        let mut col_ptr = vec![0; n + 1];
        for arc in &arcs {
            row_ptr[arc.row + 1] += 1;
            col_ptr[arc.col + 1] += 1;
        }
        for k in 0..n {
            row_ptr[k + 1] += row_ptr[k];
            col_ptr[k + 1] += col_ptr[k];
        }
        let mut fill = col_ptr.clone();
        let mut col_arcs = vec![0; arcs.len()];
        for (id, arc) in arcs.iter().enumerate() {
            col_arcs[fill[arc.col]] = id;
            fill[arc.col] += 1;
        }

        let total = arcs.iter().map(|a| a.value).sum();
        let min_entry = arcs.iter().map(|a| a.value).fold(f64::INFINITY, f64::min);

        Ok(Self {
            n,
            arcs,
            row_ptr,
            col_ptr,
            col_arcs,
            total,
            min_entry,
        })
    }

    /// Builds a matrix from dense rows, skipping zeros and the diagonal.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(BalanceError::NotSquare {
                    row: i,
                    len: row.len(),
                    n,
                });
            }
        }
        let triplets = rows.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(move |&(j, &v)| i != j && v != 0.0)
                .map(move |(j, &v)| (i, j, v))
        });
        Self::new(n, triplets)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, id: usize) -> Arc {
        self.arcs[id]
    }

    /// Arc ids leaving `i`, ordered by head.
    pub fn out_arcs(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    /// Arc ids entering `i`, ordered by tail.
    pub fn in_arcs(&self, i: usize) -> &[usize] {
        &self.col_arcs[self.col_ptr[i]..self.col_ptr[i + 1]]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.col_ptr[i + 1] - self.col_ptr[i]
    }

    /// Looks up the id of arc `row -> col`.
    pub fn find_arc(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.n {
            return None;
        }
        let range = self.out_arcs(row);
        let start = range.start;
        self.arcs[range]
            .binary_search_by(|a| a.col.cmp(&col))
            .ok()
            .map(|k| start + k)
    }

    /// `S`, the sum of all entries.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Smallest stored entry, or `+inf` for a matrix without arcs.
    pub fn min_entry(&self) -> f64 {
        self.min_entry
    }

    /// The dynamic range `w = S / a_min`; `1` for a matrix without arcs.
    pub fn dynamic_range(&self) -> f64 {
        if self.arcs.is_empty() {
            1.0
        } else {
            self.total / self.min_entry
        }
    }

    /// Dense copy, used by small-instance diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for arc in &self.arcs {
            dense[arc.row][arc.col] = arc.value;
        }
        dense
    }

    /// Induced submatrix on `nodes`; node `nodes[k]` becomes index `k`.
    pub fn induced(&self, nodes: &[usize]) -> Result<Self> {
        let mut local = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let triplets: Vec<_> = nodes
            .iter()
            .flat_map(|&v| self.out_arcs(v).map(|id| self.arcs[id]))
            .filter(|arc| local[arc.col] != usize::MAX)
            .map(|arc| (local[arc.row], local[arc.col], arc.value))
            .collect();
        Self::new(nodes.len(), triplets)
    }
}
