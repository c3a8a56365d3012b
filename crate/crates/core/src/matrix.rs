//! Dense row-major matrices and the linear algebra used by the embedding
//! and training paths.
//!
//! Everything here is plain `f64`. The target graphs are at most a few
//! thousand nodes, so dense storage is sufficient; the multiply kernel
//! skips exact zeros, which makes propagation over sparse operators and
//! one-hot feature blocks cheap without a separate sparse type.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    /// Build from a row-major entry vector. Rejects non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        assert_eq!(
            entries.len(),
            rows * cols,
            "entry count {} does not match {}x{}",
            entries.len(),
            rows,
            cols
        );
        for (idx, &v) in entries.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: idx / cols.max(1),
                    col: idx % cols.max(1),
                    value: v,
                });
            }
        }
        Ok(DenseMatrix { rows, cols, entries })
    }

    /// Build from nested rows. Panics on ragged input, rejects non-finite entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged row in from_rows");
            entries.extend_from_slice(row);
        }
        DenseMatrix::from_vec(r, c, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j] = v;
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// Flat row-major view.
    pub fn data(&self) -> &[f64] {
        &self.entries
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        out
    }

    fn check_same_shape(&self, other: &DenseMatrix, op: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch {
                op: op.to_string(),
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        Ok(())
    }

    /// Matrix product `self * rhs`.
    ///
    /// The k-loop is outermost over the left operand so the inner loop walks
    /// both output and right-hand rows contiguously; exact zeros on the left
    /// are skipped, which matters for propagation operators and one-hot
    /// blocks.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul".to_string(),
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        for i in 0..self.rows {
            let lhs_row = &self.entries[i * self.cols..(i + 1) * self.cols];
            let out_row = &mut out.entries[i * n..(i + 1) * n];
            for (k, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.entries[k * n..(k + 1) * n];
                for j in 0..n {
                    out_row[j] += a * rhs_row[j];
                }
            }
        }
        Ok(out)
    }

    /// Matrix product with per-entry addend sorting.
    ///
    /// Each output entry accumulates its nonzero products in ascending
    /// value order, so the result is invariant under a simultaneous
    /// relabeling of `self`'s columns and `rhs`'s rows. Propagation steps
    /// use this; it is what makes node relabeling commute with the
    /// forward pass bit-for-bit.
    pub fn matmul_canonical(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul_canonical".to_string(),
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        let n = rhs.cols;
        let mut out = DenseMatrix::zeros(self.rows, n);
        let mut terms: Vec<f64> = Vec::with_capacity(self.cols);
        for i in 0..self.rows {
            let lhs_row = &self.entries[i * self.cols..(i + 1) * self.cols];
            for j in 0..n {
                terms.clear();
                for (k, &a) in lhs_row.iter().enumerate() {
                    if a != 0.0 {
                        terms.push(a * rhs.entries[k * n + j]);
                    }
                }
                terms.sort_by(|a, b| a.total_cmp(b));
                out.entries[i * n + j] = terms.iter().sum();
            }
        }
        Ok(out)
    }

    /// Elementwise sum.
    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other, "add")?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other, "hadamard")?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Column concatenation `[self, other]`.
    pub fn concat_cols(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::ShapeMismatch {
                op: "concat_cols".to_string(),
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let cols = self.cols + other.cols;
        let mut entries = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            entries.extend_from_slice(self.row(i));
            entries.extend_from_slice(other.row(i));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols,
            entries,
        })
    }

    /// Columns `[from, to)` as a new matrix.
    pub fn slice_cols(&self, from: usize, to: usize) -> DenseMatrix {
        assert!(from <= to && to <= self.cols);
        let cols = to - from;
        let mut entries = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            entries.extend_from_slice(&self.row(i)[from..to]);
        }
        DenseMatrix {
            rows: self.rows,
            cols,
            entries,
        }
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Maximum absolute difference to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Reorder rows so that output row `i` is input row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> DenseMatrix {
        assert_eq!(perm.len(), self.rows);
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (i, &src) in perm.iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.row(src));
        }
        out
    }
}
