//! Dense row-major `f64` matrices.
//!
//! Everything in this crate runs in double precision on plain contiguous
//! storage; verifiability beats speed at the scales we target.

use crate::error::{Result, TmurError};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseArray {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseArray {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseArray {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        DenseArray {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// 1x1 matrix holding a single value.
    pub fn scalar(value: f64) -> Self {
        DenseArray::filled(1, 1, value)
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(TmurError::shape(format!(
                "expected {} values for a {rows}x{cols} array, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(DenseArray { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(TmurError::shape("cannot build an array from zero rows"));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(TmurError::shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(DenseArray {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        debug_assert!(r < self.rows);
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DenseArray {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Value of a 1x1 matrix.
    pub fn scalar_value(&self) -> f64 {
        assert!(
            self.rows == 1 && self.cols == 1,
            "scalar_value on a {}x{} array",
            self.rows,
            self.cols
        );
        self.data[0]
    }

    pub fn matmul(&self, rhs: &DenseArray) -> DenseArray {
        assert!(
            self.cols == rhs.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows,
            self.cols,
            rhs.rows,
            rhs.cols
        );
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        let mut out = DenseArray::zeros(m, n);
        for i in 0..m {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let lhs_row = &rhs.data[p * n..(p + 1) * n];
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    out_row[j] += a * lhs_row[j];
                }
            }
        }
        out
    }

    pub fn transposed(&self) -> DenseArray {
        let mut out = DenseArray::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }
}
