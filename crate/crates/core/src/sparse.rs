//! Compressed sparse row matrices and the sparse × dense products the GCN needs.

use ndarray::{Array2, ArrayView2};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, value)` lists; columns are sorted per row.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let n_rows = rows.len();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                debug_assert!(c < cols);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            rows: n_rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, vals) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows = vec![Vec::new(); self.cols];
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                rows[j].push((i, v));
            }
        }
        CsrMatrix::from_rows(self.rows, rows)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows, self.cols));
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// `self · dense`.
    pub fn matmul(&self, dense: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(self.cols, dense.nrows(), "sparse-dense shape mismatch");
        let width = dense.ncols();
        let mut out = Array2::zeros((self.rows, width));
        let dense = dense.as_standard_layout();
        let src = dense.as_slice().expect("standard layout");
        let dst = out.as_slice_mut().expect("standard layout");
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            let out_row = &mut dst[i * width..(i + 1) * width];
            for (&j, &v) in idx.iter().zip(vals) {
                let in_row = &src[j * width..(j + 1) * width];
                for (o, &x) in out_row.iter_mut().zip(in_row) {
                    *o += v * x;
                }
            }
        }
        out
    }

    /// `row_i(self) · dense` for one row.
    pub fn row_matmul(&self, i: usize, dense: ArrayView2<'_, f64>, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let (idx, vals) = self.row(i);
        for (&j, &v) in idx.iter().zip(vals) {
            for (o, &x) in out.iter_mut().zip(dense.row(j)) {
                *o += v * x;
            }
        }
    }
}
