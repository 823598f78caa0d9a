use crate::error::{LcmError, Result};

/// N×C feature matrix stored row-major, one sample per row.
///
/// The `centered` flag is set only by [`FeatureBatch::centered`] or after
/// [`FeatureBatch::assume_centered`] has verified the column means.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBatch {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    centered: bool,
}

impl FeatureBatch {
    pub fn new(data: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(LcmError::input(format!(
                "feature batch must be at least 1x1, got {n_rows}x{n_cols}"
            )));
        }
        if data.len() != n_rows * n_cols {
            return Err(LcmError::input(format!(
                "feature buffer has {} values, expected {n_rows}x{n_cols}",
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(LcmError::Data {
                row: idx / n_cols,
                col: idx % n_cols,
                value: data[idx],
            });
        }
        Ok(FeatureBatch {
            data,
            n_rows,
            n_cols,
            centered: false,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(LcmError::input(format!(
                "row {i} has {} values, expected {n_cols}",
                rows[i].len()
            )));
        }
        Self::new(rows.concat(), rows.len(), n_cols)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.n_cols];
        for row in self.rows() {
            for (m, x) in means.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.n_rows as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Biased (1/N) column variances around the column means.
    pub fn column_variances(&self) -> Vec<f64> {
        let means = self.column_means();
        let mut var = vec![0.0; self.n_cols];
        for row in self.rows() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&means) {
                let dx = x - m;
                *v += dx * dx;
            }
        }
        let n = self.n_rows as f64;
        var.iter_mut().for_each(|v| *v /= n);
        var
    }

    /// Returns the mean-subtracted batch (flagged centered) and the column means.
    pub fn centered(&self) -> (FeatureBatch, Vec<f64>) {
        let means = self.column_means();
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.n_cols) {
            for (x, m) in row.iter_mut().zip(&means) {
                *x -= m;
            }
        }
        let batch = FeatureBatch {
            data,
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            centered: true,
        };
        (batch, means)
    }

    /// Flags the batch as centered after checking every column mean is within
    /// `1e-9` column standard deviations of zero (plus a rounding allowance
    /// proportional to the column magnitude).
    pub fn assume_centered(mut self) -> Result<Self> {
        let means = self.column_means();
        let var = self.column_variances();
        let mut max_abs = vec![0.0f64; self.n_cols];
        for row in self.rows() {
            for (m, x) in max_abs.iter_mut().zip(row) {
                *m = m.max(x.abs());
            }
        }
        for j in 0..self.n_cols {
            let tol = 1e-9 * var[j].sqrt() + 64.0 * f64::EPSILON * max_abs[j];
            if means[j].abs() > tol {
                return Err(LcmError::input(format!(
                    "batch is not centered: column {j} has mean {:e}",
                    means[j]
                )));
            }
        }
        self.centered = true;
        Ok(self)
    }

    /// Concatenates batches with equal column counts. The result is not flagged centered.
    pub fn vstack(parts: &[&FeatureBatch]) -> Result<FeatureBatch> {
        let n_cols = parts
            .first()
            .map(|b| b.n_cols)
            .ok_or_else(|| LcmError::input("nothing to stack"))?;
        if parts.iter().any(|b| b.n_cols != n_cols) {
            return Err(LcmError::input("stacked batches differ in column count"));
        }
        let data: Vec<f64> = parts.iter().flat_map(|b| b.data.iter().copied()).collect();
        let n_rows = parts.iter().map(|b| b.n_rows).sum();
        FeatureBatch::new(data, n_rows, n_cols)
    }

    /// Rows `[start, end)` as a new, uncentered batch.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<FeatureBatch> {
        if start >= end || end > self.n_rows {
            return Err(LcmError::input(format!(
                "row range {start}..{end} invalid for {} rows",
                self.n_rows
            )));
        }
        FeatureBatch::new(
            self.data[start * self.n_cols..end * self.n_cols].to_vec(),
            end - start,
            self.n_cols,
        )
    }
}
