use faer::Mat;

use crate::error::{Error, Result};

/// An `n × d` block of points, one observation per row, stored row-major.
///
/// Always non-empty with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl SampleMatrix {
    pub fn new(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Empty(format!("sample must be at least 1x1, got {n}x{d}")));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "non-finite entry at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { data, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, rows.len(), d)
    }

    /// One-dimensional sample.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), values.len(), 1)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(invalid_index(i, self.n));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(data, indices.len(), self.d)
    }

    /// Stack two samples of equal dimension.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.d)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::new(data, self.n + other.n, self.d)
    }

    pub fn to_mat(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.d, |i, j| self.data[i * self.d + j])
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for row in self.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= self.n as f64;
        }
        mean
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.d == d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.d,
                found: d,
            })
        }
    }
}

fn invalid_index(i: usize, n: usize) -> Error {
    Error::InvalidParameter {
        name: "indices",
        reason: format!("row {i} out of range for {n} rows"),
    }
}
