//! Row-stochastic interaction matrices and per-character attention vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tolerance to which rows produced by this crate are stochastic.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Token,
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowFlag {
    Stochastic,
    Zero,
    Unnormalized,
}

impl RowFlag {
    pub fn code(self) -> char {
        match self {
            RowFlag::Stochastic => 'S',
            RowFlag::Zero => 'Z',
            RowFlag::Unnormalized => 'U',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'S' => Some(RowFlag::Stochastic),
            'Z' => Some(RowFlag::Zero),
            'U' => Some(RowFlag::Unnormalized),
            _ => None,
        }
    }
}

/// Dense `n_rows x n_cols` matrix from start tokens to target tokens or lines.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    granularity: Granularity,
    values: Vec<T>,
    row_flags: Vec<RowFlag>,
}

impl<T: Scalar> InteractionMatrix<T> {
    /// Raw non-negative values. All-zero rows are flagged `Zero`, the rest `Unnormalized`.
    pub fn from_raw(
        n_rows: usize,
        n_cols: usize,
        granularity: Granularity,
        values: Vec<T>,
    ) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::LengthMismatch {
                expected: n_rows * n_cols,
                actual: values.len(),
            });
        }
        for (k, v) in values.iter().enumerate() {
            if !(v.is_finite() && *v >= T::zero()) {
                return Err(Error::NegativeEntry {
                    row: k / n_cols.max(1),
                    col: k % n_cols.max(1),
                    value: v.as_f64(),
                });
            }
        }
        let row_flags = values
            .chunks(n_cols.max(1))
            .take(n_rows)
            .map(|r| {
                if r.iter().all(|v| v.is_zero()) {
                    RowFlag::Zero
                } else {
                    RowFlag::Unnormalized
                }
            })
            .collect();
        Ok(Self {
            n_rows,
            n_cols,
            granularity,
            values,
            row_flags,
        })
    }

    /// Reassembles a matrix with explicit flags, e.g. after deserialization.
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        granularity: Granularity,
        values: Vec<T>,
        row_flags: Vec<RowFlag>,
    ) -> Result<Self> {
        if row_flags.len() != n_rows {
            return Err(Error::LengthMismatch {
                expected: n_rows,
                actual: row_flags.len(),
            });
        }
        let mut m = Self::from_raw(n_rows, n_cols, granularity, values)?;
        m.row_flags = row_flags;
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row_flags(&self) -> &[RowFlag] {
        &self.row_flags
    }

    pub fn flag(&self, row: usize) -> RowFlag {
        self.row_flags[row]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks(self.n_cols.max(1)).take(self.n_rows)
    }

    pub fn cast<U: Scalar>(&self) -> InteractionMatrix<U> {
        InteractionMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            granularity: self.granularity,
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
            row_flags: self.row_flags.clone(),
        }
    }

    /// Checks that every row is stochastic to `tol` or flagged zero and all-zero.
    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.rows().zip(&self.row_flags).all(|(r, f)| match f {
            RowFlag::Stochastic => (crate::scalar::sum_f64(r) - 1.0).abs() <= tol,
            RowFlag::Zero => r.iter().all(|v| v.is_zero()),
            RowFlag::Unnormalized => false,
        })
    }
}

/// Divides every non-zero row by its sum; all-zero rows are flagged `Zero` and left as is.
///
/// Row sums accumulate in `f64` in column order.
pub fn normalize_rows<T: Scalar>(s: &InteractionMatrix<T>) -> Result<InteractionMatrix<T>> {
    let mut out = s.clone();
    let n_cols = s.n_cols;
    for (r, (row, flag)) in out
        .values
        .chunks_mut(n_cols.max(1))
        .zip(out.row_flags.iter_mut())
        .enumerate()
    {
        let mut sum = 0.0f64;
        for (c, v) in row.iter().enumerate() {
            let x = v.as_f64();
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::NegativeEntry {
                    row: r,
                    col: c,
                    value: x,
                });
            }
            sum += x;
        }
        if sum == 0.0 {
            *flag = RowFlag::Zero;
            continue;
        }
        for v in row.iter_mut() {
            *v = T::of(v.as_f64() / sum);
        }
        *flag = RowFlag::Stochastic;
    }
    Ok(out)
}

/// Per-character weights: model attention or developer dwell seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualAttention<T> {
    values: Vec<T>,
}

impl<T: Scalar> VisualAttention<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= T::zero()))
        {
            return Err(Error::NegativeEntry {
                row: 0,
                col: k,
                value: v.as_f64(),
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        crate::scalar::sum_f64(&self.values)
    }
}
