//! Masked self-attention tensors of shape `(layers, heads, T, T)` with `T = n_prompt + n_generated`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-sum tolerance applied to tensors read from disk.
pub const INGEST_ROW_TOLERANCE: f64 = 1e-3;
/// Row-sum tolerance for tensors produced inside the toolkit.
pub const INTERNAL_ROW_TOLERANCE: f64 = 1e-6;

/// Dense attention weights, row-major over `[layer][head][query][key]`.
///
/// All indices are 0-based. Every query row `i` is a softmax over keys `0..=i`;
/// keys above the diagonal are zero. Rows of generated tokens (`i >= n_prompt`)
/// are kept in full.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTensor<T> {
    layers: usize,
    heads: usize,
    n_prompt: usize,
    n_generated: usize,
    values: Vec<T>,
}

impl<T: Scalar> AttentionTensor<T> {
    /// Builds a tensor and validates every invariant at the given row-sum tolerance.
    pub fn new(
        layers: usize,
        heads: usize,
        n_prompt: usize,
        n_generated: usize,
        values: Vec<T>,
        row_tolerance: f64,
    ) -> Result<Self> {
        let t = Self::from_parts_unchecked(layers, heads, n_prompt, n_generated, values)?;
        t.validate(row_tolerance)?;
        Ok(t)
    }

    /// Checks shape only. Row sums and triangularity are left to the caller.
    pub(crate) fn from_parts_unchecked(
        layers: usize,
        heads: usize,
        n_prompt: usize,
        n_generated: usize,
        values: Vec<T>,
    ) -> Result<Self> {
        if layers == 0 || heads == 0 || n_prompt == 0 {
            return Err(Error::Dims(format!(
                "layers={layers}, heads={heads}, n_prompt={n_prompt} must all be >= 1"
            )));
        }
        let total = n_prompt + n_generated;
        let expected = layers * heads * total * total;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(Self {
            layers,
            heads,
            n_prompt,
            n_generated,
            values,
        })
    }

    /// Reports the first violated invariant, scanning layers, heads, rows in order.
    pub fn validate(&self, row_tolerance: f64) -> Result<()> {
        let total = self.total();
        for l in 0..self.layers {
            for h in 0..self.heads {
                for i in 0..total {
                    let row = self.row(l, h, i);
                    let mut sum = 0.0;
                    for (j, &v) in row.iter().enumerate() {
                        let v = v.as_f64();
                        if !v.is_finite() || v < 0.0 {
                            return Err(Error::NegativeEntry {
                                row: i,
                                col: j,
                                value: v,
                            });
                        }
                        if j > i && v != 0.0 {
                            return Err(Error::UpperTriangle {
                                layer: l + 1,
                                head: h + 1,
                                row: i + 1,
                                col: j + 1,
                                value: v,
                            });
                        }
                        sum += v;
                    }
                    if (sum - 1.0).abs() > row_tolerance {
                        return Err(Error::RowSum {
                            layer: l + 1,
                            head: h + 1,
                            row: i + 1,
                            sum,
                            tolerance: row_tolerance,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn n_prompt(&self) -> usize {
        self.n_prompt
    }

    pub fn n_generated(&self) -> usize {
        self.n_generated
    }

    /// Total token count `n_prompt + n_generated`.
    pub fn total(&self) -> usize {
        self.n_prompt + self.n_generated
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    fn offset(&self, layer: usize, head: usize, row: usize) -> usize {
        let t = self.total();
        ((layer * self.heads + head) * t + row) * t
    }

    #[inline]
    pub fn get(&self, layer: usize, head: usize, row: usize, col: usize) -> T {
        self.values[self.offset(layer, head, row) + col]
    }

    /// Full query row (length `T`) for one layer and head.
    #[inline]
    pub fn row(&self, layer: usize, head: usize, row: usize) -> &[T] {
        let start = self.offset(layer, head, row);
        &self.values[start..start + self.total()]
    }

    /// `T x T` slice for one layer and head.
    pub fn slice(&self, layer: usize, head: usize) -> &[T] {
        let start = self.offset(layer, head, 0);
        let t = self.total();
        &self.values[start..start + t * t]
    }

    /// Multiplies every weight by `k`. The result's rows sum to `k`, so it is only
    /// meaningful as input to the homogeneous reductions.
    pub fn scaled(&self, k: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| v * k).collect(),
            ..*self
        }
    }

    pub fn cast<U: Scalar>(&self) -> AttentionTensor<U> {
        AttentionTensor {
            layers: self.layers,
            heads: self.heads,
            n_prompt: self.n_prompt,
            n_generated: self.n_generated,
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

impl<T: Scalar> AttentionTensor<T> {
    /// Convenience used by tests and fixtures: one `T x T` slice per (layer, head).
    pub fn from_slices(
        n_prompt: usize,
        n_generated: usize,
        slices: &[Vec<Vec<Vec<f64>>>],
        row_tolerance: f64,
    ) -> Result<Self> {
        let layers = slices.len();
        let heads = slices.first().map_or(0, Vec::len);
        let total = n_prompt + n_generated;
        let mut values = Vec::with_capacity(layers * heads * total * total);
        for layer in slices {
            if layer.len() != heads {
                return Err(Error::Dims("ragged head dimension".into()));
            }
            for head in layer {
                if head.len() != total {
                    return Err(Error::Dims(format!("expected {total} rows, got {}", head.len())));
                }
                for row in head {
                    if row.len() != total {
                        return Err(Error::Dims(format!(
                            "expected {total} columns, got {}",
                            row.len()
                        )));
                    }
                    values.extend(row.iter().map(|&v| T::of(v)));
                }
            }
        }
        Self::new(layers, heads, n_prompt, n_generated, values, row_tolerance)
    }
}
