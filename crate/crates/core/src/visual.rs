//! Static extraction of per-character visual attention from an attention tensor.
//!
//! Pipeline: condense layers and heads into a prompt-only token matrix, average
//! each column over its followers, then share each token's weight equally among
//! its characters.

use serde::{Deserialize, Serialize};

use crate::data::{AttentionTensor, TokenAlignment, VisualAttention};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condense {
    Mean,
    Max,
}

/// Lower-triangular `n x n` matrix over prompt tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> TokenMatrix<T> {
    /// Entries above the diagonal are forced to zero.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: r.len(),
                });
            }
            for (j, &v) in r.iter().enumerate() {
                if !(v.is_finite() && v >= T::zero()) {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v.as_f64(),
                    });
                }
                values.push(if j > i { T::zero() } else { v });
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Reduces the `(layer, head)` dimensions of the prompt block by mean or max.
pub fn condense<T: Scalar>(t: &AttentionTensor<T>, mode: Condense) -> TokenMatrix<T> {
    let n = t.n_prompt();
    let slices = (t.layers() * t.heads()) as f64;
    let mut values = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = match mode {
                Condense::Mean => {
                    let mut acc = 0.0f64;
                    for l in 0..t.layers() {
                        for h in 0..t.heads() {
                            acc += t.get(l, h, i, j).as_f64();
                        }
                    }
                    T::of(acc / slices)
                }
                Condense::Max => {
                    let mut best = T::zero();
                    for l in 0..t.layers() {
                        for h in 0..t.heads() {
                            best = best.max(t.get(l, h, i, j));
                        }
                    }
                    best
                }
            };
            values[i * n + j] = v;
        }
    }
    TokenMatrix { n, values }
}

/// Column means over followers: `out[j]` averages `m[i,j]` for `i` in `j..n`.
///
/// Only the structural zeros above the diagonal are excluded; the diagonal and
/// any zero values below it count.
pub fn mean_of_followers<T: Scalar>(m: &TokenMatrix<T>) -> Vec<T> {
    let n = m.n;
    (0..n)
        .map(|j| {
            let sum: f64 = (j..n).map(|i| m.get(i, j).as_f64()).sum();
            T::of(sum / (n - j) as f64)
        })
        .collect()
}

/// Splits each token's weight in equal shares over the characters it owns.
pub fn to_char_attention<T: Scalar>(w: &[T], a: &TokenAlignment) -> Result<VisualAttention<T>> {
    if w.len() != a.n_tokens() {
        return Err(Error::LengthMismatch {
            expected: a.n_tokens(),
            actual: w.len(),
        });
    }
    let mut out = vec![0.0f64; a.n_chars()];
    for (k, weight) in w.iter().enumerate() {
        let chars = a.token_chars(k);
        let share = weight.as_f64() / chars.len() as f64;
        for c in chars {
            out[c] += share;
        }
    }
    VisualAttention::new(out.into_iter().map(T::of).collect())
}

/// `condense` → `mean_of_followers` → `to_char_attention`.
pub fn extract_visual<T: Scalar>(
    t: &AttentionTensor<T>,
    a: &TokenAlignment,
    mode: Condense,
) -> Result<VisualAttention<T>> {
    if t.n_prompt() != a.n_tokens() {
        return Err(Error::LengthMismatch {
            expected: a.n_tokens(),
            actual: t.n_prompt(),
        });
    }
    let m = condense(t, mode);
    to_char_attention(&mean_of_followers(&m), a)
}
