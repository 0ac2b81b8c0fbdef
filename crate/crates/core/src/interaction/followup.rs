//! Follow-up attention: cosine similarity between the attention a token
//! receives at layer `z` and the attention another token receives at layer
//! `z + 1`, summed over consecutive layer pairs.
//!
//! For prompt tokens `i`, `j` the follower vectors run over the common
//! followers `r` in `max(i, j) + 1 .. T'`, where `T' = n + g` when only the
//! first `g` generated tokens are used as observers.

use crate::data::{head_sum, normalize_rows, AttentionTensor, Granularity, InteractionMatrix, LayerwiseAttention};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FollowupOptions {
    /// 0-based layer pairs `z` (meaning `(z, z + 1)`); all `0..L-1` when `None`.
    pub layer_pairs: Option<Vec<usize>>,
    /// Number of generated tokens used as observers; all of them when `None`.
    pub max_observers: Option<usize>,
}

/// Column-major copy of one layer's prompt columns over observer rows `0..rows`.
struct Columns {
    rows: usize,
    data: Vec<f64>,
}

impl Columns {
    fn new<T: Scalar>(lw: &LayerwiseAttention<T>, layer: usize, n: usize, rows: usize) -> Self {
        let mut data = vec![0.0f64; n * rows];
        for r in 0..rows {
            for c in 0..n.min(r + 1) {
                data[c * rows + r] = lw.get(layer, r, c).as_f64();
            }
        }
        Self { rows, data }
    }

    #[inline]
    fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// `suffix[c][s] = Σ_{r >= s} col(c)[r]²`, summed from the last row backwards
    /// so that it equals a reverse-order self dot product bit for bit.
    fn suffix_squares(&self, n: usize) -> Vec<f64> {
        let stride = self.rows + 1;
        let mut out = vec![0.0f64; n * stride];
        for c in 0..n {
            let col = self.col(c);
            let s = &mut out[c * stride..(c + 1) * stride];
            for r in (0..self.rows).rev() {
                s[r] = s[r + 1] + col[r] * col[r];
            }
        }
        out
    }
}

#[inline]
fn reverse_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        acc += x * y;
    }
    acc
}

fn resolve_pairs(layers: usize, opts: &FollowupOptions) -> Result<Vec<usize>> {
    match &opts.layer_pairs {
        None => Ok((0..layers.saturating_sub(1)).collect()),
        Some(pairs) => {
            for &z in pairs {
                if z + 1 >= layers {
                    return Err(Error::InvalidParameter(format!(
                        "layer pair {z} outside 0..{}",
                        layers.saturating_sub(1)
                    )));
                }
            }
            Ok(pairs.clone())
        }
    }
}

fn resolve_rows(n_prompt: usize, n_generated: usize, opts: &FollowupOptions) -> Result<usize> {
    match opts.max_observers {
        None => Ok(n_prompt + n_generated),
        Some(g) if g <= n_generated => Ok(n_prompt + g),
        Some(g) => Err(Error::InvalidParameter(format!(
            "max_observers {g} exceeds generated token count {n_generated}"
        ))),
    }
}

/// Pre-normalization follow-up scores from layer-wise attention.
///
/// Entry `(i, j)` is `Σ_z cos(f_i^(z), f_j^(z+1))`; a pair with no common
/// followers or a zero follower vector contributes 0.
pub fn followup_scores_layerwise<T: Scalar>(
    lw: &LayerwiseAttention<T>,
    n_prompt: usize,
    opts: &FollowupOptions,
) -> Result<InteractionMatrix<T>> {
    let total = lw.total();
    if n_prompt == 0 || n_prompt > total {
        return Err(Error::Dims(format!("n_prompt {n_prompt} outside 1..={total}")));
    }
    let pairs = resolve_pairs(lw.layers(), opts)?;
    let rows = resolve_rows(n_prompt, total - n_prompt, opts)?;
    let n = n_prompt;
    let mut scores = vec![0.0f64; n * n];

    let mut cache: Vec<Option<(Columns, Vec<f64>)>> = (0..lw.layers()).map(|_| None).collect();
    let stride = rows + 1;
    for &z in &pairs {
        for layer in [z, z + 1] {
            if cache[layer].is_none() {
                let cols = Columns::new(lw, layer, n, rows);
                let sq = cols.suffix_squares(n);
                cache[layer] = Some((cols, sq));
            }
        }
        let (lower, upper) = (cache[z].as_ref().unwrap(), cache[z + 1].as_ref().unwrap());
        for i in 0..n {
            let fi = lower.0.col(i);
            for j in 0..n {
                let start = i.max(j) + 1;
                if start >= rows {
                    continue;
                }
                let na = lower.1[i * stride + start];
                let nb = upper.1[j * stride + start];
                if na == 0.0 || nb == 0.0 {
                    continue;
                }
                let fj = upper.0.col(j);
                let dot = reverse_dot(&fi[start..], &fj[start..]);
                scores[i * n + j] += dot / (na * nb).sqrt();
            }
        }
    }
    InteractionMatrix::from_raw(n, n, Granularity::Token, scores.into_iter().map(T::of).collect())
}

pub fn followup_scores<T: Scalar>(
    t: &AttentionTensor<T>,
    opts: &FollowupOptions,
) -> Result<InteractionMatrix<T>> {
    followup_scores_layerwise(&head_sum(t), t.n_prompt(), opts)
}

/// Row-normalized follow-up attention over prompt tokens.
pub fn followup_interaction<T: Scalar>(
    t: &AttentionTensor<T>,
    opts: &FollowupOptions,
) -> Result<InteractionMatrix<T>> {
    normalize_rows(&followup_scores(t, opts)?)
}
