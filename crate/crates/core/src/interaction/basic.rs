use serde::{Deserialize, Serialize};

use crate::data::{normalize_rows, AttentionTensor, Granularity, InteractionMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasicMethod {
    /// Mean over all layers and heads.
    Mean,
    /// Element-wise max over all layers and heads.
    Max,
    /// Head mean of the first layer.
    First,
    /// Head mean of the last layer.
    Last,
}

/// Raw prompt-block reduction before mirroring and normalization.
pub(crate) fn reduce_prompt_block<T: Scalar>(t: &AttentionTensor<T>, method: BasicMethod) -> Vec<f64> {
    let n = t.n_prompt();
    let (layers, heads) = (t.layers(), t.heads());
    let layer_range = match method {
        BasicMethod::Mean | BasicMethod::Max => 0..layers,
        BasicMethod::First => 0..1,
        BasicMethod::Last => layers - 1..layers,
    };
    let count = (layer_range.len() * heads) as f64;
    let mut out = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0f64;
            for l in layer_range.clone() {
                for h in 0..heads {
                    let v = t.get(l, h, i, j).as_f64();
                    acc = match method {
                        BasicMethod::Max => acc.max(v),
                        _ => acc + v,
                    };
                }
            }
            out[i * n + j] = match method {
                BasicMethod::Max => acc,
                _ => acc / count,
            };
        }
    }
    out
}

/// Mean/max/first/last-layer interaction matrix over prompt tokens.
///
/// With `symmetric`, the empty upper triangle is filled with the mirrored lower
/// entries before the rows are normalized.
pub fn basic_interaction<T: Scalar>(
    t: &AttentionTensor<T>,
    method: BasicMethod,
    symmetric: bool,
) -> InteractionMatrix<T> {
    let n = t.n_prompt();
    let mut raw = reduce_prompt_block(t, method);
    if symmetric {
        for i in 0..n {
            for j in i + 1..n {
                raw[i * n + j] = raw[j * n + i];
            }
        }
    }
    let m = InteractionMatrix::from_raw(n, n, Granularity::Token, raw.into_iter().map(T::of).collect())
        .expect("attention weights are non-negative");
    normalize_rows(&m).expect("attention weights are non-negative")
}
