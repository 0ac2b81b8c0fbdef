use crate::data::{normalize_rows, AttentionTensor, Granularity, InteractionMatrix};
use crate::scalar::Scalar;

/// Weight of the attention term in each layer's residual mix (the rest is identity).
pub const RESIDUAL_MIX: f64 = 0.5;

/// Per-layer mixed attention `row_normalize(0.5·row_normalize(Σ_h A) + 0.5·I)`, `T x T`.
pub(crate) fn mixed_layer<T: Scalar>(t: &AttentionTensor<T>, layer: usize) -> Vec<f64> {
    let total = t.total();
    let mut m = vec![0.0f64; total * total];
    for h in 0..t.heads() {
        for (acc, v) in m.iter_mut().zip(t.slice(layer, h)) {
            *acc += v.as_f64();
        }
    }
    for (i, row) in m.chunks_mut(total).enumerate() {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v = RESIDUAL_MIX * *v / sum);
        }
        row[i] += 1.0 - RESIDUAL_MIX;
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= sum);
    }
    m
}

/// Attention rollout summed over all layers, restricted to the prompt block and
/// renormalized over prompt columns.
///
/// `R_1 = Ã_1`, `R_z = Ã_z · R_{z-1}`; all factors are lower triangular, so the
/// products only touch `j <= k <= i`.
pub fn rollout_interaction<T: Scalar>(t: &AttentionTensor<T>) -> InteractionMatrix<T> {
    let total = t.total();
    let n = t.n_prompt();
    let mut rollout = mixed_layer(t, 0);
    let mut acc = rollout.clone();
    let mut next = vec![0.0f64; total * total];
    for z in 1..t.layers() {
        let mixed = mixed_layer(t, z);
        for i in 0..total {
            for j in 0..=i {
                let mut s = 0.0f64;
                for k in j..=i {
                    s += mixed[i * total + k] * rollout[k * total + j];
                }
                next[i * total + j] = s;
            }
        }
        std::mem::swap(&mut rollout, &mut next);
        for (a, r) in acc.iter_mut().zip(&rollout) {
            *a += r;
        }
    }
    let prompt: Vec<T> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| T::of(acc[i * total + j]))
        .collect();
    let m = InteractionMatrix::from_raw(n, n, Granularity::Token, prompt)
        .expect("rollout products are non-negative");
    normalize_rows(&m).expect("rollout products are non-negative")
}
