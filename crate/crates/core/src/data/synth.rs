//! Seeded fixtures standing in for exporter output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::data::alignment::{TokenAlignment, TokenSpan};
use crate::data::tensor::AttentionTensor;
use crate::scalar::Scalar;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random attention tensor with every row drawn uniformly from the simplex over
/// its allowed keys (normalized unit exponentials), deterministic in `seed`.
///
/// Panics if `layers`, `heads` or `n_prompt` is zero.
pub fn synth_attention<T: Scalar>(
    seed: u64,
    layers: usize,
    heads: usize,
    n_prompt: usize,
    n_generated: usize,
) -> AttentionTensor<T> {
    assert!(layers >= 1 && heads >= 1 && n_prompt >= 1, "dims must be >= 1");
    let total = n_prompt + n_generated;
    let mut rng = rng(seed);
    let mut values = vec![T::zero(); layers * heads * total * total];
    let mut row = Vec::with_capacity(total);
    for (r, out) in values.chunks_exact_mut(total).enumerate() {
        let i = r % total;
        row.clear();
        row.extend((0..=i).map(|_| rng.sample::<f64, _>(Exp1)));
        let sum: f64 = row.iter().sum();
        for (o, v) in out.iter_mut().zip(&row) {
            *o = T::of(v / sum);
        }
    }
    AttentionTensor::from_parts_unchecked(layers, heads, n_prompt, n_generated, values)
        .expect("shape is consistent by construction")
}

const VOCAB: &[&str] = &[
    "def", "x", "=", "(", ")", "return", "if", ":", "for", "in", "range", "+", "1", "0",
    "print", "self", ",", "while", "not", "and", "len", "[", "]", "i",
];

/// Code-like prompt of exactly `n_tokens` tokens (newline tokens included),
/// with byte-level spans. Lines hold 2 to 7 word tokens.
pub fn synth_alignment(seed: u64, n_tokens: usize) -> TokenAlignment {
    assert!(n_tokens >= 1, "need at least one token");
    let mut rng = rng(seed ^ 0x5EED_A11C);
    let mut prompt = String::new();
    let mut spans = Vec::with_capacity(n_tokens);
    let mut left_on_line = rng.random_range(2..=7usize);
    let mut at_line_start = true;
    while spans.len() < n_tokens {
        let start = prompt.len();
        let id;
        if left_on_line == 0 && spans.len() + 1 < n_tokens {
            prompt.push('\n');
            id = VOCAB.len() as u32;
            left_on_line = rng.random_range(2..=7);
            at_line_start = true;
        } else {
            let w = rng.random_range(0..VOCAB.len());
            if !at_line_start {
                prompt.push(' ');
            }
            prompt.push_str(VOCAB[w]);
            id = w as u32 + if at_line_start { 0 } else { 1000 };
            left_on_line = left_on_line.saturating_sub(1);
            at_line_start = false;
        }
        spans.push(TokenSpan {
            id,
            start,
            end: prompt.len(),
        });
    }
    TokenAlignment::new(prompt, spans).expect("synthetic spans tile the prompt")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tensor::INTERNAL_ROW_TOLERANCE;

    #[test]
    fn deterministic() {
        let a = synth_attention::<f32>(7, 2, 3, 5, 2);
        let b = synth_attention::<f32>(7, 2, 3, 5, 2);
        assert_eq!(a, b);
        assert_ne!(a, synth_attention::<f32>(8, 2, 3, 5, 2));
    }

    #[test]
    fn rows_are_simplex_points() {
        let t = synth_attention::<f64>(1, 2, 2, 8, 4);
        t.validate(1e-9).unwrap();
        synth_attention::<f32>(1, 2, 2, 8, 4)
            .validate(INTERNAL_ROW_TOLERANCE)
            .unwrap();
    }

    #[test]
    fn alignment_has_requested_tokens() {
        for n in [1, 2, 10, 100] {
            let a = synth_alignment(3, n);
            assert_eq!(a.n_tokens(), n);
            assert!(a.n_lines() >= 1);
        }
        assert_eq!(synth_alignment(9, 40), synth_alignment(9, 40));
    }
}
