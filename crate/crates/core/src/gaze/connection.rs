//! Temporal connection strength between token events and the ground-truth
//! interaction matrix built from it.

use crate::data::{normalize_rows, Granularity, InteractionMatrix};
use crate::error::{Error, Result};
use crate::gaze::baseline::{neighbor_normalize, OffsetBaseline};
use crate::gaze::events::TokenEvent;
use crate::scalar::Scalar;

/// Default decay rate, per second.
pub const DEFAULT_ALPHA: f64 = 0.1;

/// `∫_{t_j}^{t_j+d_j} e^{-α(t-(t_i+d_i))} dt` in closed form:
/// `(1/α)·e^{-α(t_j-(t_i+d_i))}·(1-e^{-α·d_j})`. Times in seconds.
///
/// The pair must be admissible: the second event starts no earlier than the
/// first one ends.
pub fn pair_contribution<T: Scalar>(t_i: T, d_i: T, t_j: T, d_j: T, alpha: T) -> Result<T> {
    if !(alpha > T::zero()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let end_i = t_i + d_i;
    if t_j < end_i {
        return Err(Error::InadmissiblePair {
            t_j: t_j.as_f64(),
            end_i: end_i.as_f64(),
        });
    }
    let gap = t_j - end_i;
    Ok((-alpha * gap).exp() * -(-alpha * d_j).exp_m1() / alpha)
}

pub fn event_pair_contribution(first: &TokenEvent, second: &TokenEvent, alpha: f64) -> Result<f64> {
    pair_contribution(first.t, first.d, second.t, second.d, alpha)
}

/// Unnormalized `S[i,j]`: the sum of [`pair_contribution`] over every admissible
/// ordered pair of events on tokens `i` then `j`.
///
/// Runs in `O(E·n)`: events are visited in start-time order while a per-token
/// accumulator holds `Σ e^{-α(t - end_i)}` over the events that have already ended.
pub fn ground_truth_raw<T: Scalar>(
    events: &[TokenEvent],
    alpha: f64,
    n_tokens: usize,
) -> Result<InteractionMatrix<T>> {
    if events.is_empty() {
        return Err(Error::Empty("session has no token events"));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if let Some(e) = events.iter().find(|e| e.token >= n_tokens || !(e.d > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "token event {e:?} outside 0..{n_tokens} or with non-positive duration"
        )));
    }
    let mut by_start: Vec<&TokenEvent> = events.iter().collect();
    by_start.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.token.cmp(&b.token)));
    let mut by_end = by_start.clone();
    by_end.sort_by(|a, b| a.end().total_cmp(&b.end()).then(a.token.cmp(&b.token)));

    let mut s = vec![0.0f64; n_tokens * n_tokens];
    let mut acc = vec![0.0f64; n_tokens];
    let mut active: Vec<usize> = Vec::new();
    let mut is_active = vec![false; n_tokens];
    let mut now = by_start[0].t;
    let mut next_end = 0;
    for e in by_start {
        if e.t > now {
            let decay = (-alpha * (e.t - now)).exp();
            for &i in &active {
                acc[i] *= decay;
            }
            now = e.t;
        }
        while next_end < by_end.len() && by_end[next_end].end() <= e.t {
            let done = by_end[next_end];
            if !is_active[done.token] {
                is_active[done.token] = true;
                active.push(done.token);
            }
            acc[done.token] += (-alpha * (e.t - done.end())).exp();
            next_end += 1;
        }
        let mass = -(-alpha * e.d).exp_m1() / alpha;
        let j = e.token;
        for &i in &active {
            s[i * n_tokens + j] += acc[i] * mass;
        }
    }
    InteractionMatrix::from_raw(
        n_tokens,
        n_tokens,
        Granularity::Token,
        s.into_iter().map(T::of).collect(),
    )
}

/// Ground-truth interaction matrix: raw strengths, divided by the offset
/// baseline when one is given, then row-normalized.
pub fn ground_truth_interaction<T: Scalar>(
    events: &[TokenEvent],
    alpha: f64,
    n_tokens: usize,
    baseline: Option<&OffsetBaseline>,
) -> Result<InteractionMatrix<T>> {
    let raw = ground_truth_raw::<T>(events, alpha, n_tokens)?;
    match baseline {
        Some(b) => neighbor_normalize(&raw, b),
        None => normalize_rows(&raw),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: f64, token: usize, d: f64) -> TokenEvent {
        TokenEvent { t, token, d }
    }

    #[test]
    fn worked_value() {
        let v: f64 = pair_contribution(0.0, 1.0, 2.0, 1.0, 0.1).unwrap();
        assert!((v - 0.861_066_649_579_777).abs() < 1e-12, "{v}");
    }

    #[test]
    fn limits() {
        assert_eq!(pair_contribution::<f64>(0.0, 1.0, 1.0, 0.0, 0.1).unwrap(), 0.0);
        let full: f64 = pair_contribution(0.0, 1.0, 1.0, 1000.0, 0.1).unwrap();
        assert!((full - 10.0).abs() < 1e-12);
        assert!(pair_contribution::<f64>(0.0, 1.0, 0.5, 1.0, 0.1).is_err());
        assert!(pair_contribution::<f64>(0.0, 1.0, 2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn two_sequential_events() {
        let s = ground_truth_raw::<f64>(&[ev(0.0, 1, 1.0), ev(2.0, 3, 1.0)], 0.1, 4).unwrap();
        let nonzero: Vec<usize> = (0..16).filter(|&k| s.values()[k] != 0.0).collect();
        assert_eq!(nonzero, vec![1 * 4 + 3]);
        assert!((s.get(1, 3) - 0.861_066_649_579_777).abs() < 1e-7);
    }

    #[test]
    fn overlapping_events_do_not_pair() {
        let s = ground_truth_raw::<f64>(&[ev(0.0, 0, 1.0), ev(0.0, 1, 1.0)], 0.1, 2).unwrap();
        assert!(s.values().iter().all(|v| *v == 0.0));
        assert!(ground_truth_raw::<f64>(&[], 0.1, 2).is_err());
    }
}
