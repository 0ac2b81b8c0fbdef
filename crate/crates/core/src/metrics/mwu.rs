use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::rank::{average_ranks, tie_groups};

/// Largest smaller-sample size for which the p-value is computed exactly.
pub const EXACT_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `min(u_a, u_b)`.
    pub u: f64,
    pub u_a: f64,
    pub u_b: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Mann-Whitney U test with mid-ranks for ties.
///
/// Exact null distribution of the rank sum when the smaller sample has at most
/// [`EXACT_MAX`] values, tie-corrected normal approximation with continuity
/// correction otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("Mann-Whitney sample"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("Mann-Whitney sample contains NaN".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = average_ranks(&pooled);
    let r_a: f64 = ranks[..n1].iter().sum();
    let u_a = r_a - (n1 * (n1 + 1)) as f64 / 2.0;
    let u_b = (n1 * n2) as f64 - u_a;
    let exact = n1.min(n2) <= EXACT_MAX;
    let p = if exact {
        let (small, small_ranks) = if n1 <= n2 { (n1, &ranks[..n1]) } else { (n2, &ranks[n1..]) };
        exact_p(&ranks, small, small_ranks)
    } else {
        let mut sorted = pooled;
        sorted.sort_by(f64::total_cmp);
        normal_p(u_a, n1, n2, &tie_groups(&sorted))
    };
    Ok(MannWhitney {
        u: u_a.min(u_b),
        u_a,
        u_b,
        p,
        exact,
    })
}

fn exact_p(ranks: &[f64], k: usize, chosen: &[f64]) -> f64 {
    // Doubled mid-ranks are integers.
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let observed: usize = chosen.iter().map(|r| (2.0 * r).round() as usize).sum();
    let max_sum: usize = {
        let mut d = doubled.clone();
        d.sort_unstable_by(|x, y| y.cmp(x));
        d[..k].iter().sum()
    };
    let width = max_sum + 1;
    let mut ways = vec![0.0f64; (k + 1) * width];
    ways[0] = 1.0;
    for (seen, &r) in doubled.iter().enumerate() {
        for c in (1..=k.min(seen + 1)).rev() {
            let (lo, hi) = ways.split_at_mut(c * width);
            let prev = &lo[(c - 1) * width..];
            let cur = &mut hi[..width];
            for s in r..width {
                cur[s] += prev[s - r];
            }
        }
    }
    let dist = &ways[k * width..];
    let total: f64 = dist.iter().sum();
    let below: f64 = dist[..=observed].iter().sum();
    let above: f64 = dist[observed..].iter().sum();
    (2.0 * below.min(above) / total).min(1.0)
}

fn normal_p(u_a: f64, n1: usize, n2: usize, ties: &[usize]) -> f64 {
    let (n1, n2) = (n1 as f64, n2 as f64);
    let n = n1 + n2;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u_a - n1 * n2 / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_samples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.exact);
        assert!((r.p - 0.1).abs() < 1e-15);
    }

    #[test]
    fn identical_samples() {
        let a = [0.3, 1.0, 2.5, 2.5, 4.0];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.u, 12.5);
        assert_eq!(r.p, 1.0);
        let big: Vec<f64> = (0..30).map(|k| (k % 7) as f64).collect();
        let r = mann_whitney_u(&big, &big).unwrap();
        assert_eq!(r.u, 450.0);
        assert!(!r.exact);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn u_complement_identity() {
        let a = [1.0, 4.0, 4.0, 9.0, 2.0];
        let b = [4.0, 3.0, 8.0, 8.0, 0.5, 7.0, 1.0];
        let ab = mann_whitney_u(&a, &b).unwrap();
        let ba = mann_whitney_u(&b, &a).unwrap();
        assert_eq!(ab.u_a + ba.u_a, 35.0);
        assert_eq!(ab.u_a, ba.u_b);
        assert!((ab.p - ba.p).abs() < 1e-15);
    }

    #[test]
    fn all_tied_is_not_significant() {
        let r = mann_whitney_u(&[2.0; 3], &[2.0; 4]).unwrap();
        assert_eq!(r.p, 1.0);
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }
}
