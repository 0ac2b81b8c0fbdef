use crate::error::{Error, Result};

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Sizes of the groups of tied values, in ascending value order.
pub(crate) fn tie_groups(sorted: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        out.push(j - i);
        i = j;
    }
    out
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

/// Spearman rank correlation. `Ok(None)` when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter("spearman needs at least two values".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("spearman input contains NaN".into()));
    }
    if is_constant(x) || is_constant(y) {
        return Ok(None);
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let mean = (x.len() + 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (a, b) = (a - mean, b - mean);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Indices of the `min(3, len)` largest entries; ties go to the lower index.
pub fn top3(row: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.truncate(3);
    idx
}

/// Number of shared top-3 positions.
pub fn top3_overlap(gt: &[f64], pred: &[f64]) -> Result<usize> {
    if gt.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: gt.len(),
            actual: pred.len(),
        });
    }
    let g = top3(gt);
    Ok(top3(pred).iter().filter(|k| g.contains(k)).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        assert_eq!(tie_groups(&[1.0, 2.0, 2.0, 2.0, 3.0]), vec![1, 3, 1]);
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), Some(-1.0));
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap().unwrap();
        assert!((r - 4.5 / 22.5f64.sqrt()).abs() < 1e-15);
        assert!((r - 0.948_683).abs() < 1e-6);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), None);
        assert!(spearman(&[1.0], &[1.0]).is_err());
        assert!(spearman(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn top3_examples() {
        let mut gt = vec![0.0; 10];
        let mut pred = vec![0.0; 10];
        for (k, v) in [(2, 0.3), (5, 0.2), (7, 0.1)] {
            gt[k] = v;
        }
        for (k, v) in [(5, 0.3), (7, 0.2), (9, 0.1)] {
            pred[k] = v;
        }
        assert_eq!(top3_overlap(&gt, &pred).unwrap(), 2);
        assert_eq!(top3_overlap(&gt, &gt).unwrap(), 3);
        assert_eq!(top3(&[0.5, 0.5, 0.5, 0.5]), vec![0, 1, 2]);
        assert_eq!(top3_overlap(&[1.0, 2.0], &[2.0, 1.0]).unwrap(), 2);
    }

    proptest! {
        #[test]
        fn spearman_monotone_invariance(
            v in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30)
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let fx: Vec<f64> = x.iter().map(|a| (a / 10.0).exp() + 3.0 * a).collect();
            let fy: Vec<f64> = y.iter().map(|b| b * b * b).collect();
            let r = spearman(&x, &y).unwrap();
            let r2 = spearman(&fx, &fy).unwrap();
            match (r, r2) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn top3_scale_invariance(
            row in proptest::collection::vec(0.0f64..1.0, 1..20),
            other in proptest::collection::vec(0.0f64..1.0, 20),
            e in -20i32..20,
        ) {
            let other = &other[..row.len()];
            let scaled: Vec<f64> = row.iter().map(|v| v * 2f64.powi(e)).collect();
            prop_assert_eq!(top3(&scaled), top3(&row));
            prop_assert_eq!(top3_overlap(other, &scaled).unwrap(), top3_overlap(other, &row).unwrap());
        }
    }
}
