//! Weibull distance model: CDF, discretized pmf and weighted maximum-likelihood fits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const FIT_TOLERANCE: f64 = 1e-10;
const MAX_NEWTON_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub shape: f64,
    pub scale: f64,
}

impl WeibullParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        let p = Self { shape, scale };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shape > 0.0 && self.scale > 0.0 && self.shape.is_finite() && self.scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Weibull shape and scale must be positive, got {} and {}",
                self.shape, self.scale
            )));
        }
        Ok(())
    }
}

/// `F(x) = 1 - exp(-(x/λ)^k)` for `x >= 0`.
pub fn weibull_cdf<T: Scalar>(x: T, shape: T, scale: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    -(-(x / scale).powf(shape)).exp_m1()
}

/// `P(d) = F(d) - F(d-1)` for `d = 1..=d_max`; element `d - 1` holds `P(d)`.
pub fn weibull_discrete_pmf<T: Scalar>(shape: T, scale: T, d_max: usize) -> Result<Vec<T>> {
    WeibullParams::new(shape.as_f64(), scale.as_f64())?;
    Ok((1..=d_max)
        .map(|d| {
            let lo = T::of_usize(d - 1);
            let hi = T::of_usize(d);
            // exp(-a) - exp(-b) written to avoid cancellation for large d.
            let a = (lo / scale).powf(shape);
            let b = (hi / scale).powf(shape);
            (-a).exp() * -(a - b).exp_m1()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullFit {
    pub params: WeibullParams,
    /// Weighted log-likelihood at the optimum.
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// Weighted MLE for continuous positive samples `(x, w)`.
///
/// Solves the profile-likelihood equation in the shape with Newton steps kept
/// inside a sign-change bracket (bisection when a step leaves it); the scale
/// then has the closed form `λ = (Σ w x^k / Σ w)^{1/k}`.
pub fn fit_weibull_continuous(samples: &[(f64, f64)]) -> Result<WeibullFit> {
    let samples: Vec<(f64, f64)> = samples.iter().copied().filter(|&(_, w)| w > 0.0).collect();
    if samples.is_empty() {
        return Err(Error::Empty("no weighted samples"));
    }
    if let Some(&(x, _)) = samples.iter().find(|(x, _)| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter(format!("sample {x} is not positive")));
    }
    let x_max = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let total_w: f64 = samples.iter().map(|s| s.1).sum();
    let logs: Vec<(f64, f64)> = samples.iter().map(|&(x, w)| ((x / x_max).ln(), w)).collect();
    let mean_log = logs.iter().map(|(l, w)| w * l).sum::<f64>() / total_w;
    if logs.iter().all(|(l, _)| *l == 0.0) {
        return Err(Error::Degenerate("all samples are equal".into()));
    }

    // g(k) and g'(k); g is increasing with a single root.
    let eval = |k: f64| {
        let (mut b, mut a, mut d) = (0.0, 0.0, 0.0);
        for &(l, w) in &logs {
            let yk = (k * l).exp();
            b += w * yk;
            a += w * yk * l;
            d += w * yk * l * l;
        }
        let g = a / b - 1.0 / k - mean_log;
        let dg = (d * b - a * a) / (b * b) + 1.0 / (k * k);
        (g, dg, b)
    };

    let (mut lo, mut hi) = (1e-3, 1.0);
    while eval(hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Degenerate("shape diverges".into()));
        }
    }
    let mut k = 0.5 * (lo + hi);
    let mut iterations = 0;
    for step in 1..=MAX_NEWTON_STEPS {
        iterations = step;
        let (g, dg, _) = eval(k);
        if g < 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let mut next = k - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - k).abs() <= FIT_TOLERANCE * k;
        k = next;
        if done {
            break;
        }
    }
    let (_, _, b) = eval(k);
    let scale = x_max * (b / total_w).powf(1.0 / k);
    let params = WeibullParams::new(k, scale)?;
    let log_likelihood = samples
        .iter()
        .map(|&(x, w)| {
            let z = x / scale;
            w * (k.ln() - scale.ln() + (k - 1.0) * z.ln() - z.powf(k))
        })
        .sum();
    Ok(WeibullFit {
        params,
        log_likelihood,
        iterations,
    })
}

/// Log-likelihood and its gradient in `(ln k, ln λ)` for distance counts.
fn discrete_loglik(counts: &BTreeMap<u64, f64>, log_k: f64, log_scale: f64) -> (f64, [f64; 2]) {
    let k = log_k.exp();
    let lam = log_scale.exp();
    let mut ll = 0.0;
    let mut grad = [0.0; 2];
    for (&d, &w) in counts {
        let (a, da_k) = if d == 1 {
            (0.0, 0.0)
        } else {
            let r = (d - 1) as f64 / lam;
            let a = r.powf(k);
            (a, k * a * r.ln())
        };
        let r = d as f64 / lam;
        let b = r.powf(k);
        let db_k = k * b * r.ln();
        let (da_l, db_l) = (-k * a, -k * b);
        // p = e^{-a}(1 - e^{-(b-a)})
        let tail = -(a - b).exp_m1();
        ll += w * (-a + tail.ln());
        let ra = 1.0 / tail;
        let rb = (a - b).exp() * ra;
        grad[0] += w * (-ra * da_k + rb * db_k);
        grad[1] += w * (-ra * da_l + rb * db_l);
    }
    (ll, grad)
}

/// Weighted MLE for integer distances `d >= 1` under `P(d) = F(d) - F(d-1)`.
///
/// Starts from the continuous fit on bin midpoints `d - 1/2` and refines the
/// exact discrete likelihood with damped Newton steps in log-parameters.
pub fn fit_weibull_discrete(samples: &[(u64, f64)]) -> Result<WeibullFit> {
    let mut counts = BTreeMap::new();
    for &(d, w) in samples {
        if d == 0 {
            return Err(Error::InvalidParameter("distance 0 is not a jump".into()));
        }
        if w > 0.0 {
            *counts.entry(d).or_insert(0.0) += w;
        }
    }
    if counts.len() < 2 {
        return Err(Error::Degenerate("need at least two distinct distances".into()));
    }
    let mids: Vec<(f64, f64)> = counts.iter().map(|(&d, &w)| (d as f64 - 0.5, w)).collect();
    let start = fit_weibull_continuous(&mids)?;
    let mut phi = [start.params.shape.ln(), start.params.scale.ln()];
    let (mut ll, mut grad) = discrete_loglik(&counts, phi[0], phi[1]);
    let total_w: f64 = counts.values().sum();
    let mut iterations = 0;
    for step in 1..=MAX_NEWTON_STEPS {
        iterations = step;
        // Hessian by central differences of the analytic gradient.
        let h = 1e-5;
        let mut hess = [[0.0; 2]; 2];
        for c in 0..2 {
            let mut up = phi;
            let mut dn = phi;
            up[c] += h;
            dn[c] -= h;
            let gu = discrete_loglik(&counts, up[0], up[1]).1;
            let gd = discrete_loglik(&counts, dn[0], dn[1]).1;
            for r in 0..2 {
                hess[r][c] = (gu[r] - gd[r]) / (2.0 * h);
            }
        }
        let sym = 0.5 * (hess[0][1] + hess[1][0]);
        let det = hess[0][0] * hess[1][1] - sym * sym;
        let mut delta = if hess[0][0] < 0.0 && det > 0.0 {
            [
                -(hess[1][1] * grad[0] - sym * grad[1]) / det,
                -(-sym * grad[0] + hess[0][0] * grad[1]) / det,
            ]
        } else {
            [grad[0] / total_w, grad[1] / total_w]
        };
        let mut accepted = false;
        for _ in 0..60 {
            let cand = [phi[0] + delta[0], phi[1] + delta[1]];
            let (cll, cgrad) = discrete_loglik(&counts, cand[0], cand[1]);
            if cll.is_finite() && cll >= ll - 1e-12 * ll.abs() {
                phi = cand;
                ll = cll;
                grad = cgrad;
                accepted = true;
                break;
            }
            delta = [delta[0] * 0.5, delta[1] * 0.5];
        }
        if !accepted || delta[0].abs().max(delta[1].abs()) <= FIT_TOLERANCE {
            break;
        }
    }
    Ok(WeibullFit {
        params: WeibullParams::new(phi[0].exp(), phi[1].exp())?,
        log_likelihood: ll,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Weibull};

    #[test]
    fn cdf_at_scale() {
        let v = weibull_cdf(98.144_201_0f64, 0.893_233_9, 98.144_201_0);
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert_eq!(weibull_cdf(-1.0f64, 2.0, 1.0), 0.0);
    }

    #[test]
    fn pmf_telescopes_and_decreases() {
        let (k, lam) = (0.893_233_9f64, 98.144_201_0);
        let p = weibull_discrete_pmf(k, lam, 500).unwrap();
        let total: f64 = p.iter().sum();
        assert!((total - weibull_cdf(500.0, k, lam)).abs() < 1e-12);
        assert!(p.windows(2).all(|w| w[0] > w[1]));
        assert!(p.iter().all(|&x| x > 0.0));
        assert!(weibull_discrete_pmf(0.0f64, 1.0, 3).is_err());
        assert!(weibull_discrete_pmf(1.0f64, -1.0, 3).is_err());
    }

    #[test]
    fn pmf_in_single_precision() {
        let p = weibull_discrete_pmf(0.9f32, 10.0, 50).unwrap();
        let total: f32 = p.iter().sum();
        assert!((total - weibull_cdf(50.0f32, 0.9, 10.0)).abs() < 1e-5);
    }

    #[test]
    fn continuous_fit_recovers_parameters() {
        let mut rng = crate::data::synth::rng(42);
        let dist = Weibull::new(4.0, 1.7).unwrap();
        let samples: Vec<(f64, f64)> =
            (0..20_000).map(|_| (dist.sample(&mut rng), rng.random_range(0.5..1.5))).collect();
        let fit = fit_weibull_continuous(&samples).unwrap();
        assert!((fit.params.shape - 1.7).abs() / 1.7 < 0.03, "{fit:?}");
        assert!((fit.params.scale - 4.0).abs() / 4.0 < 0.03, "{fit:?}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_weibull_continuous(&[]).is_err());
        assert!(fit_weibull_continuous(&[(2.0, 1.0), (2.0, 3.0)]).is_err());
        assert!(fit_weibull_discrete(&[(3, 1.0), (3, 2.0)]).is_err());
        assert!(fit_weibull_discrete(&[(0, 1.0), (3, 2.0)]).is_err());
    }
}
