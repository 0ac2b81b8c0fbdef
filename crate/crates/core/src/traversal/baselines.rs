use crate::data::{normalize_rows, Granularity, InteractionMatrix, TokenAlignment};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::traversal::weibull::weibull_discrete_pmf;
use crate::traversal::TraversalParams;

/// Default standard deviation, in tokens, of the position baseline.
pub const DEFAULT_SIGMA: f64 = 10.0;

fn stochastic<T: Scalar>(n_rows: usize, n_cols: usize, raw: Vec<f64>) -> InteractionMatrix<T> {
    let m = InteractionMatrix::from_raw(n_rows, n_cols, Granularity::Token, raw.into_iter().map(T::of).collect())
        .expect("baseline weights are non-negative");
    normalize_rows(&m).expect("baseline weights are non-negative")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Copycat<T> {
    pub matrix: InteractionMatrix<T>,
    /// Rows whose token has no duplicate and fell back to uniform over all other positions.
    pub fallback: Vec<bool>,
}

/// Predicts the other positions holding the same token id.
pub fn copycat<T: Scalar>(a: &TokenAlignment) -> Copycat<T> {
    let ids: Vec<u32> = a.tokens().iter().map(|t| t.id).collect();
    let n = ids.len();
    let mut raw = vec![0.0f64; n * n];
    let mut fallback = vec![false; n];
    for i in 0..n {
        let row = &mut raw[i * n..(i + 1) * n];
        let mut any = false;
        for j in 0..n {
            if j != i && ids[j] == ids[i] {
                row[j] = 1.0;
                any = true;
            }
        }
        if !any {
            fallback[i] = true;
            for (j, v) in row.iter_mut().enumerate() {
                if j != i {
                    *v = 1.0;
                }
            }
        }
    }
    Copycat {
        matrix: stochastic(n, n, raw),
        fallback,
    }
}

/// Uniform over all preceding positions; the first row has none and is zero.
pub fn uniform_preceding<T: Scalar>(n: usize) -> Result<InteractionMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one token".into()));
    }
    let mut raw = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..i {
            raw[i * n + j] = 1.0;
        }
    }
    Ok(stochastic(n, n, raw))
}

/// Gaussian kernel of width `sigma` tokens centred on the current token,
/// truncated to the prompt and renormalized.
pub fn gaussian_position<T: Scalar>(n: usize, sigma: f64) -> Result<InteractionMatrix<T>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let mut raw = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = j as f64 - i as f64;
            raw[i * n + j] = (-d * d / (2.0 * sigma * sigma)).exp();
        }
    }
    Ok(stochastic(n, n, raw))
}

/// Two-tier traversal model: forward/backward/self masses from the linear
/// direction model, spread over distances by the discretized Weibull pmf,
/// truncated at the prompt boundary and renormalized per row.
pub fn weibull_traversal<T: Scalar>(n: usize, p: &TraversalParams) -> Result<InteractionMatrix<T>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("weibull traversal needs n >= 2, got {n}")));
    }
    p.validate()?;
    let fwd = weibull_discrete_pmf(p.forward_weibull.shape, p.forward_weibull.scale, n - 1)?;
    let bwd = weibull_discrete_pmf(p.backward_weibull.shape, p.backward_weibull.scale, n - 1)?;
    let mut raw = vec![0.0f64; n * n];
    for i in 0..n {
        let u = i as f64 / (n - 1) as f64;
        let (pf, pb, ps) = p.direction_masses(u);
        let row = &mut raw[i * n..(i + 1) * n];
        row[i] = ps;
        for j in i + 1..n {
            row[j] = pf * fwd[j - i - 1];
        }
        for j in 0..i {
            row[j] = pb * bwd[i - j - 1];
        }
    }
    Ok(stochastic(n, n, raw))
}
