//! Attention-agnostic interaction predictors and the forward/backward
//! Weibull traversal model.

mod baselines;
mod fit;
mod weibull;

use serde::{Deserialize, Serialize};

pub use baselines::{copycat, gaussian_position, uniform_preceding, weibull_traversal, Copycat, DEFAULT_SIGMA};
pub use fit::{fit_traversal_params, ols, FitWeighting, LinearFit, TraversalFit};
pub use weibull::{
    fit_weibull_continuous, fit_weibull_discrete, weibull_cdf, weibull_discrete_pmf, WeibullFit,
    WeibullParams,
};

use crate::error::Result;

/// `mass(u) = intercept + slope · u`, clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub intercept: f64,
    pub slope: f64,
}

impl Regression {
    pub fn mass(&self, u: f64) -> f64 {
        (self.intercept + self.slope * u).clamp(0.0, 1.0)
    }
}

/// Two-tier traversal model: direction mass as a linear function of the
/// relative position `u = i / (n - 1)`, jump distance as a Weibull per direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraversalParams {
    pub forward: Regression,
    pub backward: Regression,
    pub forward_weibull: WeibullParams,
    pub backward_weibull: WeibullParams,
}

impl Default for TraversalParams {
    /// Values fitted on recorded developer sessions over sense-making tasks.
    fn default() -> Self {
        Self {
            forward: Regression {
                intercept: 0.940639,
                slope: -0.745988,
            },
            backward: Regression {
                intercept: 0.052612,
                slope: 0.745747,
            },
            forward_weibull: WeibullParams {
                shape: 0.8932339,
                scale: 98.1442010,
            },
            backward_weibull: WeibullParams {
                shape: 0.8831494,
                scale: 105.6159039,
            },
        }
    }
}

impl TraversalParams {
    pub fn validate(&self) -> Result<()> {
        self.forward_weibull.validate()?;
        self.backward_weibull.validate()
    }

    /// Clamped (forward, backward, self) masses at relative position `u`.
    pub fn direction_masses(&self, u: f64) -> (f64, f64, f64) {
        let f = self.forward.mass(u);
        let b = self.backward.mass(u);
        (f, b, (1.0 - f - b).max(0.0))
    }
}
