//! Interaction-matrix extraction from attention tensors.

mod basic;
mod followup;
mod rollout;

use std::fmt;
use std::str::FromStr;

pub use basic::{basic_interaction, BasicMethod};
pub use followup::{
    followup_interaction, followup_scores, followup_scores_layerwise, FollowupOptions,
};
pub use rollout::{rollout_interaction, RESIDUAL_MIX};

use crate::data::{AttentionTensor, Granularity, InteractionMatrix, TokenAlignment};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Every token-level extraction the toolkit offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtractionMethod {
    Basic { method: BasicMethod, symmetric: bool },
    Rollout,
    Followup,
}

impl ExtractionMethod {
    /// The ten methods in their canonical order.
    pub fn all() -> Vec<ExtractionMethod> {
        let mut out = Vec::new();
        for symmetric in [false, true] {
            for method in [BasicMethod::Mean, BasicMethod::Max, BasicMethod::First, BasicMethod::Last] {
                out.push(ExtractionMethod::Basic { method, symmetric });
            }
        }
        out.push(ExtractionMethod::Rollout);
        out.push(ExtractionMethod::Followup);
        out
    }

    pub fn extract<T: Scalar>(
        self,
        t: &AttentionTensor<T>,
        followup: &FollowupOptions,
    ) -> Result<InteractionMatrix<T>> {
        match self {
            ExtractionMethod::Basic { method, symmetric } => Ok(basic_interaction(t, method, symmetric)),
            ExtractionMethod::Rollout => Ok(rollout_interaction(t)),
            ExtractionMethod::Followup => followup_interaction(t, followup),
        }
    }
}

impl fmt::Display for ExtractionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractionMethod::Basic { method, symmetric } => {
                let name = match method {
                    BasicMethod::Mean => "mean",
                    BasicMethod::Max => "max",
                    BasicMethod::First => "first",
                    BasicMethod::Last => "last",
                };
                if *symmetric {
                    write!(f, "{name}-sym")
                } else {
                    f.write_str(name)
                }
            }
            ExtractionMethod::Rollout => f.write_str("rollout"),
            ExtractionMethod::Followup => f.write_str("followup"),
        }
    }
}

impl FromStr for ExtractionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (base, symmetric) = match s.strip_suffix("-sym") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let method = match base {
            "mean" => BasicMethod::Mean,
            "max" => BasicMethod::Max,
            "first" => BasicMethod::First,
            "last" => BasicMethod::Last,
            "rollout" if !symmetric => return Ok(ExtractionMethod::Rollout),
            "followup" if !symmetric => return Ok(ExtractionMethod::Followup),
            _ => return Err(Error::InvalidParameter(format!("unknown extraction method {s:?}"))),
        };
        Ok(ExtractionMethod::Basic { method, symmetric })
    }
}

/// Sums token-level targets into their lines: `out[i, ℓ] = Σ_{line(j) = ℓ} s[i, j]`.
pub fn to_line_level<T: Scalar>(
    s: &InteractionMatrix<T>,
    a: &TokenAlignment,
) -> Result<InteractionMatrix<T>> {
    if s.granularity() != Granularity::Token {
        return Err(Error::InvalidParameter("matrix is already line-level".into()));
    }
    if s.n_cols() != a.n_tokens() {
        return Err(Error::LengthMismatch {
            expected: a.n_tokens(),
            actual: s.n_cols(),
        });
    }
    let n_lines = a.n_lines();
    let mut out = vec![0.0f64; s.n_rows() * n_lines];
    for (i, row) in s.rows().enumerate() {
        let dst = &mut out[i * n_lines..(i + 1) * n_lines];
        for (j, v) in row.iter().enumerate() {
            dst[a.token_line(j)] += v.as_f64();
        }
    }
    InteractionMatrix::from_parts(
        s.n_rows(),
        n_lines,
        Granularity::Line,
        out.into_iter().map(T::of).collect(),
        s.row_flags().to_vec(),
    )
}
