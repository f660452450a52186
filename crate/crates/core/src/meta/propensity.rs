use serde::{Deserialize, Serialize};

use super::CausalData;
use crate::error::{Error, Result};
use crate::learners::{LogisticParams, LogisticRegression};
use crate::scalar::Scalar;

pub const DEFAULT_CLIP: (f64, f64) = (0.01, 0.99);

/// How treatment probabilities are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropensitySpec {
    Logistic(LogisticParams),
    /// Fixed score for every row, regardless of covariates.
    Constant { value: f64 },
}

impl Default for PropensitySpec {
    fn default() -> Self {
        PropensitySpec::Logistic(LogisticParams::default())
    }
}

/// Clipped propensity scores for the rows of one [`CausalData`].
#[derive(Debug, Clone)]
pub struct PropensityModel<F> {
    pub scores: Vec<F>,
    pub clip: (f64, f64),
    /// Solver convergence for logistic fits.
    pub converged: Option<bool>,
}

pub(crate) fn validate_clip(clip: (f64, f64)) -> Result<()> {
    let (lo, hi) = clip;
    if !(lo > 0.0 && lo < hi && hi < 1.0) {
        return Err(Error::Config(format!("clip bounds ({lo}, {hi}) must satisfy 0 < lo < hi < 1")));
    }
    Ok(())
}

impl<F: Scalar> PropensityModel<F> {
    /// Clips externally supplied scores.
    pub fn from_scores(raw: &[F], clip: (f64, f64)) -> Result<Self> {
        validate_clip(clip)?;
        let (lo, hi) = (F::of(clip.0), F::of(clip.1));
        if raw.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("non-finite propensity score"));
        }
        Ok(Self {
            scores: raw.iter().map(|&s| s.max(lo).min(hi)).collect(),
            clip,
            converged: None,
        })
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            scores: idx.iter().map(|&i| self.scores[i]).collect(),
            clip: self.clip,
            converged: self.converged,
        }
    }
}

/// Fits P(W = 1 | X) and clips the scores into `clip`.
pub fn estimate_propensity<F: Scalar>(
    data: &CausalData<F>,
    spec: &PropensitySpec,
    clip: (f64, f64),
) -> Result<PropensityModel<F>> {
    validate_clip(clip)?;
    data.check_arms(1)?;
    match *spec {
        PropensitySpec::Constant { value } => {
            let mut m = PropensityModel::from_scores(&vec![F::of(value); data.len()], clip)?;
            m.converged = None;
            Ok(m)
        }
        PropensitySpec::Logistic(params) => {
            let mut lr = LogisticRegression::new(params);
            lr.fit(&data.x, &data.treated)?;
            let raw = lr.predict_proba(&data.x)?;
            let mut m = PropensityModel::from_scores(&raw, clip)?;
            m.converged = Some(lr.converged());
            Ok(m)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn separable_scores_hit_the_clip_bounds() {
        let rows: Vec<[f64; 1]> = (0..20).map(|i| [i as f64]).collect();
        let treated: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let d = CausalData::new(Matrix::from_rows(&rows).unwrap(), treated, vec![0.0; 20]).unwrap();
        let m = estimate_propensity(&d, &PropensitySpec::default(), DEFAULT_CLIP).unwrap();
        let min = m.scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = m.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(min, 0.01);
        assert_eq!(max, 0.99);
    }

    #[test]
    fn bad_clip_rejected() {
        assert!(validate_clip((0.0, 0.9)).is_err());
        assert!(validate_clip((0.6, 0.4)).is_err());
        assert!(validate_clip((0.1, 1.0)).is_err());
    }
}
