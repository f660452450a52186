//! Base learners: ridge regression, gradient-boosted regression trees and
//! L2-penalized logistic regression.

mod constant;
mod gbt;
mod logistic;
mod ridge;
mod standardize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use constant::ConstantRegressor;
pub use gbt::{GbtParams, GradientBoostedTrees};
pub use logistic::{LogisticParams, LogisticRegression};
pub use ridge::Ridge;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const DEFAULT_L2: f64 = 1e-3;

/// Fit-then-predict regression interface shared by all meta-learners.
pub trait Regressor<F: Scalar>: Send + Sync {
    /// Fits on `x` (rows are samples) with optional non-negative sample weights.
    fn fit(&mut self, x: &Matrix<F>, y: &[F], weights: Option<&[F]>) -> Result<()>;

    /// Errors with [`Error::NotFitted`] before a successful `fit`.
    fn predict(&self, x: &Matrix<F>) -> Result<Vec<F>>;
}

/// Serializable description of a regression learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorSpec {
    Ridge { l2: f64 },
    Gbt(GbtParams),
    Constant,
}

impl RegressorSpec {
    pub fn ridge() -> Self {
        RegressorSpec::Ridge { l2: DEFAULT_L2 }
    }

    pub fn gbt() -> Self {
        RegressorSpec::Gbt(GbtParams::default())
    }

    /// Builds an unfitted learner. `seed` only matters for stochastic learners.
    pub fn build<F: Scalar>(&self, seed: u64) -> Box<dyn Regressor<F>> {
        match *self {
            RegressorSpec::Ridge { l2 } => Box::new(Ridge::new(l2)),
            RegressorSpec::Gbt(p) => Box::new(GradientBoostedTrees::new(GbtParams { seed, ..p })),
            RegressorSpec::Constant => Box::new(ConstantRegressor::default()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegressorSpec::Ridge { .. } => "linear",
            RegressorSpec::Gbt(_) => "gbt",
            RegressorSpec::Constant => "constant",
        }
    }
}

impl fmt::Display for RegressorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegressorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" | "ridge" => Ok(Self::ridge()),
            "gbt" | "trees" | "xgb" | "xgboost" => Ok(Self::gbt()),
            "constant" | "mean" => Ok(RegressorSpec::Constant),
            _ => Err(Error::Config(format!("unknown learner {s:?}"))),
        }
    }
}

fn check_training_set<F: Scalar>(x: &Matrix<F>, y: &[F], weights: Option<&[F]>) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::invalid("empty training set"));
    }
    if y.len() != x.rows() {
        return Err(Error::invalid(format!(
            "{} targets for {} feature rows",
            y.len(),
            x.rows()
        )));
    }
    if !x.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite training data"));
    }
    if let Some(w) = weights {
        if w.len() != y.len() {
            return Err(Error::invalid("weight vector length mismatch"));
        }
        if w.iter().any(|v| !v.is_finite() || *v < F::zero()) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        if w.iter().copied().sum::<F>() <= F::zero() {
            return Err(Error::invalid("weights sum to zero"));
        }
    }
    Ok(())
}

fn check_predict<F: Scalar>(x: &Matrix<F>, n_features: usize) -> Result<()> {
    if x.cols() != n_features {
        return Err(Error::invalid(format!(
            "model fitted on {n_features} features, got {}",
            x.cols()
        )));
    }
    Ok(())
}

/// Ridge fit with the given penalty.
pub fn fit_ridge<F: Scalar>(x: &Matrix<F>, y: &[F], l2: f64) -> Result<Ridge<F>> {
    let mut m = Ridge::new(l2);
    m.fit(x, y, None)?;
    Ok(m)
}

pub fn fit_gbt<F: Scalar>(x: &Matrix<F>, y: &[F], params: GbtParams) -> Result<GradientBoostedTrees<F>> {
    let mut m = GradientBoostedTrees::new(params);
    m.fit(x, y, None)?;
    Ok(m)
}

pub fn fit_logistic<F: Scalar>(x: &Matrix<F>, labels: &[bool], params: LogisticParams) -> Result<LogisticRegression<F>> {
    let mut m = LogisticRegression::new(params);
    m.fit(x, labels)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_names_round_trip() {
        for name in ["linear", "gbt", "constant"] {
            let s: RegressorSpec = name.parse().unwrap();
            assert_eq!(s.name(), name);
        }
        assert_eq!("xgb".parse::<RegressorSpec>().unwrap(), RegressorSpec::gbt());
        assert!("forest".parse::<RegressorSpec>().is_err());
    }

    #[test]
    fn predict_before_fit_is_an_error() {
        let x = Matrix::<f64>::zeros(2, 1);
        for spec in [RegressorSpec::ridge(), RegressorSpec::gbt(), RegressorSpec::Constant] {
            let m = spec.build::<f64>(0);
            assert!(matches!(m.predict(&x), Err(Error::NotFitted)));
        }
    }

    #[test]
    fn rejects_bad_training_sets() {
        let x = Matrix::<f64>::zeros(0, 2);
        assert!(Ridge::new(1.0).fit(&x, &[], None).is_err());
        let x = Matrix::from_rows(&[[1.0], [f64::NAN]]).unwrap();
        assert!(Ridge::new(1.0).fit(&x, &[1.0, 2.0], None).is_err());
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(Ridge::new(1.0).fit(&x, &[1.0, 2.0], Some(&[-1.0, 1.0])).is_err());
    }
}
