use serde::Serialize;

use super::{estimate_propensity, fit_point, CausalData, Estimator, MetaConfig};
use crate::error::Result;
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::stats;

/// Distribution summary of one estimator's CATE vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CateSummary<F> {
    pub estimator: Estimator,
    pub ate: F,
    pub mean: F,
    /// Peak of a Gaussian kernel density estimate.
    pub mode: F,
    pub sd: F,
    pub iqr: F,
}

impl<F: Scalar> CateSummary<F> {
    pub fn of(estimator: Estimator, ate: F, cate: &[F]) -> Self {
        Self {
            estimator,
            ate,
            mean: stats::mean(cate).unwrap_or_else(F::zero),
            mode: stats::kde_mode(cate).unwrap_or_else(F::zero),
            sd: stats::std_dev(cate),
            iqr: stats::interquartile_range(cate).unwrap_or_else(F::zero),
        }
    }
}

/// Runs all five estimators on the same data and summarizes their CATEs.
pub fn compare_meta_learners<F: Scalar>(
    data: &CausalData<F>,
    cfg: &MetaConfig,
    seed: u64,
) -> Result<Vec<CateSummary<F>>> {
    cfg.validate()?;
    let prop = estimate_propensity(data, &cfg.propensity, cfg.clip)?;
    Estimator::ALL
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let fit = fit_point(kind, data, cfg, Some(&prop), derive_seed(seed, &[1, k as u64]))?;
            Ok(CateSummary::of(kind, fit.ate, &fit.cate))
        })
        .collect()
}
