//! Covariate balance before and after propensity matching, player skill
//! indicators and CATE/indicator correlations.

use serde::{Deserialize, Serialize};

use crate::cohort::CohortTable;
use crate::domain::{covariate, Covariates, COVARIATE_NAMES};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::stats::{mean, sample_variance};

/// `(mean_t - mean_c) / sqrt((var_t + var_c) / 2)` with sample variances.
/// `None` when either side is empty or the pooled variance is zero.
pub fn standardized_mean_difference<F: Scalar>(treated: &[F], control: &[F]) -> Option<F> {
    let (mt, mc) = (mean(treated)?, mean(control)?);
    let pooled = (sample_variance(treated) + sample_variance(control)) / F::of(2.0);
    if !(pooled > F::zero()) {
        return None;
    }
    Some((mt - mc) / pooled.sqrt())
}

/// For each treated row, its `k` nearest control rows by propensity score,
/// with replacement. Distance ties go to the lower row index. Pairs are
/// `(treated_row, control_row)` in treated-row order.
pub fn knn_match<F: Scalar>(scores: &[F], treated: &[bool], k: usize) -> Result<Vec<(usize, usize)>> {
    if scores.len() != treated.len() {
        return Err(Error::invalid("score and treatment vectors differ in length"));
    }
    let mut controls: Vec<usize> = (0..scores.len()).filter(|&i| !treated[i]).collect();
    let n_t = treated.iter().filter(|&&t| t).count();
    if n_t == 0 || controls.is_empty() {
        return Err(Error::invalid("matching needs both arms"));
    }
    if k == 0 || k > controls.len() {
        return Err(Error::invalid(format!(
            "k = {k} is outside 1..={} control rows",
            controls.len()
        )));
    }
    controls.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let cs: Vec<F> = controls.iter().map(|&i| scores[i]).collect();
    let mut pairs = Vec::with_capacity(n_t * k);
    for t in (0..scores.len()).filter(|&i| treated[i]) {
        let s = scores[t];
        let dist = |j: usize| (cs[j] - s).abs();
        // k-th smallest distance by merging outwards from the insertion point
        let pos = cs.partition_point(|&c| c < s);
        let (mut lo, mut hi) = (pos, pos);
        let mut kth = F::zero();
        for _ in 0..k {
            let take_left = match (lo > 0, hi < cs.len()) {
                (true, true) => dist(lo - 1) <= dist(hi),
                (true, false) => true,
                _ => false,
            };
            if take_left {
                lo -= 1;
                kth = dist(lo);
            } else {
                kth = dist(hi);
                hi += 1;
            }
        }
        // every control within that distance forms one contiguous block
        while lo > 0 && dist(lo - 1) <= kth {
            lo -= 1;
        }
        while hi < cs.len() && dist(hi) <= kth {
            hi += 1;
        }
        let mut cand: Vec<usize> = (lo..hi).collect();
        cand.sort_by(|&a, &b| {
            dist(a)
                .partial_cmp(&dist(b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(controls[a].cmp(&controls[b]))
        });
        pairs.extend(cand.iter().take(k).map(|&j| (t, controls[j])));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBalance {
    pub feature: String,
    pub mean_treated: f64,
    pub mean_control: f64,
    pub mean_matched_control: f64,
    pub smd_before: Option<f64>,
    pub smd_after: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub k: usize,
    pub features: Vec<FeatureBalance>,
    pub match_pairs: Vec<(usize, usize)>,
}

impl BalanceReport {
    fn mean_abs(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
        let v: Vec<f64> = values.flatten().map(f64::abs).collect();
        mean(&v)
    }

    /// Mean |SMD| over features where it is defined.
    pub fn mean_abs_smd_before(&self) -> Option<f64> {
        Self::mean_abs(self.features.iter().map(|f| f.smd_before))
    }

    pub fn mean_abs_smd_after(&self) -> Option<f64> {
        Self::mean_abs(self.features.iter().map(|f| f.smd_after))
    }

    /// Features whose |SMD| went down after matching.
    pub fn improved_features(&self) -> usize {
        self.features
            .iter()
            .filter(|f| matches!((f.smd_before, f.smd_after), (Some(b), Some(a)) if a.abs() < b.abs()))
            .count()
    }
}

/// SMD per covariate before matching and after k-nearest-neighbor matching on
/// `scores`. Column names default to the nine covariate names.
pub fn balance_report<F: Scalar>(
    x: &Matrix<F>,
    treated: &[bool],
    scores: &[F],
    k: usize,
    names: Option<&[&str]>,
) -> Result<BalanceReport> {
    if x.rows() != treated.len() {
        return Err(Error::invalid("covariate rows and treatment flags differ in length"));
    }
    let pairs = knn_match(scores, treated, k)?;
    let names: Vec<String> = match names {
        Some(n) => n.iter().map(|s| s.to_string()).collect(),
        None if x.cols() == COVARIATE_NAMES.len() => COVARIATE_NAMES.iter().map(|s| s.to_string()).collect(),
        None => (0..x.cols()).map(|j| format!("x{j}")).collect(),
    };
    let features = (0..x.cols())
        .map(|j| {
            let col: Vec<f64> = x.column(j).iter().map(|v| v.to_f64_lossy()).collect();
            let t: Vec<f64> = (0..col.len()).filter(|&i| treated[i]).map(|i| col[i]).collect();
            let c: Vec<f64> = (0..col.len()).filter(|&i| !treated[i]).map(|i| col[i]).collect();
            let mt: Vec<f64> = pairs.iter().map(|&(a, _)| col[a]).collect();
            let mc: Vec<f64> = pairs.iter().map(|&(_, b)| col[b]).collect();
            FeatureBalance {
                feature: names.get(j).cloned().unwrap_or_default(),
                mean_treated: mean(&t).unwrap_or(f64::NAN),
                mean_control: mean(&c).unwrap_or(f64::NAN),
                mean_matched_control: mean(&mc).unwrap_or(f64::NAN),
                smd_before: standardized_mean_difference(&t, &c),
                smd_after: standardized_mean_difference(&mt, &mc),
            }
        })
        .collect();
    Ok(BalanceReport {
        k,
        features,
        match_pairs: pairs,
    })
}

/// Average match score, damage ratio and kill/death ratio for one player.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillIndicators {
    pub ams: f64,
    pub dsi: Option<f64>,
    pub kd: Option<f64>,
}

impl SkillIndicators {
    /// From pre-window covariate means. Ratios are undefined on a zero denominator.
    pub fn from_covariates(c: &Covariates) -> Self {
        let ratio = |num: f64, den: f64| (den > 0.0).then(|| num / den);
        Self {
            ams: c.get(covariate::MATCH_SCORE),
            dsi: ratio(c.get(covariate::DAMAGE_DONE), c.get(covariate::DAMAGE_TAKEN)),
            kd: ratio(c.get(covariate::ELIMINATIONS), c.get(covariate::DEATHS)),
        }
    }
}

/// Indicators for every cohort row; the cohort covariates are the
/// match-weighted means over the week before the report.
pub fn compute_skill_indicators(cohort: &CohortTable) -> Vec<SkillIndicators> {
    cohort
        .rows
        .iter()
        .map(|r| SkillIndicators::from_covariates(&r.covariates))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub n_used: usize,
    /// Rows skipped because the indicator was undefined.
    pub n_undefined: usize,
}

/// Pearson correlation over rows where the indicator is defined.
pub fn cate_feature_correlation(cate: &[f64], indicator: &[Option<f64>]) -> Result<Correlation> {
    if cate.len() != indicator.len() {
        return Err(Error::invalid("CATE and indicator vectors differ in length"));
    }
    let pairs: Vec<(f64, f64)> = cate
        .iter()
        .zip(indicator)
        .filter_map(|(&c, i)| i.filter(|v| v.is_finite() && c.is_finite()).map(|v| (c, v)))
        .collect();
    let n = pairs.len();
    if n < 3 {
        return Err(Error::Undefined(format!("correlation needs 3 defined pairs, got {n}")));
    }
    let (mx, my) = (
        pairs.iter().map(|p| p.0).sum::<f64>() / n as f64,
        pairs.iter().map(|p| p.1).sum::<f64>() / n as f64,
    );
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::Undefined("zero variance in correlation input".into()));
    }
    Ok(Correlation {
        r: (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0),
        n_used: n,
        n_undefined: cate.len() - n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smd_examples() {
        assert_eq!(standardized_mean_difference(&[1.0f64, 2.0, 3.0], &[1.0, 2.0, 3.0]), Some(0.0));
        // both sample variances 1
        let d = standardized_mean_difference(&[0.0f64, 1.0, 2.0], &[-1.0, 0.0, 1.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        assert_eq!(standardized_mean_difference(&[1.0f64, 1.0], &[1.0, 1.0]), None);
    }

    #[test]
    fn knn_ties_go_to_lowest_control() {
        let scores = [0.5f64; 5];
        let treated = [false, true, false, true, false];
        let pairs = knn_match(&scores, &treated, 1).unwrap();
        assert_eq!(pairs, vec![(1, 0), (3, 0)]);
        let pairs = knn_match(&scores, &treated, 2).unwrap();
        assert_eq!(pairs, vec![(1, 0), (1, 2), (3, 0), (3, 2)]);
    }

    #[test]
    fn knn_picks_nearest() {
        let pairs = knn_match(&[0.2f64, 0.8, 0.75], &[false, false, true], 1).unwrap();
        assert_eq!(pairs, vec![(2, 1)]);
        assert!(knn_match(&[0.2f64, 0.8, 0.75], &[false, false, true], 3).is_err());
    }

    #[test]
    fn indicator_ratios() {
        let mut c = Covariates([0.0; 9]);
        c.0[covariate::DAMAGE_DONE] = 1600.0;
        c.0[covariate::DAMAGE_TAKEN] = 1280.0;
        c.0[covariate::ELIMINATIONS] = 4.0;
        let s = SkillIndicators::from_covariates(&c);
        assert_eq!(s.dsi, Some(1.25));
        assert_eq!(s.kd, None);
    }

    #[test]
    fn correlation_extremes() {
        let ind: Vec<Option<f64>> = (0..6).map(|i| Some(i as f64)).collect();
        let cate: Vec<f64> = (0..6).map(|i| 2.0 * i as f64 + 1.0).collect();
        assert!((cate_feature_correlation(&cate, &ind).unwrap().r - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = (0..6).map(|i| -(i as f64)).collect();
        assert!((cate_feature_correlation(&neg, &ind).unwrap().r + 1.0).abs() < 1e-12);
        let flat = vec![1.0; 6];
        assert!(cate_feature_correlation(&flat, &ind).is_err());
        let sparse = vec![None, Some(1.0), None, Some(2.0), None, None];
        assert!(cate_feature_correlation(&cate, &sparse).is_err());
    }
}
