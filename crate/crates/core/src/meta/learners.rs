use rand::seq::SliceRandom;

use super::{CausalData, MetaConfig, PropensityModel};
use crate::error::{Error, Result};
use crate::learners::{Regressor, RegressorSpec};
use crate::rng::{derive_seed, stream};
use crate::scalar::Scalar;

/// ATE and per-row CATE from one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFit<F> {
    pub ate: F,
    pub cate: Vec<F>,
}

impl<F: Scalar> PointFit<F> {
    fn from_cate(cate: Vec<F>) -> Result<Self> {
        let ate = crate::stats::mean(&cate).ok_or_else(|| Error::invalid("empty cohort"))?;
        if !ate.is_finite() {
            return Err(Error::Singular);
        }
        Ok(Self { ate, cate })
    }
}

/// Fits a learner on the given rows of `data.x`.
fn fit_rows<F: Scalar>(
    spec: &RegressorSpec,
    seed: u64,
    data: &CausalData<F>,
    rows: &[usize],
    target: &[F],
    weights: Option<&[F]>,
) -> Result<Box<dyn Regressor<F>>> {
    let mut m = spec.build::<F>(seed);
    m.fit(&data.x.select_rows(rows), target, weights)?;
    Ok(m)
}

fn arm_models<F: Scalar>(
    data: &CausalData<F>,
    base: &RegressorSpec,
    seed: u64,
) -> Result<(Vec<F>, Vec<F>)> {
    let t = data.arm_indices(true);
    let c = data.arm_indices(false);
    let yt: Vec<F> = t.iter().map(|&i| data.y[i]).collect();
    let yc: Vec<F> = c.iter().map(|&i| data.y[i]).collect();
    let m1 = fit_rows(base, derive_seed(seed, &[1]), data, &t, &yt, None)?;
    let m0 = fit_rows(base, derive_seed(seed, &[0]), data, &c, &yc, None)?;
    Ok((m0.predict(&data.x)?, m1.predict(&data.x)?))
}

/// Separate outcome models per arm; CATE is their difference.
pub fn t_learner<F: Scalar>(data: &CausalData<F>, base: &RegressorSpec, seed: u64) -> Result<PointFit<F>> {
    data.check_arms(2)?;
    let (mu0, mu1) = arm_models(data, base, seed)?;
    PointFit::from_cate(mu1.iter().zip(&mu0).map(|(&a, &b)| a - b).collect())
}

/// One outcome model with treatment as an extra feature.
pub fn s_learner<F: Scalar>(data: &CausalData<F>, base: &RegressorSpec, seed: u64) -> Result<PointFit<F>> {
    data.check_arms(2)?;
    let w: Vec<F> = (0..data.len()).map(|i| data.w(i)).collect();
    let mut m = base.build::<F>(derive_seed(seed, &[2]));
    m.fit(&data.x.with_column(&w)?, &data.y, None)?;
    let p1 = m.predict(&data.x.with_constant_column(F::one()))?;
    let p0 = m.predict(&data.x.with_constant_column(F::zero()))?;
    PointFit::from_cate(p1.iter().zip(&p0).map(|(&a, &b)| a - b).collect())
}

/// Imputed-effect learner. Arm-specific effect models are blended with
/// `e(X)` when `weighting` is set, otherwise with the treated fraction.
pub fn x_learner<F: Scalar>(
    data: &CausalData<F>,
    base: &RegressorSpec,
    propensity: &PropensityModel<F>,
    weighting: bool,
    seed: u64,
) -> Result<PointFit<F>> {
    data.check_arms(2)?;
    check_scores(data, propensity)?;
    let (mu0, mu1) = arm_models(data, base, seed)?;
    let t = data.arm_indices(true);
    let c = data.arm_indices(false);
    let d1: Vec<F> = t.iter().map(|&i| data.y[i] - mu0[i]).collect();
    let d0: Vec<F> = c.iter().map(|&i| mu1[i] - data.y[i]).collect();
    let tau1 = fit_rows(base, derive_seed(seed, &[3]), data, &t, &d1, None)?.predict(&data.x)?;
    let tau0 = fit_rows(base, derive_seed(seed, &[4]), data, &c, &d0, None)?.predict(&data.x)?;
    let frac = F::from_usize_lossy(t.len()) / F::from_usize_lossy(data.len());
    let cate = (0..data.len())
        .map(|i| {
            let g = if weighting { propensity.scores[i] } else { frac };
            g * tau0[i] + (F::one() - g) * tau1[i]
        })
        .collect();
    PointFit::from_cate(cate)
}

/// Robinson-residual learner. Returns the fit and the number of rows dropped
/// because their treatment residual was below 1e-6 in magnitude.
pub fn r_learner<F: Scalar>(
    data: &CausalData<F>,
    base: &RegressorSpec,
    effect: &RegressorSpec,
    propensity: &PropensityModel<F>,
    seed: u64,
) -> Result<(PointFit<F>, usize)> {
    data.check_arms(2)?;
    check_scores(data, propensity)?;
    let mut m = base.build::<F>(derive_seed(seed, &[5]));
    m.fit(&data.x, &data.y, None)?;
    let mhat = m.predict(&data.x)?;
    let min_resid = F::of(1e-6);
    let mut rows = Vec::with_capacity(data.len());
    let mut pseudo = Vec::with_capacity(data.len());
    let mut weights = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let wt = data.w(i) - propensity.scores[i];
        if wt.abs() < min_resid {
            continue;
        }
        rows.push(i);
        pseudo.push((data.y[i] - mhat[i]) / wt);
        weights.push(wt * wt);
    }
    let dropped = data.len() - rows.len();
    if rows.is_empty() {
        return Err(Error::invalid("every row has a vanishing treatment residual"));
    }
    let tau = fit_rows(effect, derive_seed(seed, &[6]), data, &rows, &pseudo, Some(&weights))?;
    Ok((PointFit::from_cate(tau.predict(&data.x)?)?, dropped))
}

fn check_scores<F: Scalar>(data: &CausalData<F>, p: &PropensityModel<F>) -> Result<()> {
    if p.scores.len() != data.len() {
        return Err(Error::invalid("propensity scores do not match the cohort rows"));
    }
    for (row, &e) in p.scores.iter().enumerate() {
        if !(e > F::zero() && e < F::one()) {
            return Err(Error::UnclippedPropensity {
                row,
                value: e.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// Nuisance predictions and doubly robust scores for every row.
#[derive(Debug, Clone)]
pub struct DrScores<F> {
    pub mu0: Vec<F>,
    pub mu1: Vec<F>,
    pub e: Vec<F>,
    pub phi: Vec<F>,
}

/// Literal augmented inverse-propensity-weighted average:
///
/// `(1/N) sum_i [ (W Y - (W - e) mu1) / e - ((1 - W) Y + (W - e) mu0) / (1 - e) ]`.
pub fn aipw_formula<F: Scalar>(w: &[bool], y: &[F], e: &[F], mu0: &[F], mu1: &[F]) -> Result<F> {
    let n = check_lengths(w, y, e, mu0, mu1)?;
    let mut acc = F::zero();
    for i in 0..n {
        let wi = if w[i] { F::one() } else { F::zero() };
        let treated_term = (wi * y[i] - (wi - e[i]) * mu1[i]) / e[i];
        let control_term = ((F::one() - wi) * y[i] + (wi - e[i]) * mu0[i]) / (F::one() - e[i]);
        acc = acc + treated_term - control_term;
    }
    Ok(acc / F::from_usize_lossy(n))
}

/// Per-row doubly robust pseudo-outcomes
/// `mu1 - mu0 + W (Y - mu1) / e - (1 - W)(Y - mu0) / (1 - e)`; their mean equals
/// [`aipw_formula`].
pub fn dr_pseudo_outcomes<F: Scalar>(w: &[bool], y: &[F], e: &[F], mu0: &[F], mu1: &[F]) -> Result<Vec<F>> {
    let n = check_lengths(w, y, e, mu0, mu1)?;
    Ok((0..n)
        .map(|i| {
            let base = mu1[i] - mu0[i];
            if w[i] {
                base + (y[i] - mu1[i]) / e[i]
            } else {
                base - (y[i] - mu0[i]) / (F::one() - e[i])
            }
        })
        .collect())
}

fn check_lengths<F: Scalar>(w: &[bool], y: &[F], e: &[F], mu0: &[F], mu1: &[F]) -> Result<usize> {
    let n = w.len();
    if n == 0 || [y.len(), e.len(), mu0.len(), mu1.len()].iter().any(|&l| l != n) {
        return Err(Error::invalid("doubly robust inputs must be non-empty and equally long"));
    }
    for (row, &v) in e.iter().enumerate() {
        if !(v > F::zero() && v < F::one()) {
            return Err(Error::UnclippedPropensity {
                row,
                value: v.to_f64_lossy(),
            });
        }
    }
    Ok(n)
}

/// Outcome models per arm (optionally two-fold cross-fitted) and DR scores.
pub fn dr_scores<F: Scalar>(
    data: &CausalData<F>,
    cfg: &MetaConfig,
    propensity: &PropensityModel<F>,
    seed: u64,
) -> Result<DrScores<F>> {
    data.check_arms(2)?;
    check_scores(data, propensity)?;
    let (mu0, mu1) = if cfg.cross_fit {
        cross_fitted_arm_models(data, &cfg.base, seed)?
    } else {
        arm_models(data, &cfg.base, seed)?
    };
    let e = propensity.scores.clone();
    let phi = dr_pseudo_outcomes(&data.treated, &data.y, &e, &mu0, &mu1)?;
    Ok(DrScores { mu0, mu1, e, phi })
}

fn cross_fitted_arm_models<F: Scalar>(
    data: &CausalData<F>,
    base: &RegressorSpec,
    seed: u64,
) -> Result<(Vec<F>, Vec<F>)> {
    data.check_arms(4)?;
    let mut rng = stream(seed, &[7]);
    let mut fold = vec![0usize; data.len()];
    for arm in [true, false] {
        let mut idx = data.arm_indices(arm);
        idx.shuffle(&mut rng);
        for (k, &i) in idx.iter().enumerate() {
            fold[i] = k % 2;
        }
    }
    let mut mu0 = vec![F::zero(); data.len()];
    let mut mu1 = vec![F::zero(); data.len()];
    for f in 0..2 {
        let held: Vec<usize> = (0..data.len()).filter(|&i| fold[i] == f).collect();
        let held_x = data.x.select_rows(&held);
        for (arm, out) in [(false, &mut mu0), (true, &mut mu1)] {
            let train: Vec<usize> = (0..data.len())
                .filter(|&i| fold[i] != f && data.treated[i] == arm)
                .collect();
            let y: Vec<F> = train.iter().map(|&i| data.y[i]).collect();
            let m = fit_rows(base, derive_seed(seed, &[8, f as u64, u64::from(arm)]), data, &train, &y, None)?;
            for (&i, p) in held.iter().zip(m.predict(&held_x)?) {
                out[i] = p;
            }
        }
    }
    Ok((mu0, mu1))
}

/// Doubly robust ATE only (no second stage).
pub fn dr_learner_ate<F: Scalar>(
    data: &CausalData<F>,
    cfg: &MetaConfig,
    propensity: &PropensityModel<F>,
    seed: u64,
) -> Result<F> {
    let s = dr_scores(data, cfg, propensity, seed)?;
    aipw_formula(&data.treated, &data.y, &s.e, &s.mu0, &s.mu1)
}

/// Doubly robust learner: CATE from regressing the DR scores on X with the
/// effect learner; ATE is the mean DR score.
pub fn dr_learner_cate<F: Scalar>(
    data: &CausalData<F>,
    cfg: &MetaConfig,
    propensity: &PropensityModel<F>,
    seed: u64,
) -> Result<PointFit<F>> {
    let s = dr_scores(data, cfg, propensity, seed)?;
    let ate = crate::stats::mean(&s.phi).ok_or_else(|| Error::invalid("empty cohort"))?;
    let mut m = cfg.effect.build::<F>(derive_seed(seed, &[9]));
    m.fit(&data.x, &s.phi, None)?;
    Ok(PointFit {
        ate,
        cate: m.predict(&data.x)?,
    })
}
