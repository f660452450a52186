//! Treatment-effect meta-learners (T, S, X, R and doubly robust), propensity
//! estimation and bootstrap intervals.

mod bootstrap;
mod compare;
mod learners;
mod propensity;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bootstrap::{bootstrap_ates, bootstrap_ci, percentile_interval, BootstrapConfig};
pub use compare::{compare_meta_learners, CateSummary};
pub use learners::{
    aipw_formula, dr_learner_ate, dr_learner_cate, dr_pseudo_outcomes, dr_scores, r_learner, s_learner,
    t_learner, x_learner, DrScores, PointFit,
};
pub use propensity::{estimate_propensity, PropensityModel, PropensitySpec, DEFAULT_CLIP};

use crate::cohort::SetupKind;
use crate::error::{Error, Result};
use crate::learners::RegressorSpec;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Estimation view of a cohort: covariates, treatment flags, one outcome and
/// the matching pre-period baseline used for relative effects.
#[derive(Debug, Clone)]
pub struct CausalData<F> {
    pub x: Matrix<F>,
    pub treated: Vec<bool>,
    pub y: Vec<F>,
    /// Per-row baseline level of the outcome; may be empty.
    pub baseline: Vec<F>,
    /// Position of each row in the originating cohort table.
    pub row_index: Vec<usize>,
}

impl<F: Scalar> CausalData<F> {
    pub fn new(x: Matrix<F>, treated: Vec<bool>, y: Vec<F>) -> Result<Self> {
        if treated.len() != x.rows() || y.len() != x.rows() {
            return Err(Error::invalid("covariate, treatment and outcome lengths differ"));
        }
        if !x.all_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite covariates or outcomes"));
        }
        let row_index = (0..y.len()).collect();
        Ok(Self {
            x,
            treated,
            y,
            baseline: Vec::new(),
            row_index,
        })
    }

    pub fn with_baseline(mut self, baseline: Vec<F>) -> Self {
        self.baseline = baseline;
        self
    }

    pub fn with_row_index(mut self, row_index: Vec<usize>) -> Self {
        self.row_index = row_index;
        self
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_treated(&self) -> usize {
        self.treated.iter().filter(|&&t| t).count()
    }

    pub fn n_control(&self) -> usize {
        self.len() - self.n_treated()
    }

    pub fn arm_indices(&self, treated: bool) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.treated[i] == treated).collect()
    }

    pub fn w(&self, i: usize) -> F {
        if self.treated[i] {
            F::one()
        } else {
            F::zero()
        }
    }

    /// Errors unless both arms hold at least `min` rows.
    pub fn check_arms(&self, min: usize) -> Result<()> {
        let (t, c) = (self.n_treated(), self.n_control());
        if t < min || c < min {
            return Err(Error::invalid(format!(
                "arms too small to fit: {t} treated, {c} control (need {min} each)"
            )));
        }
        Ok(())
    }

    /// Rows in the given order; repeats allowed.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            treated: idx.iter().map(|&i| self.treated[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            baseline: if self.baseline.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| self.baseline[i]).collect()
            },
            row_index: idx.iter().map(|&i| self.row_index[i]).collect(),
        }
    }

    pub fn control_baseline_mean(&self) -> Option<F> {
        if self.baseline.len() != self.len() {
            return None;
        }
        let c: Vec<F> = (0..self.len()).filter(|&i| !self.treated[i]).map(|i| self.baseline[i]).collect();
        crate::stats::mean(&c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    T,
    S,
    X,
    R,
    Dr,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [Estimator::T, Estimator::S, Estimator::X, Estimator::R, Estimator::Dr];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::T => "t_learner",
            Estimator::S => "s_learner",
            Estimator::X => "x_learner",
            Estimator::R => "r_learner",
            Estimator::Dr => "dr_learner",
        }
    }

    pub fn needs_propensity(self) -> bool {
        matches!(self, Estimator::X | Estimator::R | Estimator::Dr)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = s.trim().to_ascii_lowercase();
        let k = k.strip_suffix("_learner").or_else(|| k.strip_suffix("-learner")).unwrap_or(&k);
        match k {
            "t" => Ok(Estimator::T),
            "s" => Ok(Estimator::S),
            "x" => Ok(Estimator::X),
            "r" => Ok(Estimator::R),
            "dr" => Ok(Estimator::Dr),
            _ => Err(Error::Config(format!("unknown estimator {s:?}"))),
        }
    }
}

/// Learner choices shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaConfig {
    /// Nuisance (outcome) learner.
    pub base: RegressorSpec,
    /// Second-stage learner for the R and DR learners.
    pub effect: RegressorSpec,
    pub propensity: PropensitySpec,
    pub clip: (f64, f64),
    /// X-learner combines arm-specific effects with e(X) when set, otherwise
    /// with the treated fraction.
    pub x_weighting: bool,
    /// Two-fold cross-fitting of the DR outcome models.
    pub cross_fit: bool,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            base: RegressorSpec::gbt(),
            effect: RegressorSpec::gbt(),
            propensity: PropensitySpec::default(),
            clip: DEFAULT_CLIP,
            x_weighting: true,
            cross_fit: false,
        }
    }
}

impl MetaConfig {
    /// Defaults with the design-specific second-stage learner: trees for the
    /// moderation-vs-none design, linear for the quick-vs-delayed design.
    pub fn for_setup(kind: SetupKind) -> Self {
        let effect = match kind {
            SetupKind::ModerationVsNone => RegressorSpec::gbt(),
            SetupKind::QuickVsDelayed => RegressorSpec::ridge(),
        };
        Self {
            effect,
            ..Self::default()
        }
    }

    /// Ridge everywhere; fast and adequate for linear simulated worlds.
    pub fn linear() -> Self {
        Self {
            base: RegressorSpec::ridge(),
            effect: RegressorSpec::ridge(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        propensity::validate_clip(self.clip)
    }
}

/// Point estimate, CATE vector and bootstrap interval for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectEstimate<F> {
    pub estimator: Estimator,
    pub ate: F,
    pub ci_low: F,
    pub ci_high: F,
    /// Percent of the control-arm baseline mean; `None` when that mean is ~0.
    pub ate_relative: Option<F>,
    pub ci_relative: Option<(F, F)>,
    pub cate: Vec<F>,
    pub n_treated: usize,
    pub n_control: usize,
    pub bootstrap_reps: usize,
    pub level: f64,
}

/// `100 * ate / control-arm baseline mean`.
pub fn relative_effect<F: Scalar>(ate: F, data: &CausalData<F>) -> Result<F> {
    let base = data
        .control_baseline_mean()
        .ok_or_else(|| Error::Undefined("no baseline values for the control arm".into()))?;
    if base.abs() < F::of(1e-9) {
        return Err(Error::Undefined("control baseline mean is zero".into()));
    }
    Ok(F::of(100.0) * ate / base)
}

/// Fits one estimator on `data`, fitting the propensity model when needed and
/// not supplied.
pub fn fit_point<F: Scalar>(
    kind: Estimator,
    data: &CausalData<F>,
    cfg: &MetaConfig,
    propensity: Option<&PropensityModel<F>>,
    seed: u64,
) -> Result<PointFit<F>> {
    let owned;
    let prop = if kind.needs_propensity() {
        match propensity {
            Some(p) => Some(p),
            None => {
                owned = estimate_propensity(data, &cfg.propensity, cfg.clip)?;
                Some(&owned)
            }
        }
    } else {
        None
    };
    match kind {
        Estimator::T => t_learner(data, &cfg.base, seed),
        Estimator::S => s_learner(data, &cfg.base, seed),
        Estimator::X => x_learner(data, &cfg.base, prop.expect("propensity"), cfg.x_weighting, seed),
        Estimator::R => r_learner(data, &cfg.base, &cfg.effect, prop.expect("propensity"), seed).map(|(f, _)| f),
        Estimator::Dr => dr_learner_cate(data, cfg, prop.expect("propensity"), seed),
    }
}

/// Point estimates plus bootstrap intervals for several estimators, sharing
/// one propensity fit on the full data and one per bootstrap replicate.
pub fn estimate_effects<F: Scalar>(
    kinds: &[Estimator],
    data: &CausalData<F>,
    cfg: &MetaConfig,
    boot: &BootstrapConfig,
) -> Result<Vec<EffectEstimate<F>>> {
    cfg.validate()?;
    data.check_arms(2)?;
    let prop = if kinds.iter().any(|k| k.needs_propensity()) {
        Some(estimate_propensity(data, &cfg.propensity, cfg.clip)?)
    } else {
        None
    };
    let draws = bootstrap_ates(kinds, data, cfg, boot)?;
    let mut out = Vec::with_capacity(kinds.len());
    for (k, (&kind, samples)) in kinds.iter().zip(&draws).enumerate() {
        let point = fit_point(kind, data, cfg, prop.as_ref(), crate::rng::derive_seed(boot.seed, &[1, k as u64]))?;
        let (lo, hi) = percentile_interval(samples, boot.level)
            .ok_or_else(|| Error::invalid("bootstrap produced no replicates"))?;
        // keep the reported estimate inside its own interval
        let (lo, hi) = (lo.min(point.ate), hi.max(point.ate));
        let rel = relative_effect(point.ate, data).ok();
        let ci_relative = rel.map(|_| {
            let s = relative_effect(F::one(), data).unwrap_or_else(|_| F::zero());
            let (a, b) = (lo * s, hi * s);
            (a.min(b), a.max(b))
        });
        out.push(EffectEstimate {
            estimator: kind,
            ate: point.ate,
            ci_low: lo,
            ci_high: hi,
            ate_relative: rel,
            ci_relative,
            cate: point.cate,
            n_treated: data.n_treated(),
            n_control: data.n_control(),
            bootstrap_reps: boot.reps,
            level: boot.level,
        });
    }
    Ok(out)
}
