use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dr_learner_ate, estimate_propensity, fit_point, CausalData, Estimator, MetaConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::scalar::Scalar;
use crate::stats::{quantile_sorted, sorted_copy};

/// Stratified percentile bootstrap settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub reps: usize,
    pub level: f64,
    pub seed: u64,
    /// Run replicates on the rayon pool. Results do not depend on this flag.
    pub parallel: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            reps: 500,
            level: 0.95,
            seed: 0,
            parallel: true,
        }
    }
}

pub const MIN_REPS: usize = 100;
const ATTEMPTS_PER_REP: u64 = 10;

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(Error::Config(format!(
                "bootstrap needs at least {MIN_REPS} replicates, got {}",
                self.reps
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("confidence level {} outside (0, 1)", self.level)));
        }
        Ok(())
    }
}

/// Central percentile interval of `samples` at `level`.
pub fn percentile_interval<F: Scalar>(samples: &[F], level: f64) -> Option<(F, F)> {
    let s = sorted_copy(samples);
    let alpha = (1.0 - level) / 2.0;
    Some((quantile_sorted(&s, alpha)?, quantile_sorted(&s, 1.0 - alpha)?))
}

/// Resamples each arm with replacement, keeping arm sizes.
fn resample<R: Rng>(treated: &[usize], control: &[usize], rng: &mut R) -> Vec<usize> {
    let mut idx = Vec::with_capacity(treated.len() + control.len());
    for arm in [treated, control] {
        idx.extend((0..arm.len()).map(|_| arm[rng.random_range(0..arm.len())]));
    }
    idx
}

fn replicate<F: Scalar>(
    kinds: &[Estimator],
    data: &CausalData<F>,
    cfg: &MetaConfig,
    seed: u64,
    rep: usize,
    treated: &[usize],
    control: &[usize],
) -> Result<Vec<F>> {
    let mut last_err = None;
    for attempt in 0..ATTEMPTS_PER_REP {
        let mut rng = stream(seed, &[0xB0, rep as u64, attempt]);
        let sample = data.subset(&resample(treated, control, &mut rng));
        let run = || -> Result<Vec<F>> {
            let prop = if kinds.iter().any(|k| k.needs_propensity()) {
                Some(estimate_propensity(&sample, &cfg.propensity, cfg.clip)?)
            } else {
                None
            };
            kinds
                .iter()
                .enumerate()
                .map(|(k, &kind)| {
                    let s = derive_seed(seed, &[0xB1, rep as u64, attempt, k as u64]);
                    match (kind, &prop) {
                        (Estimator::Dr, Some(p)) => dr_learner_ate(&sample, cfg, p, s),
                        _ => fit_point(kind, &sample, cfg, prop.as_ref(), s).map(|f| f.ate),
                    }
                })
                .collect()
        };
        match run() {
            Ok(v) => return Ok(v),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(Error::Singular))
}

/// Bootstrap ATE draws, indexed `[estimator][replicate]`.
///
/// Replicate `r` draws from a stream keyed by `(seed, r, attempt)`, so serial
/// and parallel runs give identical output. A replicate whose fit fails is
/// redrawn up to ten times before the whole call fails.
pub fn bootstrap_ates<F: Scalar>(
    kinds: &[Estimator],
    data: &CausalData<F>,
    cfg: &MetaConfig,
    boot: &BootstrapConfig,
) -> Result<Vec<Vec<F>>> {
    boot.validate()?;
    data.check_arms(1)?;
    let treated = data.arm_indices(true);
    let control = data.arm_indices(false);
    let one = |r: usize| replicate(kinds, data, cfg, boot.seed, r, &treated, &control);
    let per_rep: Vec<Vec<F>> = if boot.parallel {
        (0..boot.reps).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..boot.reps).map(one).collect::<Result<_>>()?
    };
    Ok((0..kinds.len())
        .map(|k| per_rep.iter().map(|r| r[k]).collect())
        .collect())
}

/// Percentile interval for a single estimator.
pub fn bootstrap_ci<F: Scalar>(
    kind: Estimator,
    data: &CausalData<F>,
    cfg: &MetaConfig,
    boot: &BootstrapConfig,
) -> Result<(F, F)> {
    let draws = bootstrap_ates(&[kind], data, cfg, boot)?;
    percentile_interval(&draws[0], boot.level).ok_or_else(|| Error::invalid("no bootstrap replicates"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn toy() -> CausalData<f64> {
        let rows: Vec<[f64; 1]> = (0..60).map(|i| [(i % 10) as f64]).collect();
        let w: Vec<bool> = (0..60).map(|i| i % 3 == 0).collect();
        let y: Vec<f64> = (0..60).map(|i| ((i * 17) % 11) as f64 / 10.0 + if i % 3 == 0 { 0.5 } else { 0.0 }).collect();
        CausalData::new(Matrix::from_rows(&rows).unwrap(), w, y).unwrap()
    }

    #[test]
    fn percentile_interval_of_uniform_grid() {
        let s: Vec<f64> = (0..=100).map(f64::from).collect();
        let (lo, hi) = percentile_interval(&s, 0.9).unwrap();
        assert!((lo - 5.0).abs() < 1e-12 && (hi - 95.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_interval_serial_or_parallel() {
        let d = toy();
        let cfg = MetaConfig::linear();
        let mut b = BootstrapConfig {
            reps: 100,
            seed: 5,
            ..BootstrapConfig::default()
        };
        let a = bootstrap_ci(Estimator::Dr, &d, &cfg, &b).unwrap();
        b.parallel = false;
        assert_eq!(a, bootstrap_ci(Estimator::Dr, &d, &cfg, &b).unwrap());
        b.seed = 6;
        assert_ne!(a, bootstrap_ci(Estimator::Dr, &d, &cfg, &b).unwrap());
    }

    #[test]
    fn zero_variance_outcome_collapses_interval() {
        let mut d = toy();
        d.y = vec![2.0; d.len()];
        let b = BootstrapConfig {
            reps: 100,
            ..BootstrapConfig::default()
        };
        let (lo, hi) = bootstrap_ci(Estimator::T, &d, &MetaConfig::linear(), &b).unwrap();
        assert!(lo.abs() < 1e-12 && hi.abs() < 1e-12);
    }

    #[test]
    fn too_few_reps_rejected() {
        let b = BootstrapConfig {
            reps: 10,
            ..BootstrapConfig::default()
        };
        assert!(bootstrap_ci(Estimator::T, &toy(), &MetaConfig::linear(), &b).is_err());
    }
}
