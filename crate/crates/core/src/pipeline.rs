//! End-to-end analysis: link cases, build every design and stratum, estimate
//! effects with bootstrap intervals, check balance and correlate individual
//! effects with skill indicators.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{build_cohort, CohortTable, Outcome, SetupKind, Stratum, StudySetup};
use crate::diagnostics::{balance_report, cate_feature_correlation, compute_skill_indicators, FeatureBalance};
use crate::domain::{OffenseType, Severity};
use crate::error::{Error, Result};
use crate::ingest::{link_cases, EventLog, RawTables, Window};
use crate::learners::RegressorSpec;
use crate::meta::{
    estimate_effects, estimate_propensity, BootstrapConfig, Estimator, MetaConfig, PropensitySpec, DEFAULT_CLIP,
};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// Smallest arm size for which effects are estimated.
pub const MIN_ARM_ROWS: usize = 5;

/// Everything that determines the numbers in a report. Echoed into it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub setups: Vec<SetupKind>,
    pub outcomes: Vec<Outcome>,
    pub estimators: Vec<Estimator>,
    pub base: RegressorSpec,
    /// Second-stage learner; the design default when absent.
    pub effect: Option<RegressorSpec>,
    pub propensity: PropensitySpec,
    pub clip: (f64, f64),
    pub x_weighting: bool,
    pub cross_fit: bool,
    pub bootstrap_reps: usize,
    pub level: f64,
    pub knn_k: usize,
    /// Estimator whose individual effects feed the heterogeneity table.
    pub heterogeneity_estimator: Estimator,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            setups: SetupKind::ALL.to_vec(),
            outcomes: Outcome::ALL.to_vec(),
            estimators: Estimator::ALL.to_vec(),
            base: RegressorSpec::gbt(),
            effect: None,
            propensity: PropensitySpec::default(),
            clip: DEFAULT_CLIP,
            x_weighting: true,
            cross_fit: false,
            bootstrap_reps: 500,
            level: 0.95,
            knn_k: 1,
            heterogeneity_estimator: Estimator::Dr,
        }
    }
}

impl PipelineConfig {
    pub fn meta_config(&self, setup: SetupKind) -> MetaConfig {
        let design = MetaConfig::for_setup(setup);
        MetaConfig {
            base: self.base,
            effect: self.effect.unwrap_or(design.effect),
            propensity: self.propensity,
            clip: self.clip,
            x_weighting: self.x_weighting,
            cross_fit: self.cross_fit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.setups.is_empty() || self.outcomes.is_empty() || self.estimators.is_empty() {
            return Err(Error::Config("setups, outcomes and estimators must be non-empty".into()));
        }
        if self.knn_k == 0 {
            return Err(Error::Config("knn_k must be positive".into()));
        }
        self.bootstrap(false).validate()?;
        self.meta_config(SetupKind::ModerationVsNone).validate()
    }

    fn bootstrap(&self, parallel: bool) -> BootstrapConfig {
        BootstrapConfig {
            reps: self.bootstrap_reps,
            level: self.level,
            seed: self.seed,
            parallel,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Every stratum analyzed per design, in report order: each offense pooled,
/// followed by its severity levels when severity is defined for it.
pub fn strata() -> Vec<Stratum> {
    let mut out = Vec::new();
    for o in OffenseType::ALL {
        out.push(Stratum::offense(o));
        if o != OffenseType::Cheating {
            for s in [Severity::Milder, Severity::Stricter] {
                out.push(Stratum {
                    offense: Some(o),
                    severity: Some(s),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub ate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Percent of the control-arm baseline; absent when that baseline is zero.
    pub relative: Option<f64>,
    pub relative_ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub outcome: Outcome,
    pub estimator: Estimator,
    pub n_treated: usize,
    pub n_control: usize,
    pub estimate: Option<EffectSummary>,
    /// Why no estimate exists.
    pub degenerate: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSummary {
    pub k: usize,
    pub n_pairs: usize,
    pub mean_abs_smd_before: Option<f64>,
    pub mean_abs_smd_after: Option<f64>,
    pub features: Vec<FeatureBalance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityRow {
    pub outcome: Outcome,
    pub estimator: Estimator,
    pub indicator: String,
    pub r: Option<f64>,
    pub n_used: usize,
    pub n_undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub setup: SetupKind,
    pub stratum: Stratum,
    pub n_treated: usize,
    pub n_control: usize,
    pub exclusions: BTreeMap<String, usize>,
    pub outcome_exclusions: BTreeMap<String, usize>,
    pub degenerate: Option<String>,
    pub notes: Vec<String>,
    pub effects: Vec<EffectRow>,
    pub balance: Option<BalanceSummary>,
    pub heterogeneity: Vec<HeterogeneityRow>,
}

impl StratumReport {
    pub fn has_estimates(&self) -> bool {
        self.effects.iter().any(|e| e.estimate.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub coverage: Window,
    pub n_reports: usize,
    pub n_moderations: usize,
    pub n_match_days: usize,
    pub n_linked_cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: PipelineConfig,
    pub input: InputSummary,
    pub strata: Vec<StratumReport>,
}

impl AnalysisReport {
    /// True when no stratum produced a single estimate.
    pub fn degenerate_only(&self) -> bool {
        !self.strata.iter().any(StratumReport::has_estimates)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::invalid(format!("malformed report: {e}")))
    }
}

/// One row of per-player individual effects next to the skill indicators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatePair {
    pub setup: SetupKind,
    pub stratum: Stratum,
    pub outcome: Outcome,
    pub player_id: String,
    pub cate: f64,
    pub ams: f64,
    pub dsi: Option<f64>,
    pub kd: Option<f64>,
}

/// The report plus the row-level artifacts written next to it.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: AnalysisReport,
    pub cohorts: Vec<CohortTable>,
    pub cate_pairs: Vec<CatePair>,
}

/// Errors that make a stratum unusable rather than the run invalid.
fn is_degenerate(e: &Error) -> bool {
    matches!(
        e,
        Error::CohortDegenerate { .. } | Error::SingleClass | Error::Singular | Error::Undefined(_)
    )
}

fn stage(stage: &'static str, stratum: String) -> impl FnOnce(Error) -> Error {
    move |source| Error::Stage {
        stage,
        stratum,
        source: Box::new(source),
    }
}

struct StratumResult {
    report: StratumReport,
    cohort: Option<CohortTable>,
    pairs: Vec<CatePair>,
}

fn stratum_seed(cfg: &PipelineConfig, setup: SetupKind, stratum: &Stratum, salt: u64) -> u64 {
    let s = SetupKind::ALL.iter().position(|&k| k == setup).unwrap_or(0) as u64;
    let o = stratum
        .offense
        .and_then(|o| OffenseType::ALL.iter().position(|&v| v == o))
        .map_or(0, |i| i as u64 + 1);
    let v = match stratum.severity {
        None => 0,
        Some(Severity::Milder) => 1,
        Some(Severity::Stricter) => 2,
        Some(Severity::NotApplicable) => 3,
    };
    derive_seed(cfg.seed, &[s, o, v, salt])
}

fn empty_report(setup: SetupKind, stratum: Stratum) -> StratumReport {
    let mut notes = Vec::new();
    if stratum.offense == Some(OffenseType::Cheating) {
        notes.push("severity breakdown not applicable to cheating".to_string());
    }
    StratumReport {
        setup,
        stratum,
        n_treated: 0,
        n_control: 0,
        exclusions: BTreeMap::new(),
        outcome_exclusions: BTreeMap::new(),
        degenerate: None,
        notes,
        effects: Vec::new(),
        balance: None,
        heterogeneity: Vec::new(),
    }
}

fn degenerate_rows(cfg: &PipelineConfig, reason: &str, n_t: usize, n_c: usize) -> Vec<EffectRow> {
    cfg.outcomes
        .iter()
        .flat_map(|&outcome| {
            cfg.estimators.iter().map(move |&estimator| EffectRow {
                outcome,
                estimator,
                n_treated: n_t,
                n_control: n_c,
                estimate: None,
                degenerate: Some(reason.to_string()),
            })
        })
        .collect()
}

fn analyze_stratum<F: Scalar>(
    cases: &[crate::ingest::LinkedCase],
    log: &EventLog,
    cfg: &PipelineConfig,
    setup: SetupKind,
    stratum: Stratum,
    parallel: bool,
) -> Result<StratumResult> {
    let label = format!("{}:{}", setup.as_str(), stratum);
    let mut report = empty_report(setup, stratum);
    let cohort = match build_cohort(cases, &StudySetup::for_kind(setup), log, stratum) {
        Ok(c) => c,
        Err(e) if is_degenerate(&e) => {
            report.degenerate = Some(e.to_string());
            report.effects = degenerate_rows(cfg, &e.to_string(), 0, 0);
            return Ok(StratumResult {
                report,
                cohort: None,
                pairs: Vec::new(),
            });
        }
        Err(e) => return Err(stage("cohort", label)(e)),
    };
    report.n_treated = cohort.n_treated();
    report.n_control = cohort.n_control();
    report.exclusions = cohort.exclusion_counts.clone();
    report.outcome_exclusions = cohort.outcome_exclusions.clone();
    if report.n_treated < MIN_ARM_ROWS || report.n_control < MIN_ARM_ROWS {
        let reason = format!(
            "{} treated and {} control rows; at least {MIN_ARM_ROWS} per arm required",
            report.n_treated, report.n_control
        );
        report.effects = degenerate_rows(cfg, &reason, report.n_treated, report.n_control);
        report.degenerate = Some(reason);
        return Ok(StratumResult {
            report,
            cohort: Some(cohort),
            pairs: Vec::new(),
        });
    }

    let meta = cfg.meta_config(setup);
    let indicators = compute_skill_indicators(&cohort);
    let mut pairs = Vec::new();

    // balance on the outcome-independent covariates of the whole cohort
    let all = cohort.causal_data::<F>(Outcome::Participation).map_err(stage("cohort", label.clone()))?;
    match estimate_propensity(&all, &meta.propensity, meta.clip) {
        Ok(prop) => {
            let b = balance_report(&all.x, &all.treated, &prop.scores, cfg.knn_k, None)
                .map_err(stage("balance", label.clone()))?;
            report.balance = Some(BalanceSummary {
                k: b.k,
                n_pairs: b.match_pairs.len(),
                mean_abs_smd_before: b.mean_abs_smd_before(),
                mean_abs_smd_after: b.mean_abs_smd_after(),
                features: b.features,
            });
        }
        Err(e) if is_degenerate(&e) => report.notes.push(format!("balance skipped: {e}")),
        Err(e) => return Err(stage("propensity", label)(e)),
    }

    for (oi, &outcome) in cfg.outcomes.iter().enumerate() {
        let data = cohort.causal_data::<F>(outcome).map_err(stage("cohort", label.clone()))?;
        let (n_t, n_c) = (data.n_treated(), data.n_control());
        if n_t < MIN_ARM_ROWS || n_c < MIN_ARM_ROWS {
            let reason = format!("{n_t} treated and {n_c} control rows with a defined outcome");
            report.effects.extend(degenerate_rows(cfg, &reason, n_t, n_c).into_iter().filter(|r| r.outcome == outcome));
            continue;
        }
        let boot = BootstrapConfig {
            seed: stratum_seed(cfg, setup, &stratum, oi as u64),
            ..cfg.bootstrap(parallel)
        };
        let estimates = match estimate_effects(&cfg.estimators, &data, &meta, &boot) {
            Ok(v) => v,
            Err(e) if is_degenerate(&e) => {
                let rows = degenerate_rows(cfg, &e.to_string(), n_t, n_c);
                report.effects.extend(rows.into_iter().filter(|r| r.outcome == outcome));
                continue;
            }
            Err(e) => return Err(stage("estimation", label)(e)),
        };
        for est in &estimates {
            report.effects.push(EffectRow {
                outcome,
                estimator: est.estimator,
                n_treated: n_t,
                n_control: n_c,
                estimate: Some(EffectSummary {
                    ate: est.ate.to_f64_lossy(),
                    ci_low: est.ci_low.to_f64_lossy(),
                    ci_high: est.ci_high.to_f64_lossy(),
                    relative: est.ate_relative.map(Scalar::to_f64_lossy),
                    relative_ci: est.ci_relative.map(|(a, b)| (a.to_f64_lossy(), b.to_f64_lossy())),
                }),
                degenerate: None,
            });
        }
        let Some(het) = estimates.iter().find(|e| e.estimator == cfg.heterogeneity_estimator) else {
            continue;
        };
        let cate: Vec<f64> = het.cate.iter().map(|v| v.to_f64_lossy()).collect();
        let rows: Vec<_> = data.row_index.iter().map(|&i| indicators[i]).collect();
        for (name, values) in [
            ("ams", rows.iter().map(|s| Some(s.ams)).collect::<Vec<_>>()),
            ("dsi", rows.iter().map(|s| s.dsi).collect()),
            ("kd", rows.iter().map(|s| s.kd).collect()),
        ] {
            let n_undefined = values.iter().filter(|v| v.is_none()).count();
            let (r, n_used) = match cate_feature_correlation(&cate, &values) {
                Ok(c) => (Some(c.r), c.n_used),
                Err(_) => (None, values.len() - n_undefined),
            };
            report.heterogeneity.push(HeterogeneityRow {
                outcome,
                estimator: het.estimator,
                indicator: name.to_string(),
                r,
                n_used,
                n_undefined,
            });
        }
        for (k, &i) in data.row_index.iter().enumerate() {
            pairs.push(CatePair {
                setup,
                stratum,
                outcome,
                player_id: cohort.rows[i].player_id.to_string(),
                cate: cate[k],
                ams: indicators[i].ams,
                dsi: indicators[i].dsi,
                kd: indicators[i].kd,
            });
        }
    }
    if !report.has_estimates() {
        report.degenerate = Some("no outcome could be estimated".into());
    }
    Ok(StratumResult {
        report,
        cohort: Some(cohort),
        pairs,
    })
}

/// Runs every configured design and stratum. Output is identical for serial
/// and parallel execution.
pub fn run_pipeline<F: Scalar>(raw: &RawTables, cfg: &PipelineConfig, parallel: bool) -> Result<PipelineOutput> {
    cfg.validate()?;
    let cases = link_cases(raw);
    let log = EventLog::new(raw);
    let jobs: Vec<(SetupKind, Stratum)> = cfg
        .setups
        .iter()
        .flat_map(|&s| strata().into_iter().map(move |st| (s, st)))
        .collect();
    let run = |&(setup, stratum): &(SetupKind, Stratum)| analyze_stratum::<F>(&cases, &log, cfg, setup, stratum, parallel);
    let results: Vec<StratumResult> = if parallel {
        jobs.par_iter().map(run).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_>>()?
    };

    let mut strata_reports = Vec::with_capacity(results.len());
    let mut cohorts = Vec::new();
    let mut cate_pairs = Vec::new();
    for r in results {
        strata_reports.push(r.report);
        cohorts.extend(r.cohort);
        cate_pairs.extend(r.pairs);
    }
    Ok(PipelineOutput {
        report: AnalysisReport {
            config: cfg.clone(),
            input: InputSummary {
                coverage: raw.coverage,
                n_reports: raw.reports.len(),
                n_moderations: raw.moderations.len(),
                n_match_days: raw.match_days.len(),
                n_linked_cases: cases.len(),
            },
            strata: strata_reports,
        },
        cohorts,
        cate_pairs,
    })
}
