//! Synthetic moderation worlds with known treatment effects.
//!
//! Each simulated player gets one moderated offense, covariates that are
//! constant across their match days, a report-to-moderation lag and a week of
//! play before and after the report. Assignment to quick moderation depends on
//! covariates only, and the same covariates shift the outcomes, so naive arm
//! comparisons are confounded while covariate-adjusted estimators are not.
//!
//! Outcome changes are planted on the rate scale. Report counts and active
//! days are then realized with unbiased stochastic rounding, so the expected
//! observed change equals the planted one wherever no clipping at zero occurs.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{CohortRow, Outcome, SetupKind, StudySetup};
use crate::domain::{
    action_set_for, covariate, Covariates, Day, MatchDayRecord, ModerationEvent, OffenseType, PlayerId,
    ReportEvent, Severity, COVARIATE_NAMES, N_COVARIATES,
};
use crate::error::{Error, Result};
use crate::ingest::{default_study_window, default_voice_start, RawTables, Window, MAX_LINK_LAG};
use crate::rng::stream;

/// Distribution of one covariate before clamping to valid ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateParams {
    pub mean: f64,
    pub sd: f64,
}

/// Baseline change and treatment effect for one outcome, linear in the
/// standardized covariates plus an optional kill/death-ratio term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectModel {
    pub baseline_intercept: f64,
    pub baseline_coefs: Vec<f64>,
    pub tau_intercept: f64,
    pub tau_coefs: Vec<f64>,
    /// Added `slope * (KD - mean_eliminations / mean_deaths)`.
    pub tau_kd_slope: f64,
    pub noise_sd: f64,
}

impl Default for EffectModel {
    fn default() -> Self {
        Self {
            baseline_intercept: 0.0,
            baseline_coefs: vec![0.0; N_COVARIATES],
            tau_intercept: 0.0,
            tau_coefs: vec![0.0; N_COVARIATES],
            tau_kd_slope: 0.0,
            noise_sd: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_players: usize,
    pub seed: u64,
    /// Design whose windows carry the planted effects.
    pub target_setup: SetupKind,
    pub study_start: NaiveDate,
    pub study_end: NaiveDate,
    pub voice_start: NaiveDate,
    /// Offense mixture: cheating, text chat, user ID, voice chat. Normalized.
    pub offense_weights: [f64; 4],
    /// Probability that a non-cheating moderation uses the stricter action set.
    pub stricter_share: f64,
    /// Relative frequency of each lag 0..=14 days. Normalized.
    pub lag_weights: Vec<f64>,
    pub covariates: Vec<CovariateParams>,
    /// Loading of every covariate on a shared latent skill factor, in [0, 1).
    pub skill_loading: f64,
    /// Log-odds slopes of quick moderation on standardized covariates. The
    /// intercept is calibrated so the marginal lag distribution is preserved.
    pub assignment_coefs: Vec<f64>,
    pub report: EffectModel,
    pub participation: EffectModel,
    /// Log-scale spread of the per-player baseline report rate (mean 1 per match).
    pub baseline_rate_sigma: f64,
    pub matches_per_day: f64,
    pub activity_mean: f64,
    pub activity_sd: f64,
    /// Mean number of additional same-day reports that lead to the moderation.
    pub extra_link_reports: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let window = default_study_window();
        let cov = |mean, sd| CovariateParams { mean, sd };
        let mut assignment = vec![0.0; N_COVARIATES];
        assignment[covariate::MATCH_SCORE] = 0.8;
        assignment[covariate::ELIMINATIONS] = 0.3;
        assignment[covariate::DEATHS] = -0.3;
        assignment[covariate::ACCURACY] = 0.4;
        let mut report_base = vec![0.0; N_COVARIATES];
        report_base[covariate::MATCH_SCORE] = -0.08;
        report_base[covariate::DEATHS] = 0.04;
        report_base[covariate::ACCURACY] = -0.05;
        report_base[covariate::DAMAGE_TAKEN] = 0.03;
        let mut part_base = vec![0.0; N_COVARIATES];
        part_base[covariate::MATCH_SCORE] = 0.03;
        part_base[covariate::MOVE_SPEED] = -0.02;
        Self {
            n_players: 5000,
            seed: 0,
            target_setup: SetupKind::ModerationVsNone,
            study_start: window.start,
            study_end: window.end,
            voice_start: default_voice_start(),
            offense_weights: [6.2, 31.6, 8.8, 53.5],
            stricter_share: 0.5,
            lag_weights: vec![
                0.30, 0.12, 0.08, 0.06, 0.03, 0.03, 0.03, 0.05, 0.05, 0.05, 0.04, 0.04, 0.04, 0.04, 0.04,
            ],
            covariates: vec![
                cov(2200.0, 600.0),
                cov(3.2, 1.2),
                cov(15.5, 4.0),
                cov(12.5, 3.0),
                cov(42500.0, 9000.0),
                cov(77.5, 8.0),
                cov(1650.0, 400.0),
                cov(1400.0, 300.0),
                cov(21.0, 4.0),
            ],
            skill_loading: 0.3,
            assignment_coefs: assignment,
            report: EffectModel {
                baseline_coefs: report_base,
                tau_intercept: -0.3,
                tau_kd_slope: -0.2,
                noise_sd: 0.1,
                ..EffectModel::default()
            },
            participation: EffectModel {
                baseline_coefs: part_base,
                tau_intercept: -0.05,
                noise_sd: 0.08,
                ..EffectModel::default()
            },
            baseline_rate_sigma: 0.25,
            matches_per_day: 5.0,
            activity_mean: 0.7,
            activity_sd: 0.15,
            extra_link_reports: 0.5,
        }
    }
}

/// Days of match records kept after the report date.
const DAYS_AFTER_REPORT: i64 = MAX_LINK_LAG + 6;

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn study_window(&self) -> Window {
        Window::new(self.study_start, self.study_end)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_players == 0 {
            return bad("n_players must be positive".into());
        }
        let weights_ok = |w: &[f64]| w.iter().all(|v| v.is_finite() && *v >= 0.0) && w.iter().sum::<f64>() > 0.0;
        if !weights_ok(&self.offense_weights) {
            return bad("offense weights must be non-negative with a positive sum".into());
        }
        if self.lag_weights.len() != (MAX_LINK_LAG + 1) as usize || !weights_ok(&self.lag_weights) {
            return bad(format!(
                "lag_weights needs {} non-negative entries with a positive sum",
                MAX_LINK_LAG + 1
            ));
        }
        for (name, len) in [
            ("covariates", self.covariates.len()),
            ("assignment_coefs", self.assignment_coefs.len()),
            ("report.baseline_coefs", self.report.baseline_coefs.len()),
            ("report.tau_coefs", self.report.tau_coefs.len()),
            ("participation.baseline_coefs", self.participation.baseline_coefs.len()),
            ("participation.tau_coefs", self.participation.tau_coefs.len()),
        ] {
            if len != N_COVARIATES {
                return bad(format!("{name} needs {N_COVARIATES} entries, got {len}"));
            }
        }
        if self.covariates.iter().any(|c| !(c.sd >= 0.0) || !c.mean.is_finite()) {
            return bad("covariate sds must be non-negative".into());
        }
        if self.covariates[covariate::DEATHS].mean <= 0.0 {
            return bad("mean deaths must be positive".into());
        }
        for (name, v) in [
            ("report.noise_sd", self.report.noise_sd),
            ("participation.noise_sd", self.participation.noise_sd),
            ("baseline_rate_sigma", self.baseline_rate_sigma),
            ("activity_sd", self.activity_sd),
            ("extra_link_reports", self.extra_link_reports),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and non-negative"));
            }
        }
        if !(0.0..1.0).contains(&self.skill_loading) {
            return bad("skill_loading must lie in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.stricter_share) {
            return bad("stricter_share must lie in [0, 1]".into());
        }
        if !(self.matches_per_day >= 1.0) {
            return bad("matches_per_day must be at least 1".into());
        }
        if !(self.activity_mean > 0.0 && self.activity_mean <= 1.0) {
            return bad("activity_mean must lie in (0, 1]".into());
        }
        let (lo, hi) = self.report_day_range(false);
        if lo > hi {
            return bad(format!(
                "study range {}..{} is too short for a week before and {DAYS_AFTER_REPORT} days after a report",
                self.study_start, self.study_end
            ));
        }
        if self.offense_weights[3] > 0.0 {
            let (vlo, vhi) = self.report_day_range(true);
            if vlo > vhi {
                return bad(format!(
                    "voice start {} leaves no room for voice reports before {}",
                    self.voice_start, self.study_end
                ));
            }
        }
        let (t, c) = self.arm_masses();
        if t <= 0.0 || c <= 0.0 {
            return bad("lag weights leave the treated or control arm empty".into());
        }
        Ok(())
    }

    /// Earliest and latest report day such that both windows fit the study range.
    fn report_day_range(&self, voice: bool) -> (Day, Day) {
        let mut lo = self.study_start + Duration::days(7);
        if voice {
            lo = lo.max(self.voice_start);
        }
        (lo, self.study_end - Duration::days(DAYS_AFTER_REPORT))
    }

    fn setup(&self) -> StudySetup {
        StudySetup::for_kind(self.target_setup)
    }

    fn lag_class(&self, lag: i64) -> LagClass {
        let s = self.setup();
        if lag <= s.treat_max_lag {
            LagClass::Treated
        } else if lag >= s.control_min_lag {
            LagClass::Control
        } else {
            LagClass::Gap
        }
    }

    /// Normalized probability mass of treated and control lags.
    fn arm_masses(&self) -> (f64, f64) {
        let total: f64 = self.lag_weights.iter().sum();
        let mut t = 0.0;
        let mut c = 0.0;
        for (lag, w) in self.lag_weights.iter().enumerate() {
            match self.lag_class(lag as i64) {
                LagClass::Treated => t += w / total,
                LagClass::Control => c += w / total,
                LagClass::Gap => {}
            }
        }
        (t, c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LagClass {
    Treated,
    Control,
    Gap,
}

/// Planted quantities for one player.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerTruth {
    pub offense: OffenseType,
    pub lag: i64,
    /// Probability of quick moderation given covariates, among non-gap lags.
    pub propensity: f64,
    pub tau_report: f64,
    pub tau_participation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimGroundTruth {
    pub true_ate_report: f64,
    pub true_ate_participation: f64,
    pub assignment_intercept: f64,
    pub players: BTreeMap<PlayerId, PlayerTruth>,
}

impl SimGroundTruth {
    pub fn tau(&self, player: &PlayerId, outcome: Outcome) -> Option<f64> {
        self.players.get(player).map(|t| match outcome {
            Outcome::ReportRate => t.tau_report,
            Outcome::Participation => t.tau_participation,
        })
    }
}

/// Exact effects for cohort rows: their mean and the per-row values.
pub fn true_effects(truth: &SimGroundTruth, rows: &[CohortRow], outcome: Outcome) -> Result<(f64, Vec<f64>)> {
    let cate = rows
        .iter()
        .map(|r| {
            truth
                .tau(&r.player_id, outcome)
                .ok_or_else(|| Error::invalid(format!("player {} is not part of this world", r.player_id)))
        })
        .collect::<Result<Vec<f64>>>()?;
    if cate.is_empty() {
        return Err(Error::invalid("no rows"));
    }
    let ate = cate.iter().sum::<f64>() / cate.len() as f64;
    Ok((ate, cate))
}

struct Profile {
    offense: OffenseType,
    severity: Severity,
    x: [f64; N_COVARIATES],
    z: [f64; N_COVARIATES],
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn draw_weighted<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Unbiased rounding: `floor(v)` plus one with probability `frac(v)`.
fn stochastic_round<R: Rng>(v: f64, rng: &mut R) -> u64 {
    let v = v.max(0.0);
    let f = v.floor();
    f as u64 + u64::from(rng.random::<f64>() < v - f)
}

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |d| d.sample(rng) as u64)
}

fn player_profile(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Profile {
    let offense = OffenseType::ALL[draw_weighted(&cfg.offense_weights, rng)];
    let severity = if offense == OffenseType::Cheating {
        Severity::NotApplicable
    } else if rng.random::<f64>() < cfg.stricter_share {
        Severity::Stricter
    } else {
        Severity::Milder
    };
    let a = cfg.skill_loading;
    let b = (1.0 - a * a).sqrt();
    let skill: f64 = StandardNormal.sample(rng);
    let mut x = [0.0; N_COVARIATES];
    let mut z = [0.0; N_COVARIATES];
    for j in 0..N_COVARIATES {
        let e: f64 = StandardNormal.sample(rng);
        let p = cfg.covariates[j];
        let mut v = (p.mean + p.sd * (a * skill + b * e)).max(0.0);
        if j == covariate::ACCURACY {
            v = v.min(100.0);
        }
        x[j] = v;
        // models are linear in the realized (clamped) values
        z[j] = if p.sd > 0.0 { (v - p.mean) / p.sd } else { 0.0 };
    }
    Profile { offense, severity, x, z }
}

fn linear(intercept: f64, coefs: &[f64], z: &[f64]) -> f64 {
    intercept + coefs.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
}

fn tau(model: &EffectModel, cfg: &SimConfig, p: &Profile) -> f64 {
    let mut t = linear(model.tau_intercept, &model.tau_coefs, &p.z);
    if model.tau_kd_slope != 0.0 && p.x[covariate::DEATHS] > 0.0 {
        let kd = p.x[covariate::ELIMINATIONS] / p.x[covariate::DEATHS];
        let kd_ref = cfg.covariates[covariate::ELIMINATIONS].mean / cfg.covariates[covariate::DEATHS].mean;
        t += model.tau_kd_slope * (kd - kd_ref);
    }
    t
}

/// Intercept making the mean quick-moderation probability equal `target`.
fn calibrate_intercept(cfg: &SimConfig, profiles: &[Profile], target: f64) -> f64 {
    let index: Vec<f64> = profiles.iter().map(|p| linear(0.0, &cfg.assignment_coefs, &p.z)).collect();
    let mean_p = |a: f64| index.iter().map(|v| sigmoid(a + v)).sum::<f64>() / index.len() as f64;
    let (mut lo, mut hi) = (-30.0, 30.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_p(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct PlayerEvents {
    reports: Vec<ReportEvent>,
    moderation: ModerationEvent,
    match_days: Vec<MatchDayRecord>,
    truth: PlayerTruth,
}

fn choose_days<R: Rng>(window: Window, count: u64, rng: &mut R) -> Vec<Day> {
    let mut days: Vec<Day> = window.days().collect();
    let count = (count as usize).min(days.len());
    // partial Fisher-Yates keeps the draw count independent of the outcome
    for i in 0..count {
        let j = rng.random_range(i..days.len());
        days.swap(i, j);
    }
    let mut chosen = days[..count].to_vec();
    chosen.sort();
    chosen
}

fn simulate_player(cfg: &SimConfig, idx: usize, profile: &Profile, intercept: f64) -> PlayerEvents {
    let mut rng = stream(cfg.seed, &[idx as u64, 1]);
    let player = PlayerId::new(format!("p{idx:06}"));
    let voice = profile.offense == OffenseType::OffensiveVoiceChat;
    let (lo, hi) = cfg.report_day_range(voice);
    let t_day = lo + Duration::days(rng.random_range(0..=(hi - lo).num_days()));

    // lag: gap lags independently of covariates, otherwise arm by propensity
    let propensity = sigmoid(linear(intercept, &cfg.assignment_coefs, &profile.z));
    let class_weights = |class: LagClass| -> Vec<f64> {
        cfg.lag_weights
            .iter()
            .enumerate()
            .map(|(l, &w)| if cfg.lag_class(l as i64) == class { w } else { 0.0 })
            .collect()
    };
    let total: f64 = cfg.lag_weights.iter().sum();
    let gap_mass: f64 = class_weights(LagClass::Gap).iter().sum::<f64>() / total;
    let class = if rng.random::<f64>() < gap_mass {
        LagClass::Gap
    } else if rng.random::<f64>() < propensity {
        LagClass::Treated
    } else {
        LagClass::Control
    };
    let lag = draw_weighted(&class_weights(class), &mut rng) as i64;
    let m_day = t_day + Duration::days(lag);
    let treated = class == LagClass::Treated;

    let tau_r = tau(&cfg.report, cfg, profile);
    let tau_p = tau(&cfg.participation, cfg, profile);
    let noise = |sd: f64, rng: &mut ChaCha8Rng| if sd > 0.0 { Normal::new(0.0, sd).map_or(0.0, |d| d.sample(rng)) } else { 0.0 };
    let y_r = linear(cfg.report.baseline_intercept, &cfg.report.baseline_coefs, &profile.z)
        + noise(cfg.report.noise_sd, &mut rng)
        + if treated { tau_r } else { 0.0 };
    let y_p = linear(
        cfg.participation.baseline_intercept,
        &cfg.participation.baseline_coefs,
        &profile.z,
    ) + noise(cfg.participation.noise_sd, &mut rng)
        + if treated { tau_p } else { 0.0 };

    let sigma = cfg.baseline_rate_sigma;
    let z0: f64 = StandardNormal.sample(&mut rng);
    let r0 = (sigma * z0 - 0.5 * sigma * sigma).exp();
    let za: f64 = StandardNormal.sample(&mut rng);
    let activity = (cfg.activity_mean + cfg.activity_sd * za).clamp(0.15, 1.0);
    let mpd = 1 + poisson(cfg.matches_per_day - 1.0, &mut rng);

    let w0 = Window::new(t_day - Duration::days(7), t_day - Duration::days(1));
    let w1 = match cfg.setup().post_anchor {
        crate::cohort::PostAnchor::ReportDate => Window::week_from(t_day),
        crate::cohort::PostAnchor::ModerationDate => Window::week_from(m_day),
    };
    let d0 = Binomial::new(7, activity).map_or(1, |b| b.sample(&mut rng)).max(1);
    let frac1 = (d0 as f64 / 7.0 + y_p).clamp(0.0, 1.0);
    let d1 = stochastic_round(7.0 * frac1, &mut rng).min(7);
    let pre_days = choose_days(w0, d0, &mut rng);
    let post_days = choose_days(w1, d1, &mut rng);
    let span = Window::new(w0.start, t_day + Duration::days(DAYS_AFTER_REPORT));
    let mut active: Vec<Day> = pre_days.iter().chain(&post_days).copied().collect();
    for d in span.days() {
        if !w0.contains(d) && !w1.contains(d) && rng.random::<f64>() < activity {
            active.push(d);
        }
    }
    active.sort();

    let decoy = if profile.offense == OffenseType::Cheating {
        OffenseType::OffensiveTextChat
    } else {
        OffenseType::Cheating
    };
    let mut reports = Vec::new();
    let report = |day: Day, offense: OffenseType, reporter: Option<String>| ReportEvent {
        player_id: player.clone(),
        report_date: day,
        offense_type: offense,
        reporter_id: reporter,
    };
    let n_link = 1 + poisson(cfg.extra_link_reports, &mut rng);
    let reporters: Vec<String> = (0..n_link).map(|k| format!("u{idx:06}_{k}")).collect();
    for r in &reporters {
        reports.push(report(t_day, profile.offense, Some(r.clone())));
    }
    let place = |days: &[Day], count: u64, rng: &mut ChaCha8Rng, out: &mut Vec<ReportEvent>| {
        if days.is_empty() {
            return;
        }
        for _ in 0..count {
            let d = days[rng.random_range(0..days.len())];
            out.push(report(d, decoy, None));
        }
    };
    let m0 = d0 * mpd;
    let n0 = poisson(r0 * m0 as f64, &mut rng);
    place(&pre_days, n0, &mut rng, &mut reports);
    let m1 = d1 * mpd;
    let target_n1 = stochastic_round((r0 + y_r) * m1 as f64, &mut rng);
    let linked_in_w1 = if w1.contains(t_day) { n_link } else { 0 };
    place(&post_days, target_n1.saturating_sub(linked_in_w1), &mut rng, &mut reports);
    for &d in &active {
        if !w0.contains(d) && !w1.contains(d) {
            let n = poisson(r0 * mpd as f64, &mut rng);
            place(&[d], n, &mut rng, &mut reports);
        }
    }

    let stats = Covariates(profile.x);
    let match_days = active
        .iter()
        .map(|&d| MatchDayRecord {
            player_id: player.clone(),
            date: d,
            matches_played: mpd as u32,
            stats: Some(stats),
        })
        .collect();
    let moderation = ModerationEvent {
        player_id: player.clone(),
        moderation_date: m_day,
        offense_type: profile.offense,
        actions: action_set_for(profile.offense, profile.severity).expect("tabulated severity"),
        linked_reporters: reporters,
    };
    PlayerEvents {
        reports,
        moderation,
        match_days,
        truth: PlayerTruth {
            offense: profile.offense,
            lag,
            propensity,
            tau_report: tau_r,
            tau_participation: tau_p,
        },
    }
}

/// Generates event tables and the planted truth. Deterministic in `cfg`
/// (including its seed), regardless of thread count.
pub fn generate_world(cfg: &SimConfig) -> Result<(RawTables, SimGroundTruth)> {
    cfg.validate()?;
    let profiles: Vec<Profile> = (0..cfg.n_players)
        .into_par_iter()
        .map(|i| player_profile(cfg, &mut stream(cfg.seed, &[i as u64, 0])))
        .collect();
    let (t, c) = cfg.arm_masses();
    let intercept = calibrate_intercept(cfg, &profiles, t / (t + c));
    let players: Vec<PlayerEvents> = profiles
        .par_iter()
        .enumerate()
        .map(|(i, p)| simulate_player(cfg, i, p, intercept))
        .collect();

    let mut reports = Vec::new();
    let mut moderations = Vec::with_capacity(players.len());
    let mut match_days = Vec::new();
    let mut truth = BTreeMap::new();
    for (i, p) in players.into_iter().enumerate() {
        truth.insert(PlayerId::new(format!("p{i:06}")), p.truth);
        reports.extend(p.reports);
        moderations.push(p.moderation);
        match_days.extend(p.match_days);
    }
    let n = truth.len() as f64;
    let true_ate_report = truth.values().map(|t| t.tau_report).sum::<f64>() / n;
    let true_ate_participation = truth.values().map(|t| t.tau_participation).sum::<f64>() / n;
    let raw = RawTables::new(reports, moderations, match_days, cfg.study_window())?
        .filtered(cfg.study_window(), cfg.voice_start);
    Ok((
        raw,
        SimGroundTruth {
            true_ate_report,
            true_ate_participation,
            assignment_intercept: intercept,
            players: truth,
        },
    ))
}

/// Column names of the simulated covariates, for config documentation.
pub fn covariate_names() -> [&'static str; N_COVARIATES] {
    COVARIATE_NAMES
}
