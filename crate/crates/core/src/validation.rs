//! Oracle-based validation suite: known-truth simulations plus exact checks on
//! small hand-built event logs. Shared by the acceptance tests and the
//! `selftest` command.

use std::fmt;
use std::time::{Duration as StdDuration, Instant};

use chrono::{Duration, NaiveDate};

use crate::cohort::{build_cohort, CohortTable, Outcome, SetupKind, Stratum, StudySetup};
use crate::diagnostics::{balance_report, cate_feature_correlation, compute_skill_indicators};
use crate::domain::{
    action_set_for, covariate, Covariates, Day, MatchDayRecord, ModerationEvent, OffenseType, PlayerId,
    ReportEvent, Severity, N_COVARIATES,
};
use crate::error::Result;
use crate::ingest::{link_cases, EventLog, LinkedCase, RawTables, Window, MAX_LINK_LAG};
use crate::learners::RegressorSpec;
use crate::meta::{
    aipw_formula, estimate_effects, estimate_propensity, fit_point, BootstrapConfig, CateSummary, CausalData,
    Estimator, MetaConfig, PropensitySpec,
};
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::report::{render_csv, render_text};
use crate::sim::{generate_world, true_effects, SimConfig, SimGroundTruth};

/// Sizes of the repeated-simulation criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scale {
    pub seeds: usize,
    pub coverage_worlds: usize,
    pub coverage_players: usize,
    pub coverage_reps: usize,
    pub null_reps: usize,
}

impl Scale {
    pub fn full() -> Self {
        Self {
            seeds: 20,
            coverage_worlds: 200,
            coverage_players: 1500,
            coverage_reps: 500,
            null_reps: 200,
        }
    }

    /// A few seeds per criterion; for smoke runs, not for verdicts.
    pub fn quick() -> Self {
        Self {
            seeds: 4,
            coverage_worlds: 20,
            coverage_players: 1000,
            coverage_reps: 100,
            null_reps: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} [{}] {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "oracle ATE recovery"),
    (2, "double robustness"),
    (3, "null safety"),
    (4, "bootstrap coverage"),
    (5, "pipeline exactness"),
    (6, "balance improvement"),
    (7, "heterogeneity sign recovery"),
    (8, "CATE concentration ordering"),
    (9, "determinism"),
];

pub fn run_criterion(id: u8, scale: Scale) -> CriterionOutcome {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map_or("unknown criterion", |c| c.1);
    let result = match id {
        1 => ate_recovery(),
        2 => double_robustness(),
        3 => null_safety(scale),
        4 => bootstrap_coverage(scale),
        5 => pipeline_exactness(),
        6 => balance_improvement(),
        7 => heterogeneity_sign(scale),
        8 => concentration_ordering(scale),
        9 => determinism(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        name,
        passed,
        detail,
    }
}

pub fn run_all(scale: Scale) -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|&(id, _)| run_criterion(id, scale)).collect()
}

// ---------------------------------------------------------------------------
// Worlds
// ---------------------------------------------------------------------------

/// Covariate-confounded world with a constant report-rate effect of -0.3.
pub fn confounded_world(n: usize, seed: u64) -> SimConfig {
    let mut cfg = SimConfig {
        n_players: n,
        seed,
        ..SimConfig::default()
    };
    cfg.report.tau_kd_slope = 0.0;
    cfg
}

/// Same confounding, no effect on either outcome.
pub fn null_world(n: usize, seed: u64) -> SimConfig {
    let mut cfg = confounded_world(n, seed);
    cfg.report.tau_intercept = 0.0;
    cfg.participation.tau_intercept = 0.0;
    cfg
}

/// Report-rate effect that weakens (grows more negative) with kill/death ratio.
pub fn kd_world(n: usize, seed: u64) -> SimConfig {
    let mut cfg = confounded_world(n, seed);
    cfg.report.tau_kd_slope = -0.5;
    cfg
}

/// Pooled moderation-vs-none cohort of a world, its report-rate data and the
/// planted average effect over the estimation rows.
pub struct WorldSample {
    pub cohort: CohortTable,
    pub data: CausalData<f64>,
    pub truth: SimGroundTruth,
    pub true_ate: f64,
    pub true_cate: Vec<f64>,
}

pub fn sample_world(cfg: &SimConfig, outcome: Outcome) -> Result<WorldSample> {
    let (raw, truth) = generate_world(cfg)?;
    let cases = link_cases(&raw);
    let log = EventLog::new(&raw);
    let cohort = build_cohort(&cases, &StudySetup::for_kind(cfg.target_setup), &log, Stratum::all())?;
    let data = cohort.causal_data::<f64>(outcome)?;
    let rows: Vec<_> = data.row_index.iter().map(|&i| cohort.rows[i].clone()).collect();
    let (true_ate, true_cate) = true_effects(&truth, &rows, outcome)?;
    Ok(WorldSample {
        cohort,
        data,
        truth,
        true_ate,
        true_cate,
    })
}

fn relative(ate: f64, data: &CausalData<f64>) -> f64 {
    crate::meta::relative_effect(ate, data).unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

const RUNTIME_BUDGET: StdDuration = StdDuration::from_secs(120);

fn ate_recovery() -> Result<(bool, String)> {
    let start = Instant::now();
    let w = sample_world(&confounded_world(20_000, 101), Outcome::ReportRate)?;
    let cfg = MetaConfig::for_setup(SetupKind::ModerationVsNone);
    let fit = fit_point(Estimator::Dr, &w.data, &cfg, None, 1)?;
    let elapsed = start.elapsed();
    let err = (fit.ate - w.true_ate).abs();
    let rel_err = (relative(fit.ate, &w.data) - relative(w.true_ate, &w.data)).abs();
    let passed = err < 0.03 && rel_err < 5.0 && elapsed < RUNTIME_BUDGET;
    Ok((
        passed,
        format!(
            "true {:.4} ({:.2}%), DR {:.4} ({:.2}%), |error| {:.4}, {:.1}s for simulate + cohort + DR fit",
            w.true_ate,
            relative(w.true_ate, &w.data),
            fit.ate,
            relative(fit.ate, &w.data),
            err,
            elapsed.as_secs_f64()
        ),
    ))
}

fn double_robustness() -> Result<(bool, String)> {
    let w = sample_world(&confounded_world(20_000, 202), Outcome::ReportRate)?;
    let bad_outcome = MetaConfig {
        base: RegressorSpec::Constant,
        effect: RegressorSpec::ridge(),
        ..MetaConfig::default()
    };
    let dr_a = fit_point(Estimator::Dr, &w.data, &bad_outcome, None, 1)?.ate - w.true_ate;
    let t_a = fit_point(Estimator::T, &w.data, &bad_outcome, None, 1)?.ate - w.true_ate;
    let bad_propensity = MetaConfig {
        propensity: PropensitySpec::Constant { value: 0.5 },
        ..MetaConfig::linear()
    };
    let dr_b = fit_point(Estimator::Dr, &w.data, &bad_propensity, None, 1)?.ate - w.true_ate;
    let passed = dr_a.abs() < 0.03 && t_a.abs() > 0.05 && dr_b.abs() < 0.03;
    Ok((
        passed,
        format!(
            "constant outcome model: DR error {dr_a:+.4}, T-learner bias {t_a:+.4}; constant propensity: DR error {dr_b:+.4}"
        ),
    ))
}

fn null_safety(scale: Scale) -> Result<(bool, String)> {
    let mut max_rel: f64 = 0.0;
    let mut covered = [0usize; 5];
    let cfg = MetaConfig::linear();
    for s in 0..scale.seeds {
        let w = sample_world(&null_world(10_000, 300 + s as u64), Outcome::ReportRate)?;
        let boot = BootstrapConfig {
            reps: scale.null_reps,
            seed: s as u64,
            ..BootstrapConfig::default()
        };
        let est = estimate_effects(&Estimator::ALL, &w.data, &cfg, &boot)?;
        for (k, e) in est.iter().enumerate() {
            max_rel = max_rel.max(e.ate_relative.map_or(f64::INFINITY, f64::abs));
            if e.ci_low <= 0.0 && e.ci_high >= 0.0 {
                covered[k] += 1;
            }
        }
    }
    let need = (scale.seeds * 9).div_ceil(10);
    let passed = max_rel < 5.0 && covered.iter().all(|&c| c >= need);
    Ok((
        passed,
        format!(
            "max |relative| {max_rel:.2} points; CIs containing 0 out of {} (T, S, X, R, DR): {covered:?}, need {need}",
            scale.seeds
        ),
    ))
}

fn bootstrap_coverage(scale: Scale) -> Result<(bool, String)> {
    let cfg = MetaConfig::linear();
    let mut hits = 0;
    for s in 0..scale.coverage_worlds {
        let w = sample_world(&confounded_world(scale.coverage_players, 4000 + s as u64), Outcome::ReportRate)?;
        let boot = BootstrapConfig {
            reps: scale.coverage_reps,
            seed: s as u64,
            ..BootstrapConfig::default()
        };
        let e = &estimate_effects(&[Estimator::Dr], &w.data, &cfg, &boot)?[0];
        if e.ci_low <= w.true_ate && w.true_ate <= e.ci_high {
            hits += 1;
        }
    }
    let rate = hits as f64 / scale.coverage_worlds as f64;
    Ok((
        (0.90..=0.99).contains(&rate),
        format!(
            "DR 95% interval covered the truth in {hits} of {} worlds ({rate:.3})",
            scale.coverage_worlds
        ),
    ))
}

fn pipeline_exactness() -> Result<(bool, String)> {
    let mut checks = 0usize;
    let mut failures = Vec::new();
    for (name, raw) in oracle::fixtures()? {
        let got = link_cases(&raw);
        let want = oracle::brute_force_links(&raw);
        checks += 1;
        if got != want {
            failures.push(format!("{name}: linked cases differ"));
            continue;
        }
        let log = EventLog::new(&raw);
        for setup in [StudySetup::moderation_vs_none(), StudySetup::quick_vs_delayed()] {
            for case in &got {
                checks += 2;
                let dr = crate::cohort::compute_delta_report_rate(case, &setup, &log);
                if dr != oracle::brute_force_delta_report_rate(&raw, case, &setup) {
                    failures.push(format!("{name}: report-rate change for {}", case.player_id));
                }
                let dp = crate::cohort::compute_delta_participation(case, &setup, &log);
                if dp != oracle::brute_force_delta_participation(&raw, case, &setup) {
                    failures.push(format!("{name}: participation change for {}", case.player_id));
                }
            }
        }
    }
    let (got, want) = oracle::aipw_hand_table()?;
    checks += 1;
    let diff = (got - want).abs();
    if diff > 1e-12 {
        failures.push(format!("AIPW formula off by {diff:e}"));
    }
    Ok((
        failures.is_empty(),
        if failures.is_empty() {
            format!("{checks} exact checks agree; AIPW difference {diff:e}")
        } else {
            failures.join("; ")
        },
    ))
}

/// Confounded worlds whose matched balance is checked.
pub fn confounded_fixtures() -> Vec<SimConfig> {
    let mut out = Vec::new();
    for (i, seed) in [11u64, 12, 13].into_iter().enumerate() {
        let mut a = confounded_world(3000, seed);
        if i == 1 {
            for c in &mut a.assignment_coefs {
                *c *= 1.5;
            }
        }
        out.push(a);
    }
    let mut b = confounded_world(3000, 14);
    b.target_setup = SetupKind::QuickVsDelayed;
    out.push(b);
    out
}

fn balance_improvement() -> Result<(bool, String)> {
    let mut parts = Vec::new();
    let mut passed = true;
    for cfg in confounded_fixtures() {
        let w = sample_world(&cfg, Outcome::Participation)?;
        let prop = estimate_propensity(&w.data, &PropensitySpec::default(), crate::meta::DEFAULT_CLIP)?;
        let b = balance_report(&w.data.x, &w.data.treated, &prop.scores, 1, None)?;
        let (before, after) = (
            b.mean_abs_smd_before().unwrap_or(f64::NAN),
            b.mean_abs_smd_after().unwrap_or(f64::NAN),
        );
        passed &= after < before;
        parts.push(format!("seed {}: {before:.4} -> {after:.4}", cfg.seed));
    }
    Ok((passed, format!("mean |SMD| before -> after matching: {}", parts.join(", "))))
}

fn heterogeneity_sign(scale: Scale) -> Result<(bool, String)> {
    let cfg = MetaConfig::for_setup(SetupKind::ModerationVsNone);
    let mut hits = 0;
    let mut rs = Vec::new();
    for s in 0..scale.seeds {
        let w = sample_world(&kd_world(4000, 700 + s as u64), Outcome::ReportRate)?;
        let fit = fit_point(Estimator::Dr, &w.data, &cfg, None, s as u64)?;
        let ind = compute_skill_indicators(&w.cohort);
        let kd: Vec<Option<f64>> = w.data.row_index.iter().map(|&i| ind[i].kd).collect();
        let r = cate_feature_correlation(&fit.cate, &kd)?.r;
        if r < -0.3 {
            hits += 1;
        }
        rs.push(format!("{r:.2}"));
    }
    let need = (scale.seeds * 9).div_ceil(10);
    Ok((
        hits >= need,
        format!("r(CATE, KD) < -0.3 in {hits} of {} seeds (need {need}): {}", scale.seeds, rs.join(" ")),
    ))
}

fn concentration_ordering(scale: Scale) -> Result<(bool, String)> {
    let cfg = MetaConfig::for_setup(SetupKind::ModerationVsNone);
    let mut wins = 0;
    for s in 0..scale.seeds {
        let w = sample_world(&confounded_world(4000, 800 + s as u64), Outcome::ReportRate)?;
        let prop = estimate_propensity(&w.data, &cfg.propensity, cfg.clip)?;
        let t = fit_point(Estimator::T, &w.data, &cfg, None, s as u64)?;
        let dr = fit_point(Estimator::Dr, &w.data, &cfg, Some(&prop), s as u64)?;
        let iqr_t = CateSummary::of(Estimator::T, t.ate, &t.cate).iqr;
        let iqr_dr = CateSummary::of(Estimator::Dr, dr.ate, &dr.cate).iqr;
        if iqr_dr <= iqr_t {
            wins += 1;
        }
    }
    Ok((
        2 * wins > scale.seeds,
        format!("DR IQR <= T-learner IQR in {wins} of {} seeds", scale.seeds),
    ))
}

fn determinism() -> Result<(bool, String)> {
    let (raw, _) = generate_world(&SimConfig {
        n_players: 1200,
        seed: 9,
        ..SimConfig::default()
    })?;
    let cfg = PipelineConfig {
        seed: 5,
        base: RegressorSpec::ridge(),
        effect: Some(RegressorSpec::ridge()),
        bootstrap_reps: 100,
        ..PipelineConfig::default()
    };
    let render = |parallel: bool| -> Result<(String, String, String)> {
        let out = run_pipeline::<f64>(&raw, &cfg, parallel)?;
        Ok((render_text(&out.report), render_csv(&out.report)?, out.report.to_json()?))
    };
    let first = render(true)?;
    let second = render(true)?;
    let serial = render(false)?;
    let (world_a, world_b) = (
        generate_world(&SimConfig {
            n_players: 300,
            seed: 9,
            ..SimConfig::default()
        })?,
        generate_world(&SimConfig {
            n_players: 300,
            seed: 9,
            ..SimConfig::default()
        })?,
    );
    let passed = first == second && first == serial && world_a == world_b;
    Ok((
        passed,
        format!(
            "repeat run identical: {}, serial vs parallel identical: {}, simulated logs identical: {}, report {} bytes",
            first == second,
            first == serial,
            world_a == world_b,
            first.0.len()
        ),
    ))
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Deliberately naive re-implementations used as exact references.
pub mod oracle {
    use super::*;

    fn d(s: &str) -> Day {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").expect("fixture date")
    }

    fn report(p: &str, day: &str, o: OffenseType, reporter: Option<&str>) -> ReportEvent {
        ReportEvent {
            player_id: PlayerId::new(p),
            report_date: d(day),
            offense_type: o,
            reporter_id: reporter.map(str::to_string),
        }
    }

    fn moderation(p: &str, day: &str, o: OffenseType, sev: Severity, linked: &[&str]) -> ModerationEvent {
        ModerationEvent {
            player_id: PlayerId::new(p),
            moderation_date: d(day),
            offense_type: o,
            actions: action_set_for(o, sev).expect("tabulated action set"),
            linked_reporters: linked.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn played(p: &str, day: &str, matches: u32, score: f64) -> MatchDayRecord {
        let mut stats = [0.0; N_COVARIATES];
        stats[covariate::MATCH_SCORE] = score;
        stats[covariate::ELIMINATIONS] = 10.0;
        stats[covariate::DEATHS] = 8.0;
        stats[covariate::DAMAGE_DONE] = 1500.0;
        stats[covariate::DAMAGE_TAKEN] = 1200.0;
        MatchDayRecord {
            player_id: PlayerId::new(p),
            date: d(day),
            matches_played: matches,
            stats: Some(Covariates(stats)),
        }
    }

    /// Small event logs exercising multi-report moderations, unlinked
    /// reporters, over-long lags, repeat moderations and offense mismatches.
    pub fn fixtures() -> Result<Vec<(&'static str, RawTables)>> {
        use OffenseType::*;
        let coverage = Window::new(d("2023-03-01"), d("2023-03-31"));
        let mut days = Vec::new();
        for (p, list) in [
            ("a", &["03-03", "03-05", "03-08", "03-09", "03-10", "03-12", "03-14", "03-20"][..]),
            ("b", &["03-04", "03-06", "03-07", "03-11", "03-13", "03-15", "03-18", "03-22"][..]),
            ("c", &["03-02", "03-09", "03-10", "03-16", "03-17", "03-24"][..]),
        ] {
            for (i, md) in list.iter().enumerate() {
                days.push(played(p, &format!("2023-{md}"), 1 + (i as u32 % 3), 2000.0 + 50.0 * i as f64));
            }
        }
        let reports = vec![
            report("a", "2023-03-09", Cheating, Some("r1")),
            report("a", "2023-03-10", Cheating, Some("r2")),
            report("a", "2023-03-05", OffensiveTextChat, Some("r3")),
            report("a", "2023-03-13", Cheating, None),
            report("b", "2023-03-11", OffensiveUserID, Some("r4")),
            report("b", "2023-03-12", OffensiveUserID, Some("r5")),
            report("b", "2023-03-07", OffensiveUserID, Some("r9")),
            report("b", "2023-03-16", OffensiveTextChat, None),
            report("c", "2023-03-10", OffensiveVoiceChat, Some("r6")),
            report("c", "2023-03-01", OffensiveVoiceChat, Some("r7")),
            report("c", "2023-03-17", Cheating, Some("r8")),
        ];
        let moderations = vec![
            moderation("a", "2023-03-12", Cheating, Severity::NotApplicable, &[]),
            moderation("a", "2023-03-20", OffensiveTextChat, Severity::Milder, &["r3"]),
            moderation("b", "2023-03-19", OffensiveUserID, Severity::Stricter, &["r4", "r5"]),
            moderation("b", "2023-03-19", OffensiveUserID, Severity::Milder, &["r5"]),
            moderation("c", "2023-03-17", OffensiveVoiceChat, Severity::Milder, &["r6", "r7"]),
            moderation("c", "2023-03-18", OffensiveTextChat, Severity::Stricter, &[]),
        ];
        let first = RawTables::new(reports, moderations, days.clone(), coverage)?;

        let reports = vec![
            report("a", "2023-03-10", OffensiveTextChat, Some("s1")),
            report("a", "2023-03-10", OffensiveTextChat, Some("s2")),
            report("b", "2023-03-01", Cheating, None),
            report("c", "2023-03-09", OffensiveUserID, None),
        ];
        let moderations = vec![
            moderation("a", "2023-03-10", OffensiveTextChat, Severity::Stricter, &["s2"]),
            moderation("b", "2023-03-16", Cheating, Severity::NotApplicable, &[]),
            moderation("c", "2023-03-23", OffensiveUserID, Severity::Milder, &[]),
            moderation("c", "2023-03-12", OffensiveUserID, Severity::Milder, &[]),
        ];
        let second = RawTables::new(reports, moderations, days, coverage)?;
        Ok(vec![("mixed log", first), ("edge lags", second)])
    }

    fn linkable(r: &ReportEvent, m: &ModerationEvent) -> bool {
        if r.player_id != m.player_id || r.offense_type != m.offense_type {
            return false;
        }
        let lag = (m.moderation_date - r.report_date).num_days();
        if lag < 0 || lag > MAX_LINK_LAG {
            return false;
        }
        if m.linked_reporters.is_empty() {
            return true;
        }
        match &r.reporter_id {
            None => true,
            Some(id) => m.linked_reporters.contains(id),
        }
    }

    /// Quadratic scan over every (moderation, report) pair.
    pub fn brute_force_links(raw: &RawTables) -> Vec<LinkedCase> {
        // (moderation index, earliest linked report date)
        let mut linked: Vec<(usize, Day)> = Vec::new();
        for (mi, m) in raw.moderations.iter().enumerate() {
            let mut first: Option<Day> = None;
            for r in &raw.reports {
                if linkable(r, m) && first.is_none_or(|f| r.report_date < f) {
                    first = Some(r.report_date);
                }
            }
            if let Some(f) = first {
                linked.push((mi, f));
            }
        }
        let lag_of = |(mi, f): (usize, Day)| (raw.moderations[mi].moderation_date - f).num_days();
        // duplicates of (player, date, offense): keep the shortest lag, then the first row
        let mut kept: Vec<(usize, Day)> = Vec::new();
        for &(mi, f) in &linked {
            let m = &raw.moderations[mi];
            let beaten = linked.iter().any(|&(oj, g)| {
                let o = &raw.moderations[oj];
                oj != mi
                    && o.player_id == m.player_id
                    && o.moderation_date == m.moderation_date
                    && o.offense_type == m.offense_type
                    && (lag_of((oj, g)) < lag_of((mi, f)) || (lag_of((oj, g)) == lag_of((mi, f)) && oj < mi))
            });
            if !beaten {
                kept.push((mi, f));
            }
        }
        let mut players: Vec<&PlayerId> = kept.iter().map(|&(mi, _)| &raw.moderations[mi].player_id).collect();
        players.sort();
        players.dedup();
        let mut out = Vec::new();
        for p in players {
            let mut best: Option<(usize, Day)> = None;
            for &(mi, f) in kept.iter().filter(|&&(mi, _)| &raw.moderations[mi].player_id == p) {
                let key = |(i, g): (usize, Day)| {
                    let m = &raw.moderations[i];
                    (m.moderation_date, -lag_of((i, g)), m.offense_type, i)
                };
                if best.is_none_or(|b| key((mi, f)) < key(b)) {
                    best = Some((mi, f));
                }
            }
            let (mi, f) = best.expect("player has a kept moderation");
            let m = &raw.moderations[mi];
            out.push(LinkedCase {
                player_id: p.clone(),
                report_date: f,
                moderation_date: m.moderation_date,
                lag: lag_of((mi, f)),
                offense_type: m.offense_type,
                actions: m.actions.clone(),
                severity: crate::domain::classify_severity(m.offense_type, &m.actions).ok(),
                covariates: brute_force_covariates(raw, p, f),
            });
        }
        out
    }

    fn in_window(day: Day, start: Day) -> bool {
        day >= start && day <= start + Duration::days(6)
    }

    fn windows(case: &LinkedCase, setup: &StudySetup) -> (Day, Day) {
        let pre = case.report_date - Duration::days(7);
        let post = match setup.post_anchor {
            crate::cohort::PostAnchor::ReportDate => case.report_date,
            crate::cohort::PostAnchor::ModerationDate => case.moderation_date,
        };
        (pre, post)
    }

    fn brute_force_covariates(raw: &RawTables, p: &PlayerId, report: Day) -> Option<Covariates> {
        let start = report - Duration::days(7);
        let mut sums = [0.0; N_COVARIATES];
        let mut total = 0.0;
        for m in &raw.match_days {
            if &m.player_id == p && in_window(m.date, start) && m.matches_played > 0 {
                let Some(s) = m.stats else { continue };
                for j in 0..N_COVARIATES {
                    sums[j] += s.0[j] * f64::from(m.matches_played);
                }
                total += f64::from(m.matches_played);
            }
        }
        (total > 0.0).then(|| Covariates(sums.map(|v| v / total)))
    }

    fn counts(raw: &RawTables, p: &PlayerId, start: Day) -> (u64, u64, u32) {
        let reports = raw
            .reports
            .iter()
            .filter(|r| &r.player_id == p && in_window(r.report_date, start))
            .count() as u64;
        let mut matches = 0u64;
        let mut active = 0u32;
        for m in &raw.match_days {
            if &m.player_id == p && in_window(m.date, start) {
                matches += u64::from(m.matches_played);
                if m.matches_played > 0 {
                    active += 1;
                }
            }
        }
        (reports, matches, active)
    }

    pub fn brute_force_delta_report_rate(raw: &RawTables, case: &LinkedCase, setup: &StudySetup) -> Option<f64> {
        let (pre, post) = windows(case, setup);
        let (r0, m0, _) = counts(raw, &case.player_id, pre);
        let (r1, m1, _) = counts(raw, &case.player_id, post);
        if m0 == 0 || m1 == 0 {
            return None;
        }
        Some(r1 as f64 / m1 as f64 - r0 as f64 / m0 as f64)
    }

    pub fn brute_force_delta_participation(raw: &RawTables, case: &LinkedCase, setup: &StudySetup) -> f64 {
        let (pre, post) = windows(case, setup);
        let (_, _, a0) = counts(raw, &case.player_id, pre);
        let (_, _, a1) = counts(raw, &case.player_id, post);
        f64::from(a1) / 7.0 - f64::from(a0) / 7.0
    }

    /// The AIPW estimate on a four-row table, via the library and written out by hand.
    pub fn aipw_hand_table() -> Result<(f64, f64)> {
        let w = [true, true, false, false];
        let y = [2.0, 1.5, 0.5, 1.0];
        let e = [0.6, 0.3, 0.4, 0.7];
        let mu0 = [0.8, 0.9, 0.6, 1.1];
        let mu1 = [1.7, 1.4, 1.2, 1.6];
        let got = aipw_formula(&w, &y, &e, &mu0, &mu1)?;
        let row0 = (1.7 - 0.8) + (2.0 - 1.7) / 0.6;
        let row1 = (1.4 - 0.9) + (1.5 - 1.4) / 0.3;
        let row2 = (1.2 - 0.6) - (0.5 - 0.6) / (1.0 - 0.4);
        let row3 = (1.6 - 1.1) - (1.0 - 1.1) / (1.0 - 0.7);
        Ok((got, (row0 + row1 + row2 + row3) / 4.0))
    }
}
