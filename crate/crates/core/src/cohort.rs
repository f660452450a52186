//! Quasi-experimental cohorts and the report-rate / participation outcomes.
//!
//! Two designs are supported. In the moderation-vs-none design same-day
//! moderation is the treatment and players moderated a week or more later serve
//! as unmoderated controls over the week after the report. In the quick-vs-delayed
//! design moderation within three days is compared to moderation after a week,
//! over the week after moderation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::domain::{Covariates, OffenseType, PlayerId, Severity, COVARIATE_NAMES};
use crate::error::{Error, Result};
use crate::ingest::{EventLog, LinkedCase, Window};
use crate::linalg::Matrix;
use crate::meta::CausalData;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetupKind {
    ModerationVsNone,
    QuickVsDelayed,
}

impl SetupKind {
    pub const ALL: [SetupKind; 2] = [SetupKind::ModerationVsNone, SetupKind::QuickVsDelayed];

    pub fn as_str(self) -> &'static str {
        match self {
            SetupKind::ModerationVsNone => "moderation_vs_none",
            SetupKind::QuickVsDelayed => "quick_vs_delayed",
        }
    }
}

impl fmt::Display for SetupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SetupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "moderation_vs_none" | "a" => Ok(SetupKind::ModerationVsNone),
            "quick_vs_delayed" | "b" => Ok(SetupKind::QuickVsDelayed),
            _ => Err(Error::Config(format!("unknown study setup {s:?}"))),
        }
    }
}

/// Which date opens the post-treatment week.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PostAnchor {
    ReportDate,
    ModerationDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudySetup {
    pub kind: SetupKind,
    pub treat_max_lag: i64,
    pub control_min_lag: i64,
    pub post_anchor: PostAnchor,
}

impl StudySetup {
    pub fn new(
        kind: SetupKind,
        treat_max_lag: i64,
        control_min_lag: i64,
        post_anchor: PostAnchor,
    ) -> Result<Self> {
        if treat_max_lag < 0 || treat_max_lag >= control_min_lag {
            return Err(Error::Config(format!(
                "treatment lag bound {treat_max_lag} must be below control bound {control_min_lag}"
            )));
        }
        Ok(Self {
            kind,
            treat_max_lag,
            control_min_lag,
            post_anchor,
        })
    }

    pub fn moderation_vs_none() -> Self {
        Self {
            kind: SetupKind::ModerationVsNone,
            treat_max_lag: 0,
            control_min_lag: 7,
            post_anchor: PostAnchor::ReportDate,
        }
    }

    pub fn quick_vs_delayed() -> Self {
        Self {
            kind: SetupKind::QuickVsDelayed,
            treat_max_lag: 3,
            control_min_lag: 7,
            post_anchor: PostAnchor::ModerationDate,
        }
    }

    pub fn for_kind(kind: SetupKind) -> Self {
        match kind {
            SetupKind::ModerationVsNone => Self::moderation_vs_none(),
            SetupKind::QuickVsDelayed => Self::quick_vs_delayed(),
        }
    }

    /// The week before the report; identical for both designs.
    pub fn pre_window(&self, case: &LinkedCase) -> Window {
        case.pre_window()
    }

    pub fn post_window(&self, case: &LinkedCase) -> Window {
        match self.post_anchor {
            PostAnchor::ReportDate => Window::week_from(case.report_date),
            PostAnchor::ModerationDate => Window::week_from(case.moderation_date),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    Treated,
    Control,
    Excluded,
}

pub fn assign_treatment(case: &LinkedCase, setup: &StudySetup) -> Assignment {
    if case.lag <= setup.treat_max_lag {
        Assignment::Treated
    } else if case.lag >= setup.control_min_lag {
        Assignment::Control
    } else {
        Assignment::Excluded
    }
}

/// Change in reports received per match played, post week minus pre week.
/// `None` when either week has no matches.
pub fn compute_delta_report_rate(case: &LinkedCase, setup: &StudySetup, log: &EventLog) -> Option<f64> {
    let rate = |w: Window| {
        let matches = log.matches_in(&case.player_id, w);
        (matches > 0).then(|| log.reports_in(&case.player_id, w) as f64 / matches as f64)
    };
    Some(rate(setup.post_window(case))? - rate(setup.pre_window(case))?)
}

/// Change in the fraction of days with at least one match, post week minus pre week.
pub fn compute_delta_participation(case: &LinkedCase, setup: &StudySetup, log: &EventLog) -> f64 {
    let frac = |w: Window| f64::from(log.active_days_in(&case.player_id, w)) / 7.0;
    frac(setup.post_window(case)) - frac(setup.pre_window(case))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ReportRate,
    Participation,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::ReportRate, Outcome::Participation];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::ReportRate => "delta_report_rate",
            Outcome::Participation => "delta_participation",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optional filter on offense type and/or severity, applied before assignment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stratum {
    pub offense: Option<OffenseType>,
    pub severity: Option<Severity>,
}

impl Stratum {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn offense(offense: OffenseType) -> Self {
        Self {
            offense: Some(offense),
            severity: None,
        }
    }

    pub fn matches(&self, case: &LinkedCase) -> bool {
        self.offense.is_none_or(|o| o == case.offense_type)
            && self.severity.is_none_or(|s| case.severity == Some(s))
    }

    pub fn severity_label(&self) -> &'static str {
        self.severity.map_or("pooled", Severity::as_str)
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.offense {
            Some(o) => write!(f, "{o}/{}", self.severity_label()),
            None => write!(f, "all/{}", self.severity_label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub player_id: PlayerId,
    pub treated: bool,
    pub lag: i64,
    pub covariates: Covariates,
    pub delta_report_rate: Option<f64>,
    pub delta_participation: f64,
    pub offense_type: OffenseType,
    pub severity: Option<Severity>,
    pub baseline_report_rate: f64,
    pub baseline_participation: f64,
}

impl CohortRow {
    pub fn outcome(&self, outcome: Outcome) -> Option<f64> {
        match outcome {
            Outcome::ReportRate => self.delta_report_rate,
            Outcome::Participation => Some(self.delta_participation),
        }
    }

    pub fn baseline(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::ReportRate => self.baseline_report_rate,
            Outcome::Participation => self.baseline_participation,
        }
    }
}

pub mod exclusion {
    pub const GAP_LAG: &str = "gap_lag";
    pub const COVARIATE_INCOMPLETE: &str = "covariate_incomplete";
    pub const WINDOW_BEFORE_LOG: &str = "window_before_log";
    pub const WINDOW_BEYOND_LOG: &str = "window_beyond_log";
    pub const ZERO_MATCH_WINDOW: &str = "zero_match_window";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortTable {
    pub setup: StudySetup,
    pub stratum: Stratum,
    pub rows: Vec<CohortRow>,
    /// Cases dropped entirely, by reason.
    pub exclusion_counts: BTreeMap<String, usize>,
    /// Rows kept but without a defined report-rate change (zero-match week).
    pub outcome_exclusions: BTreeMap<String, usize>,
}

impl CohortTable {
    pub fn n_treated(&self) -> usize {
        self.rows.iter().filter(|r| r.treated).count()
    }

    pub fn n_control(&self) -> usize {
        self.rows.len() - self.n_treated()
    }

    pub fn excluded_total(&self) -> usize {
        self.exclusion_counts.values().sum()
    }

    /// Estimation view for one outcome: rows where it is defined, in row order.
    pub fn causal_data<F: Scalar>(&self, outcome: Outcome) -> Result<CausalData<F>> {
        let kept: Vec<usize> = (0..self.rows.len())
            .filter(|&i| self.rows[i].outcome(outcome).is_some())
            .collect();
        let mut x = Vec::with_capacity(kept.len() * COVARIATE_NAMES.len());
        let mut treated = Vec::with_capacity(kept.len());
        let mut y = Vec::with_capacity(kept.len());
        let mut baseline = Vec::with_capacity(kept.len());
        for &i in &kept {
            let r = &self.rows[i];
            x.extend(r.covariates.0.iter().map(|&v| F::of(v)));
            treated.push(r.treated);
            y.push(F::of(r.outcome(outcome).unwrap_or_default()));
            baseline.push(F::of(r.baseline(outcome)));
        }
        let x = Matrix::from_vec(kept.len(), COVARIATE_NAMES.len(), x)?;
        CausalData::new(x, treated, y)
            .map(|d| d.with_baseline(baseline))
            .map(|d| d.with_row_index(kept))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io {
            path: path.to_path_buf(),
            source: e,
        };
        let file = std::fs::File::create(path).map_err(io)?;
        let mut w = csv::Writer::from_writer(file);
        let mut header = vec![
            "player_id".to_string(),
            "setup".into(),
            "treated".into(),
            "lag".into(),
            "offense_type".into(),
            "severity".into(),
        ];
        header.extend(COVARIATE_NAMES.iter().map(|s| s.to_string()));
        header.extend([
            "delta_report_rate".into(),
            "delta_participation".into(),
            "baseline_report_rate".into(),
            "baseline_participation".into(),
        ]);
        let csv_io = |e: csv::Error| io(std::io::Error::other(e));
        w.write_record(&header).map_err(csv_io)?;
        for r in &self.rows {
            let mut rec = vec![
                r.player_id.0.clone(),
                self.setup.kind.to_string(),
                u8::from(r.treated).to_string(),
                r.lag.to_string(),
                r.offense_type.to_string(),
                r.severity.map_or("Unclassifiable".to_string(), |s| s.to_string()),
            ];
            rec.extend(r.covariates.0.iter().map(|v| v.to_string()));
            rec.push(r.delta_report_rate.map_or(String::new(), |v| v.to_string()));
            rec.push(r.delta_participation.to_string());
            rec.push(r.baseline_report_rate.to_string());
            rec.push(r.baseline_participation.to_string());
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush().map_err(io)
    }
}

/// Builds the cohort for one design and stratum.
///
/// Every case passing the stratum filter becomes a row or is counted once in
/// `exclusion_counts`. Cases whose windows reach outside the log's coverage are
/// excluded rather than truncated.
pub fn build_cohort(
    cases: &[LinkedCase],
    setup: &StudySetup,
    log: &EventLog,
    stratum: Stratum,
) -> Result<CohortTable> {
    let coverage = log.coverage();
    let mut rows = Vec::new();
    let mut exclusion_counts = BTreeMap::new();
    let mut outcome_exclusions = BTreeMap::new();
    let mut exclude = |reason: &str| *exclusion_counts.entry(reason.to_string()).or_insert(0) += 1;

    for case in cases.iter().filter(|c| stratum.matches(c)) {
        let treated = match assign_treatment(case, setup) {
            Assignment::Treated => true,
            Assignment::Control => false,
            Assignment::Excluded => {
                exclude(exclusion::GAP_LAG);
                continue;
            }
        };
        let Some(covariates) = case.covariates else {
            exclude(exclusion::COVARIATE_INCOMPLETE);
            continue;
        };
        let pre = setup.pre_window(case);
        let post = setup.post_window(case);
        if pre.start < coverage.start {
            exclude(exclusion::WINDOW_BEFORE_LOG);
            continue;
        }
        if post.end > coverage.end {
            exclude(exclusion::WINDOW_BEYOND_LOG);
            continue;
        }
        let pre_matches = log.matches_in(&case.player_id, pre);
        let baseline_report_rate = if pre_matches > 0 {
            log.reports_in(&case.player_id, pre) as f64 / pre_matches as f64
        } else {
            exclude(exclusion::COVARIATE_INCOMPLETE);
            continue;
        };
        let delta_report_rate = compute_delta_report_rate(case, setup, log);
        if delta_report_rate.is_none() {
            *outcome_exclusions
                .entry(exclusion::ZERO_MATCH_WINDOW.to_string())
                .or_insert(0) += 1;
        }
        rows.push(CohortRow {
            player_id: case.player_id.clone(),
            treated,
            lag: case.lag,
            covariates,
            delta_report_rate,
            delta_participation: compute_delta_participation(case, setup, log),
            offense_type: case.offense_type,
            severity: case.severity,
            baseline_report_rate,
            baseline_participation: f64::from(log.active_days_in(&case.player_id, pre)) / 7.0,
        });
    }
    rows.sort_by(|a, b| a.player_id.cmp(&b.player_id));

    let table = CohortTable {
        setup: *setup,
        stratum,
        rows,
        exclusion_counts,
        outcome_exclusions,
    };
    let (nt, nc) = (table.n_treated(), table.n_control());
    if nt == 0 || nc == 0 {
        return Err(Error::CohortDegenerate {
            stratum: format!("{}:{stratum}", setup.kind),
            reason: format!("{nt} treated and {nc} control rows"),
        });
    }
    Ok(table)
}

/// First day of the post window relative to the report date, for diagnostics.
pub fn post_offset_days(case: &LinkedCase, setup: &StudySetup) -> i64 {
    (setup.post_window(case).start - case.report_date).num_days()
}

#[allow(dead_code)]
fn _window_len_is_week(w: Window) -> bool {
    w.len_days() == 7 && w.end - w.start == Duration::days(6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ActionSet, MatchDayRecord, ModerationAction, ReportEvent};
    use crate::ingest::RawTables;
    use chrono::NaiveDate;

    fn day(n: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2023, 3, 1).unwrap() + Duration::days(n)
    }

    fn case(player: &str, t: i64, lag: i64) -> LinkedCase {
        LinkedCase {
            player_id: PlayerId::new(player),
            report_date: day(t),
            moderation_date: day(t + lag),
            lag,
            offense_type: OffenseType::Cheating,
            actions: ActionSet::new(vec![ModerationAction::RemoveFromLeaderboard]).unwrap(),
            severity: Some(Severity::NotApplicable),
            covariates: Some(Covariates([1.0; 9])),
        }
    }

    fn played(player: &str, d: i64, n: u32) -> MatchDayRecord {
        MatchDayRecord {
            player_id: PlayerId::new(player),
            date: day(d),
            matches_played: n,
            stats: Some(Covariates([1.0; 9])),
        }
    }

    fn reported(player: &str, d: i64) -> ReportEvent {
        ReportEvent {
            player_id: PlayerId::new(player),
            report_date: day(d),
            offense_type: OffenseType::Cheating,
            reporter_id: None,
        }
    }

    fn log(reports: Vec<ReportEvent>, matches: Vec<MatchDayRecord>) -> EventLog {
        EventLog::new(&RawTables::new(reports, vec![], matches, Window::new(day(0), day(40))).unwrap())
    }

    #[test]
    fn assignment_by_lag() {
        let a = StudySetup::moderation_vs_none();
        let b = StudySetup::quick_vs_delayed();
        assert_eq!(assign_treatment(&case("p", 10, 0), &a), Assignment::Treated);
        assert_eq!(assign_treatment(&case("p", 10, 5), &a), Assignment::Excluded);
        assert_eq!(assign_treatment(&case("p", 10, 8), &b), Assignment::Control);
        assert_eq!(assign_treatment(&case("p", 10, 3), &b), Assignment::Treated);
        assert!(StudySetup::new(SetupKind::QuickVsDelayed, 7, 7, PostAnchor::ModerationDate).is_err());
    }

    #[test]
    fn report_rate_change_example() {
        // w0 = days 3..9: 2 reports over 4 matches; w1 = days 10..16: 1 report over 4 matches
        let l = log(
            vec![reported("p", 4), reported("p", 8), reported("p", 12)],
            vec![played("p", 3, 2), played("p", 9, 2), played("p", 11, 4)],
        );
        let c = case("p", 10, 0);
        let v = compute_delta_report_rate(&c, &StudySetup::moderation_vs_none(), &l).unwrap();
        assert!((v - (-0.25)).abs() < 1e-15);
    }

    #[test]
    fn report_rate_undefined_without_post_matches() {
        let l = log(vec![reported("p", 4)], vec![played("p", 3, 2)]);
        let c = case("p", 10, 0);
        assert!(compute_delta_report_rate(&c, &StudySetup::moderation_vs_none(), &l).is_none());
    }

    #[test]
    fn participation_examples() {
        let setup = StudySetup::moderation_vs_none();
        let all_pre: Vec<_> = (3..10).map(|d| played("p", d, 1)).collect();
        assert_eq!(compute_delta_participation(&case("p", 10, 0), &setup, &log(vec![], all_pre)), -1.0);

        let mut m: Vec<_> = [3, 5].iter().map(|&d| played("p", d, 2)).collect();
        m.extend([10, 11, 13, 15, 16].iter().map(|&d| played("p", d, 1)));
        let v = compute_delta_participation(&case("p", 10, 0), &setup, &log(vec![], m));
        assert!((v - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn windows_for_both_designs() {
        let c = case("p", 10, 9);
        let a = StudySetup::moderation_vs_none();
        let b = StudySetup::quick_vs_delayed();
        assert_eq!(a.pre_window(&c), b.pre_window(&c));
        assert_eq!(a.post_window(&c).start, day(10));
        assert_eq!(b.post_window(&c).start, day(19));
        for w in [a.pre_window(&c), a.post_window(&c), b.post_window(&c)] {
            assert!(_window_len_is_week(w));
        }
        assert_eq!(post_offset_days(&c, &b), 9);
    }

    #[test]
    fn cohort_counts_and_degenerate_strata() {
        let mut cases = Vec::new();
        let mut matches = Vec::new();
        for i in 0..10 {
            let p = format!("p{i:02}");
            let lag = if i < 4 { 0 } else { 7 + i };
            cases.push(case(&p, 10, lag));
            matches.extend((3..17).map(|d| played(&p, d, 1)));
        }
        let l = log(vec![], matches);
        let t = build_cohort(&cases, &StudySetup::moderation_vs_none(), &l, Stratum::all()).unwrap();
        assert_eq!(t.rows.len(), 10);
        assert_eq!(t.n_treated(), 4);

        let strict = Stratum {
            offense: Some(OffenseType::Cheating),
            severity: Some(Severity::Stricter),
        };
        let err = build_cohort(&cases, &StudySetup::moderation_vs_none(), &l, strict).unwrap_err();
        assert!(matches!(err, Error::CohortDegenerate { .. }));
    }

    #[test]
    fn post_window_past_log_end_is_excluded() {
        let mut cases = vec![case("a", 10, 0), case("b", 10, 8), case("c", 30, 10)];
        cases[2].moderation_date = day(40);
        let mut matches = Vec::new();
        for p in ["a", "b", "c"] {
            matches.extend((3..40).map(|d| played(p, d, 1)));
        }
        let l = log(vec![], matches);
        let t = build_cohort(&cases, &StudySetup::quick_vs_delayed(), &l, Stratum::all()).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.exclusion_counts.get(exclusion::WINDOW_BEYOND_LOG), Some(&1));
        assert_eq!(t.rows.len() + t.excluded_total(), cases.len());
    }
}
