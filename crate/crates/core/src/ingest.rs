//! Loading raw event files and linking reports to the moderation that followed.
//!
//! Three tables are read: player reports, moderation events and per-player-per-day
//! match aggregates. Files are comma-separated with a header row, or newline-delimited
//! JSON objects with the same field names (`.jsonl` / `.ndjson`).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::domain::{
    classify_severity, ActionSet, Covariates, Day, MatchDayRecord, ModerationEvent, OffenseType,
    PlayerId, ReportEvent, Severity, N_COVARIATES,
};
use crate::error::{Error, Result};

/// Longest report-to-moderation delay, in days, that still links the two.
pub const MAX_LINK_LAG: i64 = 14;

/// Closed interval of calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: Day,
    pub end: Day,
}

impl Window {
    pub fn new(start: Day, end: Day) -> Self {
        Self { start, end }
    }

    /// Seven-day window beginning at `start`.
    pub fn week_from(start: Day) -> Self {
        Self {
            start,
            end: start + Duration::days(6),
        }
    }

    pub fn contains(&self, d: Day) -> bool {
        self.start <= d && d <= self.end
    }

    pub fn covers(&self, other: &Window) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn len_days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }

    pub fn days(&self) -> impl Iterator<Item = Day> {
        let start = self.start;
        (0..self.len_days().max(0)).map(move |i| start + Duration::days(i))
    }
}

/// Default study window.
pub fn default_study_window() -> Window {
    Window::new(
        NaiveDate::from_ymd_opt(2023, 2, 1).unwrap(),
        NaiveDate::from_ymd_opt(2023, 4, 12).unwrap(),
    )
}

pub fn default_voice_start() -> Day {
    NaiveDate::from_ymd_opt(2023, 3, 21).unwrap()
}

#[derive(Debug, Clone)]
pub struct EventPaths {
    pub reports: PathBuf,
    pub moderations: PathBuf,
    pub matches: PathBuf,
}

impl EventPaths {
    /// The three standard file names inside one directory.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            reports: dir.join("reports.csv"),
            moderations: dir.join("moderations.csv"),
            matches: dir.join("matches.csv"),
        }
    }
}

/// Validated, filtered event tables.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTables {
    pub reports: Vec<ReportEvent>,
    pub moderations: Vec<ModerationEvent>,
    pub match_days: Vec<MatchDayRecord>,
    /// Days for which the log is complete.
    pub coverage: Window,
}

impl RawTables {
    pub fn new(
        reports: Vec<ReportEvent>,
        moderations: Vec<ModerationEvent>,
        match_days: Vec<MatchDayRecord>,
        coverage: Window,
    ) -> Result<Self> {
        let t = Self {
            reports,
            moderations,
            match_days,
            coverage,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.match_days.len());
        for rec in &self.match_days {
            rec.validate()?;
            if !seen.insert((&rec.player_id, rec.date)) {
                return Err(Error::invalid(format!(
                    "duplicate match-day record for {} on {}",
                    rec.player_id, rec.date
                )));
            }
        }
        Ok(())
    }

    /// Applies the study window to every table and drops voice-chat reports
    /// filed before voice moderation existed.
    pub fn filtered(mut self, range: Window, voice_start: Day) -> Self {
        self.reports.retain(|r| {
            range.contains(r.report_date)
                && !(r.offense_type == OffenseType::OffensiveVoiceChat && r.report_date < voice_start)
        });
        self.moderations.retain(|m| range.contains(m.moderation_date));
        self.match_days.retain(|m| range.contains(m.date));
        self.coverage = range;
        self
    }
}

// ---------------------------------------------------------------------------
// File rows
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
struct ReportRow {
    player_id: String,
    report_date: String,
    offense_type: String,
    #[serde(default)]
    reporter_id: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ModerationRow {
    player_id: String,
    moderation_date: String,
    offense_type: String,
    actions: String,
    #[serde(default)]
    linked_reporters: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct MatchRow {
    player_id: String,
    date: String,
    matches_played: u32,
    match_score: Option<f64>,
    assists: Option<f64>,
    eliminations: Option<f64>,
    deaths: Option<f64>,
    distance_traveled: Option<f64>,
    move_speed: Option<f64>,
    damage_done: Option<f64>,
    damage_taken: Option<f64>,
    accuracy: Option<f64>,
}

fn parse_day(s: &str) -> Result<Day> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| Error::invalid(format!("bad date {s:?}: {e}")))
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|v| v.trim().to_string()).filter(|v| !v.is_empty())
}

impl ReportRow {
    fn into_event(self) -> Result<ReportEvent> {
        Ok(ReportEvent {
            player_id: PlayerId::new(self.player_id.trim()),
            report_date: parse_day(&self.report_date)?,
            offense_type: self.offense_type.parse()?,
            reporter_id: non_empty(self.reporter_id),
        })
    }
}

impl ModerationRow {
    fn into_event(self) -> Result<ModerationEvent> {
        let linked_reporters = non_empty(self.linked_reporters)
            .map(|s| {
                s.split(';')
                    .map(|t| t.trim().to_string())
                    .filter(|t| !t.is_empty())
                    .collect()
            })
            .unwrap_or_default();
        Ok(ModerationEvent {
            player_id: PlayerId::new(self.player_id.trim()),
            moderation_date: parse_day(&self.moderation_date)?,
            offense_type: self.offense_type.parse()?,
            actions: ActionSet::parse_joined(&self.actions)?,
            linked_reporters,
        })
    }
}

impl MatchRow {
    fn into_record(self) -> Result<MatchDayRecord> {
        let fields = [
            self.match_score,
            self.assists,
            self.eliminations,
            self.deaths,
            self.distance_traveled,
            self.move_speed,
            self.damage_done,
            self.damage_taken,
            self.accuracy,
        ];
        let stats = if fields.iter().all(Option::is_none) {
            None
        } else if fields.iter().all(Option::is_some) {
            let mut v = [0.0; N_COVARIATES];
            for (slot, f) in v.iter_mut().zip(fields) {
                *slot = f.unwrap_or_default();
            }
            Some(Covariates(v))
        } else {
            return Err(Error::invalid("match aggregates must be all present or all absent"));
        };
        let rec = MatchDayRecord {
            player_id: PlayerId::new(self.player_id.trim()),
            date: parse_day(&self.date)?,
            matches_played: self.matches_played,
            stats,
        };
        rec.validate()?;
        Ok(rec)
    }

    fn from_record(rec: &MatchDayRecord) -> Self {
        let s = rec.stats.map(|c| c.0);
        let f = |i: usize| s.map(|v| v[i]);
        Self {
            player_id: rec.player_id.0.clone(),
            date: rec.date.to_string(),
            matches_played: rec.matches_played,
            match_score: f(0),
            assists: f(1),
            eliminations: f(2),
            deaths: f(3),
            distance_traveled: f(4),
            move_speed: f(5),
            damage_done: f(6),
            damage_taken: f(7),
            accuracy: f(8),
        }
    }
}

fn is_json_lines(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("ndjson")
    )
}

/// Reads every row of `path`, converting with `convert`; errors carry the
/// 1-based line number of the offending row.
fn read_rows<R, T>(path: &Path, convert: impl Fn(R) -> Result<T>) -> Result<Vec<T>>
where
    R: DeserializeOwned,
{
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut out = Vec::new();
    if is_json_lines(path) {
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err)?;
            let lineno = i as u64 + 1;
            if line.trim().is_empty() {
                continue;
            }
            let row: R =
                serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
            out.push(convert(row).map_err(|e| parse_err(lineno, e.to_string()))?);
        }
    } else {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        let mut rec = csv::StringRecord::new();
        loop {
            let more = rdr.read_record(&mut rec).map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            if !more {
                break;
            }
            let line = rec.position().map_or(0, |p| p.line());
            let row: R = rec.deserialize(Some(&headers)).map_err(|e| parse_err(line, e.to_string()))?;
            out.push(convert(row).map_err(|e| parse_err(line, e.to_string()))?);
        }
    }
    Ok(out)
}

/// Loads the three event tables and applies the study-window filters.
pub fn load_event_log(paths: &EventPaths, range: Window, voice_start: Day) -> Result<RawTables> {
    let reports = read_rows(&paths.reports, ReportRow::into_event)?;
    let moderations = read_rows(&paths.moderations, ModerationRow::into_event)?;
    let match_days = read_rows(&paths.matches, MatchRow::into_record)?;
    let raw = RawTables::new(reports, moderations, match_days, range)?;
    Ok(raw.filtered(range, voice_start))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

/// Writes the tables as CSV files in the schema [`load_event_log`] reads.
pub fn write_event_log(raw: &RawTables, paths: &EventPaths) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(&paths.reports)?);
    for r in &raw.reports {
        w.serialize(ReportRow {
            player_id: r.player_id.0.clone(),
            report_date: r.report_date.to_string(),
            offense_type: r.offense_type.to_string(),
            reporter_id: r.reporter_id.clone(),
        })
        .map_err(|e| csv_err(&paths.reports, e))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: paths.reports.clone(),
        source,
    })?;

    let mut w = csv::Writer::from_writer(create(&paths.moderations)?);
    for m in &raw.moderations {
        w.serialize(ModerationRow {
            player_id: m.player_id.0.clone(),
            moderation_date: m.moderation_date.to_string(),
            offense_type: m.offense_type.to_string(),
            actions: m.actions.joined(),
            linked_reporters: Some(m.linked_reporters.join(";")),
        })
        .map_err(|e| csv_err(&paths.moderations, e))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: paths.moderations.clone(),
        source,
    })?;

    let mut w = csv::Writer::from_writer(create(&paths.matches)?);
    for rec in &raw.match_days {
        w.serialize(MatchRow::from_record(rec))
            .map_err(|e| csv_err(&paths.matches, e))?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::Io {
        path: paths.matches.clone(),
        source: std::io::Error::other(e.to_string()),
    })?;
    inner.flush().map_err(|source| Error::Io {
        path: paths.matches.clone(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Indexed log
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Clone)]
struct PlayerActivity {
    report_days: Vec<Day>,
    days: BTreeMap<Day, (u32, Option<Covariates>)>,
}

/// Per-player index of report days and match days for window queries.
#[derive(Debug, Clone)]
pub struct EventLog {
    coverage: Window,
    players: HashMap<PlayerId, PlayerActivity>,
}

impl EventLog {
    pub fn new(raw: &RawTables) -> Self {
        let mut players: HashMap<PlayerId, PlayerActivity> = HashMap::new();
        for r in &raw.reports {
            players
                .entry(r.player_id.clone())
                .or_default()
                .report_days
                .push(r.report_date);
        }
        for m in &raw.match_days {
            players
                .entry(m.player_id.clone())
                .or_default()
                .days
                .insert(m.date, (m.matches_played, m.stats));
        }
        for p in players.values_mut() {
            p.report_days.sort();
        }
        Self {
            coverage: raw.coverage,
            players,
        }
    }

    pub fn coverage(&self) -> Window {
        self.coverage
    }

    /// Reports received by the player inside the window, whatever the offense.
    pub fn reports_in(&self, player: &PlayerId, w: Window) -> u64 {
        self.players.get(player).map_or(0, |p| {
            let lo = p.report_days.partition_point(|&d| d < w.start);
            let hi = p.report_days.partition_point(|&d| d <= w.end);
            (hi - lo) as u64
        })
    }

    pub fn matches_in(&self, player: &PlayerId, w: Window) -> u64 {
        self.players.get(player).map_or(0, |p| {
            p.days
                .range(w.start..=w.end)
                .map(|(_, (m, _))| u64::from(*m))
                .sum()
        })
    }

    /// Distinct days in the window with at least one match.
    pub fn active_days_in(&self, player: &PlayerId, w: Window) -> u32 {
        self.players.get(player).map_or(0, |p| {
            p.days
                .range(w.start..=w.end)
                .filter(|(_, (m, _))| *m > 0)
                .count() as u32
        })
    }

    /// Match-weighted per-match means over the window; `None` without matches.
    pub fn covariate_means(&self, player: &PlayerId, w: Window) -> Option<Covariates> {
        let p = self.players.get(player)?;
        let mut sums = [0.0; N_COVARIATES];
        let mut total = 0u64;
        for (_, (m, stats)) in p.days.range(w.start..=w.end) {
            if let (Some(s), true) = (stats, *m > 0) {
                for (acc, v) in sums.iter_mut().zip(s.0) {
                    *acc += f64::from(*m) * v;
                }
                total += u64::from(*m);
            }
        }
        if total == 0 {
            return None;
        }
        for s in &mut sums {
            *s /= total as f64;
        }
        Some(Covariates(sums))
    }
}

// ---------------------------------------------------------------------------
// Linking
// ---------------------------------------------------------------------------

/// One moderated player's report-to-moderation linkage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedCase {
    pub player_id: PlayerId,
    pub report_date: Day,
    pub moderation_date: Day,
    pub lag: i64,
    pub offense_type: OffenseType,
    pub actions: ActionSet,
    /// `None` when the action set matches no severity row.
    pub severity: Option<Severity>,
    /// Per-match means over `[T-7, T-1]`; `None` when no match was played there.
    pub covariates: Option<Covariates>,
}

impl LinkedCase {
    /// The week before the report.
    pub fn pre_window(&self) -> Window {
        Window::new(
            self.report_date - Duration::days(7),
            self.report_date - Duration::days(1),
        )
    }
}

struct Candidate<'a> {
    order: usize,
    moderation: &'a ModerationEvent,
    report_date: Day,
    lag: i64,
}

fn report_links(report: &ReportEvent, m: &ModerationEvent) -> bool {
    let lag = (m.moderation_date - report.report_date).num_days();
    if !(0..=MAX_LINK_LAG).contains(&lag) {
        return false;
    }
    match (&report.reporter_id, m.linked_reporters.is_empty()) {
        (Some(rid), false) => m.linked_reporters.iter().any(|l| l == rid),
        _ => true,
    }
}

/// Produces exactly one [`LinkedCase`] per moderated player with a linkable report.
///
/// Reports join moderations on `(player, offense)` and must precede the moderation
/// by at most [`MAX_LINK_LAG`] days. A moderation covering several reports takes
/// the earliest report as its report date, which is also its longest delay. Among
/// moderation rows sharing `(player, date, offense)` the smallest lag is kept. A
/// player with several moderations keeps the earliest one; if several offenses
/// were moderated that day, the longest delay wins. Output is sorted by player.
pub fn link_cases(raw: &RawTables) -> Vec<LinkedCase> {
    let mut reports_by_key: HashMap<(&PlayerId, OffenseType), Vec<&ReportEvent>> = HashMap::new();
    for r in &raw.reports {
        reports_by_key
            .entry((&r.player_id, r.offense_type))
            .or_default()
            .push(r);
    }

    // earliest linkable report per moderation row
    let mut per_event: BTreeMap<(&PlayerId, Day, OffenseType), Candidate> = BTreeMap::new();
    for (order, m) in raw.moderations.iter().enumerate() {
        let Some(reports) = reports_by_key.get(&(&m.player_id, m.offense_type)) else {
            continue;
        };
        let Some(first) = reports
            .iter()
            .filter(|r| report_links(r, m))
            .map(|r| r.report_date)
            .min()
        else {
            continue;
        };
        let cand = Candidate {
            order,
            moderation: m,
            report_date: first,
            lag: (m.moderation_date - first).num_days(),
        };
        let key = (&m.player_id, m.moderation_date, m.offense_type);
        match per_event.get(&key) {
            Some(prev) if prev.lag <= cand.lag => {}
            _ => {
                per_event.insert(key, cand);
            }
        }
    }

    let mut per_player: BTreeMap<&PlayerId, Candidate> = BTreeMap::new();
    for ((player, _, _), cand) in per_event {
        let replace = match per_player.get(player) {
            None => true,
            Some(prev) => {
                let a = (cand.moderation.moderation_date, -cand.lag, cand.moderation.offense_type, cand.order);
                let b = (prev.moderation.moderation_date, -prev.lag, prev.moderation.offense_type, prev.order);
                a < b
            }
        };
        if replace {
            per_player.insert(player, cand);
        }
    }

    let log = EventLog::new(raw);
    per_player
        .into_iter()
        .map(|(player, c)| {
            let m = c.moderation;
            let mut case = LinkedCase {
                player_id: player.clone(),
                report_date: c.report_date,
                moderation_date: m.moderation_date,
                lag: c.lag,
                offense_type: m.offense_type,
                actions: m.actions.clone(),
                severity: classify_severity(m.offense_type, &m.actions).ok(),
                covariates: None,
            };
            case.covariates = log.covariate_means(player, case.pre_window());
            case
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct LinkedCaseRow<'a> {
    player_id: &'a str,
    report_date: String,
    moderation_date: String,
    lag: i64,
    offense_type: &'static str,
    actions: String,
    severity: &'static str,
    covariates_complete: bool,
}

pub fn write_linked_cases(cases: &[LinkedCase], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for c in cases {
        w.serialize(LinkedCaseRow {
            player_id: c.player_id.as_str(),
            report_date: c.report_date.to_string(),
            moderation_date: c.moderation_date.to_string(),
            lag: c.lag,
            offense_type: c.offense_type.as_str(),
            actions: c.actions.joined(),
            severity: c.severity.map_or("Unclassifiable", Severity::as_str),
            covariates_complete: c.covariates.is_some(),
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ModerationAction;

    fn d(day: u32) -> Day {
        NaiveDate::from_ymd_opt(2023, 3, 1).unwrap() + Duration::days(i64::from(day))
    }

    fn report(p: &str, day: u32) -> ReportEvent {
        ReportEvent {
            player_id: PlayerId::new(p),
            report_date: d(day),
            offense_type: OffenseType::OffensiveTextChat,
            reporter_id: None,
        }
    }

    fn moderation(p: &str, day: u32) -> ModerationEvent {
        ModerationEvent {
            player_id: PlayerId::new(p),
            moderation_date: d(day),
            offense_type: OffenseType::OffensiveTextChat,
            actions: ActionSet::new(vec![
                ModerationAction::PenaltyNotice,
                ModerationAction::FeatureFlag,
            ])
            .unwrap(),
            linked_reporters: vec![],
        }
    }

    fn tables(reports: Vec<ReportEvent>, mods: Vec<ModerationEvent>) -> RawTables {
        RawTables::new(reports, mods, vec![], Window::new(d(0), d(60))).unwrap()
    }

    #[test]
    fn same_day_link_has_zero_lag() {
        let cases = link_cases(&tables(vec![report("a", 10)], vec![moderation("a", 10)]));
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].lag, 0);
        assert_eq!(cases[0].severity, Some(Severity::Stricter));
        assert!(cases[0].covariates.is_none());
    }

    #[test]
    fn lag_beyond_two_weeks_does_not_link() {
        assert!(link_cases(&tables(vec![report("a", 0)], vec![moderation("a", 20)])).is_empty());
        let at_bound = link_cases(&tables(vec![report("a", 0)], vec![moderation("a", 14)]));
        assert_eq!(at_bound[0].lag, 14);
    }

    #[test]
    fn earliest_report_defines_report_date() {
        let cases = link_cases(&tables(
            vec![report("a", 1), report("a", 4)],
            vec![moderation("a", 10)],
        ));
        assert_eq!(cases[0].report_date, d(1));
        assert_eq!(cases[0].lag, 9);
    }

    #[test]
    fn offense_must_match() {
        let mut r = report("a", 3);
        r.offense_type = OffenseType::OffensiveVoiceChat;
        assert!(link_cases(&tables(vec![r], vec![moderation("a", 3)])).is_empty());
    }

    #[test]
    fn first_moderation_per_player_wins() {
        let cases = link_cases(&tables(
            vec![report("a", 1), report("a", 20)],
            vec![moderation("a", 22), moderation("a", 5)],
        ));
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].moderation_date, d(5));
        assert_eq!(cases[0].lag, 4);
    }

    #[test]
    fn linked_reporters_restrict_join() {
        let mut early = report("a", 1);
        early.reporter_id = Some("x".into());
        let mut late = report("a", 4);
        late.reporter_id = Some("y".into());
        let mut m = moderation("a", 10);
        m.linked_reporters = vec!["y".into()];
        let cases = link_cases(&tables(vec![early, late], vec![m]));
        assert_eq!(cases[0].report_date, d(4));
    }

    #[test]
    fn voice_reports_before_start_are_dropped() {
        let mut v = report("a", 2);
        v.offense_type = OffenseType::OffensiveVoiceChat;
        let late = report("b", 50);
        let raw = tables(vec![v, report("c", 5), late], vec![]).filtered(Window::new(d(0), d(40)), d(10));
        assert_eq!(raw.reports.len(), 1);
        assert_eq!(raw.reports[0].player_id.as_str(), "c");
    }

    #[test]
    fn duplicate_match_days_rejected() {
        let rec = MatchDayRecord {
            player_id: PlayerId::new("a"),
            date: d(1),
            matches_played: 1,
            stats: Some(Covariates([1.0; 9])),
        };
        let err = RawTables::new(vec![], vec![], vec![rec.clone(), rec], Window::new(d(0), d(5)));
        assert!(err.is_err());
    }

    #[test]
    fn covariates_are_match_weighted() {
        let mk = |day, n, v: f64| MatchDayRecord {
            player_id: PlayerId::new("a"),
            date: d(day),
            matches_played: n,
            stats: Some(Covariates([v; 9])),
        };
        let raw = RawTables::new(
            vec![report("a", 10)],
            vec![moderation("a", 10)],
            vec![mk(3, 1, 10.0), mk(9, 3, 2.0), mk(10, 5, 100.0)],
            Window::new(d(0), d(30)),
        )
        .unwrap();
        let cases = link_cases(&raw);
        let cov = cases[0].covariates.unwrap();
        assert!((cov.get(0) - 4.0).abs() < 1e-12);
    }
}
