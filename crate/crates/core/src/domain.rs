//! Players, report and moderation events, match statistics, and the severity
//! taxonomy that groups moderation action sets into milder and stricter tiers.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Calendar day without timezone; every window in the pipeline is whole days.
pub type Day = NaiveDate;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub String);

impl PlayerId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn normalize_token(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, ' ' | '_' | '-'))
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OffenseType {
    Cheating,
    OffensiveTextChat,
    OffensiveUserID,
    OffensiveVoiceChat,
}

impl OffenseType {
    pub const ALL: [OffenseType; 4] = [
        OffenseType::Cheating,
        OffenseType::OffensiveTextChat,
        OffenseType::OffensiveUserID,
        OffenseType::OffensiveVoiceChat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OffenseType::Cheating => "Cheating",
            OffenseType::OffensiveTextChat => "OffensiveTextChat",
            OffenseType::OffensiveUserID => "OffensiveUserID",
            OffenseType::OffensiveVoiceChat => "OffensiveVoiceChat",
        }
    }
}

impl fmt::Display for OffenseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OffenseType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match normalize_token(s).as_str() {
            "cheating" | "cheater" => Ok(OffenseType::Cheating),
            "offensivetextchat" => Ok(OffenseType::OffensiveTextChat),
            "offensiveuserid" | "offensiveuseridentification" => Ok(OffenseType::OffensiveUserID),
            "offensivevoicechat" => Ok(OffenseType::OffensiveVoiceChat),
            _ => Err(Error::invalid(format!("unknown offense type {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModerationAction {
    RemoveFromLeaderboard,
    WarningNotice,
    PenaltyNotice,
    RenameUser,
    LimitAllowedRenames,
    UpdateClantag,
    RemoveClantag,
    DeleteProfile,
    FeatureFlag,
    RankingService,
}

impl ModerationAction {
    pub const ALL: [ModerationAction; 10] = [
        ModerationAction::RemoveFromLeaderboard,
        ModerationAction::WarningNotice,
        ModerationAction::PenaltyNotice,
        ModerationAction::RenameUser,
        ModerationAction::LimitAllowedRenames,
        ModerationAction::UpdateClantag,
        ModerationAction::RemoveClantag,
        ModerationAction::DeleteProfile,
        ModerationAction::FeatureFlag,
        ModerationAction::RankingService,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModerationAction::RemoveFromLeaderboard => "RemoveFromLeaderboard",
            ModerationAction::WarningNotice => "WarningNotice",
            ModerationAction::PenaltyNotice => "PenaltyNotice",
            ModerationAction::RenameUser => "RenameUser",
            ModerationAction::LimitAllowedRenames => "LimitAllowedRenames",
            ModerationAction::UpdateClantag => "UpdateClantag",
            ModerationAction::RemoveClantag => "RemoveClantag",
            ModerationAction::DeleteProfile => "DeleteProfile",
            ModerationAction::FeatureFlag => "FeatureFlag",
            ModerationAction::RankingService => "RankingService",
        }
    }
}

impl fmt::Display for ModerationAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModerationAction {
    type Err = Error;

    /// Accepts the canonical CamelCase names as well as the spaced labels used
    /// in moderation exports ("Remove From Leaderboards", "Feature Flag", ...).
    fn from_str(s: &str) -> Result<Self> {
        let norm = normalize_token(s);
        let action = match norm.as_str() {
            "removefromleaderboard" | "removefromleaderboards" => {
                ModerationAction::RemoveFromLeaderboard
            }
            "warningnotice" => ModerationAction::WarningNotice,
            "penaltynotice" => ModerationAction::PenaltyNotice,
            "renameuser" => ModerationAction::RenameUser,
            "limitallowedrenames" => ModerationAction::LimitAllowedRenames,
            "updateclantag" => ModerationAction::UpdateClantag,
            "removeclantag" => ModerationAction::RemoveClantag,
            "deleteprofile" => ModerationAction::DeleteProfile,
            "featureflag" => ModerationAction::FeatureFlag,
            "rankingservice" => ModerationAction::RankingService,
            _ => return Err(Error::invalid(format!("unknown moderation action {s:?}"))),
        };
        Ok(action)
    }
}

/// Non-empty multiset of moderation actions, kept sorted.
///
/// Duplicates are meaningful: a voice-chat escalation carries the feature flag twice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ModerationAction>", into = "Vec<ModerationAction>")]
pub struct ActionSet(Vec<ModerationAction>);

impl ActionSet {
    pub fn new(mut actions: Vec<ModerationAction>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::invalid("moderation event with an empty action set"));
        }
        actions.sort();
        Ok(Self(actions))
    }

    pub fn actions(&self) -> &[ModerationAction] {
        &self.0
    }

    pub fn count(&self, action: ModerationAction) -> usize {
        self.0.iter().filter(|&&a| a == action).count()
    }

    /// Parses a semicolon-joined list, e.g. `"PenaltyNotice;FeatureFlag"`.
    pub fn parse_joined(s: &str) -> Result<Self> {
        let actions = s
            .split(';')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(actions)
    }

    pub fn joined(&self) -> String {
        self.0
            .iter()
            .map(|a| a.as_str())
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl TryFrom<Vec<ModerationAction>> for ActionSet {
    type Error = Error;

    fn try_from(v: Vec<ModerationAction>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ActionSet> for Vec<ModerationAction> {
    fn from(s: ActionSet) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Milder,
    Stricter,
    NotApplicable,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Milder => "Milder",
            Severity::Stricter => "Stricter",
            Severity::NotApplicable => "NotApplicable",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match normalize_token(s).as_str() {
            "milder" => Ok(Severity::Milder),
            "stricter" => Ok(Severity::Stricter),
            "notapplicable" | "n/a" | "na" => Ok(Severity::NotApplicable),
            _ => Err(Error::invalid(format!("unknown severity {s:?}"))),
        }
    }
}

/// Severity rows per offense: each entry is an exact action multiset.
fn severity_rows(offense: OffenseType) -> &'static [(Severity, &'static [ModerationAction])] {
    use ModerationAction::*;
    match offense {
        OffenseType::Cheating => &[],
        OffenseType::OffensiveTextChat => &[
            (Severity::Milder, &[WarningNotice, FeatureFlag]),
            (Severity::Stricter, &[PenaltyNotice, FeatureFlag]),
        ],
        OffenseType::OffensiveUserID => &[
            (
                Severity::Milder,
                &[RenameUser, LimitAllowedRenames, UpdateClantag, PenaltyNotice],
            ),
            (
                Severity::Stricter,
                &[
                    RenameUser,
                    LimitAllowedRenames,
                    UpdateClantag,
                    PenaltyNotice,
                    FeatureFlag,
                ],
            ),
        ],
        OffenseType::OffensiveVoiceChat => &[
            (Severity::Milder, &[FeatureFlag]),
            (Severity::Stricter, &[FeatureFlag, FeatureFlag, PenaltyNotice]),
        ],
    }
}

/// Canonical action multiset for an offense at a severity tier. Cheating has a
/// single tier, returned for [`Severity::NotApplicable`].
pub fn action_set_for(offense: OffenseType, severity: Severity) -> Option<ActionSet> {
    use ModerationAction::*;
    if offense == OffenseType::Cheating {
        return (severity == Severity::NotApplicable)
            .then(|| ActionSet::new(vec![RemoveFromLeaderboard, RankingService]).expect("non-empty"));
    }
    severity_rows(offense)
        .iter()
        .find(|(s, _)| *s == severity)
        .map(|(_, row)| ActionSet::new(row.to_vec()).expect("non-empty"))
}

/// Maps an offense and the action multiset applied for it to a severity tier.
///
/// Cheating is always [`Severity::NotApplicable`]. For other offenses the
/// multiset must equal one of the tabulated rows exactly; anything else is
/// [`Error::UnclassifiableActionSet`].
pub fn classify_severity(offense: OffenseType, actions: &ActionSet) -> Result<Severity> {
    if offense == OffenseType::Cheating {
        return Ok(Severity::NotApplicable);
    }
    for (severity, row) in severity_rows(offense) {
        let mut row = row.to_vec();
        row.sort();
        if row.as_slice() == actions.actions() {
            return Ok(*severity);
        }
    }
    Err(Error::UnclassifiableActionSet {
        offense,
        actions: actions.actions().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportEvent {
    pub player_id: PlayerId,
    pub report_date: Day,
    pub offense_type: OffenseType,
    pub reporter_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModerationEvent {
    pub player_id: PlayerId,
    pub moderation_date: Day,
    pub offense_type: OffenseType,
    pub actions: ActionSet,
    /// Reporter ids the moderation was issued for; empty when not recorded.
    pub linked_reporters: Vec<String>,
}

/// Names of the nine pre-report covariates, in feature-column order.
pub const COVARIATE_NAMES: [&str; 9] = [
    "match_score",
    "assists",
    "eliminations",
    "deaths",
    "distance_traveled",
    "move_speed",
    "damage_done",
    "damage_taken",
    "accuracy",
];

pub const N_COVARIATES: usize = COVARIATE_NAMES.len();

pub mod covariate {
    pub const MATCH_SCORE: usize = 0;
    pub const ASSISTS: usize = 1;
    pub const ELIMINATIONS: usize = 2;
    pub const DEATHS: usize = 3;
    pub const DISTANCE: usize = 4;
    pub const MOVE_SPEED: usize = 5;
    pub const DAMAGE_DONE: usize = 6;
    pub const DAMAGE_TAKEN: usize = 7;
    pub const ACCURACY: usize = 8;
}

/// Per-match performance values, either one day's per-match averages or a
/// player's mean over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covariates(pub [f64; N_COVARIATES]);

impl Covariates {
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn as_array(&self) -> &[f64; N_COVARIATES] {
        &self.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, &v) in COVARIATE_NAMES.iter().zip(&self.0) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be a non-negative real, got {v}")));
            }
        }
        let acc = self.0[covariate::ACCURACY];
        if acc > 100.0 {
            return Err(Error::invalid(format!("accuracy {acc} outside [0, 100]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchDayRecord {
    pub player_id: PlayerId,
    pub date: Day,
    pub matches_played: u32,
    /// Per-match averages for the day; `None` exactly when no match was played.
    pub stats: Option<Covariates>,
}

impl MatchDayRecord {
    pub fn validate(&self) -> Result<()> {
        match (&self.stats, self.matches_played) {
            (Some(_), 0) => Err(Error::invalid(format!(
                "{} on {}: aggregates present with zero matches",
                self.player_id, self.date
            ))),
            (None, n) if n > 0 => Err(Error::invalid(format!(
                "{} on {}: {n} matches without aggregates",
                self.player_id, self.date
            ))),
            (Some(s), _) => s.validate(),
            (None, _) => Ok(()),
        }
    }
}
