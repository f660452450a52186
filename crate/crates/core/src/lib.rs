//! Causal estimation of moderation effects on player behavior from report,
//! moderation and match logs.
//!
//! The numerical core is generic over the floating-point type through
//! [`Scalar`]; the aliases at the bottom of this file fix it to `f64` or `f32`.

pub mod cohort;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod ingest;
pub mod learners;
pub mod linalg;
pub mod meta;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod stats;
pub mod validation;

pub use cohort::{build_cohort, CohortRow, CohortTable, Outcome, SetupKind, Stratum, StudySetup};
pub use domain::{
    classify_severity, ActionSet, Covariates, MatchDayRecord, ModerationAction, ModerationEvent, OffenseType,
    PlayerId, ReportEvent, Severity,
};
pub use error::{Error, Result};
pub use ingest::{link_cases, load_event_log, EventLog, EventPaths, LinkedCase, RawTables, Window};
pub use learners::{Regressor, RegressorSpec};
pub use meta::{BootstrapConfig, CausalData, EffectEstimate, Estimator, MetaConfig, PropensityModel};
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type CausalData64 = CausalData<f64>;
pub type CausalData32 = CausalData<f32>;
pub type EffectEstimate64 = EffectEstimate<f64>;
pub type EffectEstimate32 = EffectEstimate<f32>;
pub type PropensityModel64 = PropensityModel<f64>;
pub type PropensityModel32 = PropensityModel<f32>;
