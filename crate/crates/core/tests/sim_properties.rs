use std::collections::BTreeMap;

use modcausal::cohort::{build_cohort, Outcome, StudySetup};
use modcausal::domain::covariate;
use modcausal::meta::{dr_learner_ate, estimate_propensity};
use modcausal::sim::{generate_world, true_effects, SimConfig};
use modcausal::validation::{confounded_world, null_world, sample_world};
use modcausal::{link_cases, load_event_log, EventLog, EventPaths, MetaConfig, OffenseType, SetupKind, Stratum};

fn small(n: usize, seed: u64) -> SimConfig {
    SimConfig {
        n_players: n,
        seed,
        ..SimConfig::default()
    }
}

#[test]
fn offense_mix_defaults_follow_the_reported_breakdown() {
    let w = SimConfig::default().offense_weights;
    let share = |o: OffenseType| w[OffenseType::ALL.iter().position(|&x| x == o).unwrap()];
    assert_eq!(share(OffenseType::OffensiveVoiceChat), 53.5);
    assert_eq!(share(OffenseType::OffensiveTextChat), 31.6);
    assert_eq!(share(OffenseType::OffensiveUserID), 8.8);
    assert_eq!(share(OffenseType::Cheating), 6.2);
}

#[test]
fn planted_lags_and_offenses_follow_their_distributions() {
    let cfg = small(6000, 21);
    let (_, truth) = generate_world(&cfg).unwrap();
    let n = truth.players.len() as f64;

    let total: f64 = cfg.lag_weights.iter().sum();
    let mut counts = vec![0.0; cfg.lag_weights.len()];
    for t in truth.players.values() {
        counts[t.lag as usize] += 1.0;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&cfg.lag_weights)
        .map(|(o, w)| {
            let e = n * w / total;
            (o - e).powi(2) / e
        })
        .sum();
    // upper 0.1% point of chi-square with 14 degrees of freedom
    assert!(chi2 < 36.12, "lag chi-square {chi2}");

    let wsum: f64 = cfg.offense_weights.iter().sum();
    for (k, o) in OffenseType::ALL.into_iter().enumerate() {
        let p = cfg.offense_weights[k] / wsum;
        let got = truth.players.values().filter(|t| t.offense == o).count() as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        assert!((got - p).abs() < 4.0 * se, "{o:?}: {got} vs {p}");
    }
}

#[test]
fn same_seed_writes_identical_files() {
    let cfg = small(100, 5);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let (raw, _) = generate_world(&cfg).unwrap();
        modcausal::ingest::write_event_log(&raw, &EventPaths::in_dir(d.path())).unwrap();
    }
    for name in ["reports.csv", "moderations.csv", "matches.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert!(!a.is_empty());
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn event_log_survives_a_csv_round_trip() {
    let cfg = small(250, 6);
    let (raw, _) = generate_world(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = EventPaths::in_dir(dir.path());
    modcausal::ingest::write_event_log(&raw, &paths).unwrap();
    let back = load_event_log(&paths, cfg.study_window(), cfg.voice_start).unwrap();
    assert_eq!(back, raw);

    let setup = StudySetup::for_kind(SetupKind::ModerationVsNone);
    let a = build_cohort(&link_cases(&raw), &setup, &EventLog::new(&raw), Stratum::all()).unwrap();
    let b = build_cohort(&link_cases(&back), &setup, &EventLog::new(&back), Stratum::all()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn constant_effect_is_returned_exactly() {
    let mut cfg = small(300, 7);
    cfg.report.tau_intercept = -0.25;
    cfg.report.tau_kd_slope = 0.0;
    let w = sample_world(&cfg, Outcome::ReportRate).unwrap();
    assert_eq!(w.true_ate, -0.25);
    assert!(w.true_cate.iter().all(|&t| t == -0.25));
    assert_eq!(w.truth.true_ate_report, -0.25);
}

#[test]
fn covariate_driven_effect_tracks_the_covariate() {
    let mut cfg = small(2000, 8);
    cfg.report.tau_intercept = 0.0;
    cfg.report.tau_kd_slope = 0.0;
    cfg.report.tau_coefs[covariate::MATCH_SCORE] = 1.0;
    let w = sample_world(&cfg, Outcome::ReportRate).unwrap();
    // planted values are standardized, so they center on zero with unit spread
    let n = w.true_cate.len() as f64;
    let m = w.true_cate.iter().sum::<f64>() / n;
    let sd = (w.true_cate.iter().map(|t| (t - m).powi(2)).sum::<f64>() / n).sqrt();
    assert!(m.abs() < 0.1 && (sd - 1.0).abs() < 0.1, "mean {m} sd {sd}");

    // and line up with the observed pre-window match score
    let score: Vec<f64> = w.data.row_index.iter().map(|&i| w.cohort.rows[i].covariates.get(covariate::MATCH_SCORE)).collect();
    let ms = score.iter().sum::<f64>() / n;
    let cov: f64 = score.iter().zip(&w.true_cate).map(|(s, t)| (s - ms) * (t - m)).sum::<f64>() / n;
    let ss = (score.iter().map(|s| (s - ms).powi(2)).sum::<f64>() / n).sqrt();
    assert!(cov / (ss * sd) > 0.9);
}

#[test]
fn true_effects_reject_players_from_another_world() {
    let a = sample_world(&small(200, 9), Outcome::ReportRate).unwrap();
    let mut other = small(200, 10);
    other.n_players = 50;
    let (_, truth) = generate_world(&other).unwrap();
    let mut rows = a.cohort.rows.clone();
    rows[0].player_id = modcausal::PlayerId::new("not-a-player");
    assert!(true_effects(&truth, &rows, Outcome::ReportRate).is_err());
    assert!(true_effects(&a.truth, &rows, Outcome::ReportRate).is_err());
    assert!(true_effects(&a.truth, &[], Outcome::ReportRate).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = small(10, 0);
    cfg.report.noise_sd = -1.0;
    assert!(cfg.validate().is_err());
    let mut cfg = small(10, 0);
    cfg.offense_weights = [0.0; 4];
    assert!(cfg.validate().is_err());
    let mut cfg = small(10, 0);
    cfg.lag_weights.pop();
    assert!(cfg.validate().is_err());
}

#[test]
fn null_world_gives_a_null_dr_estimate() {
    let w = sample_world(&null_world(10_000, 31), Outcome::ReportRate).unwrap();
    let cfg = MetaConfig::for_setup(SetupKind::ModerationVsNone);
    let prop = estimate_propensity(&w.data, &cfg.propensity, cfg.clip).unwrap();
    let ate = dr_learner_ate(&w.data, &cfg, &prop, 1).unwrap();
    assert!(ate.abs() < 0.03, "ate {ate}");
}

#[test]
fn dr_corrects_what_a_naive_contrast_gets_wrong() {
    let w = sample_world(&confounded_world(20_000, 32), Outcome::ReportRate).unwrap();
    let arm_mean = |t: bool| {
        let v: Vec<f64> = (0..w.data.len()).filter(|&i| w.data.treated[i] == t).map(|i| w.data.y[i]).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let naive = arm_mean(true) - arm_mean(false);
    let cfg = MetaConfig::for_setup(SetupKind::ModerationVsNone);
    let prop = estimate_propensity(&w.data, &cfg.propensity, cfg.clip).unwrap();
    let dr = dr_learner_ate(&w.data, &cfg, &prop, 2).unwrap();
    assert!((naive - w.true_ate).abs() > 0.05, "naive {naive} truth {}", w.true_ate);
    assert!((dr - w.true_ate).abs() < 0.03, "dr {dr} truth {}", w.true_ate);
}

#[test]
fn worlds_differ_across_seeds_but_not_within() {
    let ids = |seed| {
        let (raw, truth) = generate_world(&small(150, seed)).unwrap();
        let lags: BTreeMap<_, _> = truth.players.iter().map(|(p, t)| (p.clone(), t.lag)).collect();
        (raw.reports.len(), lags)
    };
    assert_eq!(ids(3), ids(3));
    assert_ne!(ids(3), ids(4));
}
