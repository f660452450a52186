use std::sync::OnceLock;

use modcausal::pipeline::{run_pipeline, strata, EffectRow, PipelineConfig, PipelineOutput};
use modcausal::report::{
    effect_cell, files, format_relative, render_csv, render_heterogeneity_csv, render_text, signed, write_outputs,
    DEGENERATE_CELL,
};
use modcausal::sim::{generate_world, SimConfig};
use modcausal::{Estimator, OffenseType, Outcome, RegressorSpec, SetupKind};

fn output() -> &'static PipelineOutput {
    static OUT: OnceLock<PipelineOutput> = OnceLock::new();
    OUT.get_or_init(|| {
        let sim = SimConfig {
            n_players: 2500,
            seed: 41,
            ..SimConfig::default()
        };
        let (raw, _) = generate_world(&sim).unwrap();
        let cfg = PipelineConfig {
            seed: 42,
            base: RegressorSpec::ridge(),
            effect: Some(RegressorSpec::ridge()),
            bootstrap_reps: 100,
            ..PipelineConfig::default()
        };
        run_pipeline::<f64>(&raw, &cfg, true).unwrap()
    })
}

#[test]
fn golden_relative_effect_format() {
    assert_eq!(
        format_relative(-70.33, (-71.25, -69.41), 0.95),
        "\u{2212}70.33% (95% CI: \u{2212}71.25%, \u{2212}69.41%)"
    );
    assert_eq!(format_relative(-50.0, (-60.0, -40.0), 0.9), "\u{2212}50.00% (90% CI: \u{2212}60.00%, \u{2212}40.00%)");
    assert_eq!(signed(-0.001, 2), "0.00");
    assert_eq!(signed(12.345, 1), "12.3");
}

#[test]
fn degenerate_rows_render_as_a_dash() {
    let row = EffectRow {
        outcome: Outcome::ReportRate,
        estimator: Estimator::Dr,
        n_treated: 1,
        n_control: 0,
        estimate: None,
        degenerate: Some("no control rows".into()),
    };
    assert_eq!(effect_cell(&row, 0.95), DEGENERATE_CELL);
    assert_eq!(DEGENERATE_CELL, "\u{2014} (degenerate)");
}

#[test]
fn every_design_lists_every_stratum() {
    let r = &output().report;
    let per_setup = strata();
    assert_eq!(per_setup.len(), 4 + 3 * 2);
    assert_eq!(r.strata.len(), SetupKind::ALL.len() * per_setup.len());
    for setup in SetupKind::ALL {
        let mine: Vec<_> = r.strata.iter().filter(|s| s.setup == setup).map(|s| s.stratum).collect();
        assert_eq!(mine, per_setup);
    }
    for s in &r.strata {
        let cheating = s.stratum.offense == Some(OffenseType::Cheating);
        assert!(!(cheating && s.stratum.severity.is_some()));
        assert_eq!(cheating, s.notes.iter().any(|n| n.contains("not applicable to cheating")), "{:?}", s.stratum);
        if s.degenerate.is_none() {
            assert_eq!(s.effects.len(), Outcome::ALL.len() * Estimator::ALL.len());
        }
    }
    assert!(!r.degenerate_only());
}

#[test]
fn csv_and_text_show_the_same_numbers() {
    let r = &output().report;
    let text = render_text(r);
    let csv = render_csv(r).unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let header = reader.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let mut checked = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        if &rec[col("status")] != "ok" {
            continue;
        }
        let m = |s: &str| s.replace('-', "\u{2212}");
        let line = format!(
            "{} | {} | {} | {}% (95% CI: {}%, {}%) | {} [{}, {}] | {} | {}",
            &rec[col("offense")],
            &rec[col("stratum")],
            &rec[col("estimator")],
            m(&rec[col("relative_pct")]),
            m(&rec[col("ci_low_pct")]),
            m(&rec[col("ci_high_pct")]),
            m(&rec[col("ate")]),
            m(&rec[col("ate_ci_low")]),
            m(&rec[col("ate_ci_high")]),
            &rec[col("n_treated")],
            &rec[col("n_control")],
        );
        assert!(text.contains(&line), "missing from text report: {line}");
        checked += 1;
    }
    assert!(checked > 20, "only {checked} rows compared");
}

#[test]
fn json_round_trip_reproduces_every_rendering() {
    let r = &output().report;
    let back = modcausal::pipeline::AnalysisReport::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(&back, r);
    assert_eq!(render_text(&back), render_text(r));
    assert_eq!(render_csv(&back).unwrap(), render_csv(r).unwrap());
    assert_eq!(render_heterogeneity_csv(&back).unwrap(), render_heterogeneity_csv(r).unwrap());
}

#[test]
fn output_directory_holds_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(output(), dir.path()).unwrap();
    for name in [
        files::REPORT_JSON,
        files::REPORT_TXT,
        files::REPORT_CSV,
        files::BALANCE_CSV,
        files::HETEROGENEITY_CSV,
        files::CATE_PAIRS_CSV,
    ] {
        let p = dir.path().join(name);
        assert!(p.is_file(), "{name}");
        assert!(written.contains(&p));
    }
    assert!(dir.path().join(files::COHORT_DIR).is_dir());
    let txt = std::fs::read_to_string(dir.path().join(files::REPORT_TXT)).unwrap();
    assert_eq!(txt, render_text(&output().report));
}
