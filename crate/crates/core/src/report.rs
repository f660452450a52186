//! Text and CSV renderings of an [`AnalysisReport`], plus writers for the
//! output directory. Rendering only formats; every value comes from the report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cohort::{Outcome, SetupKind, Stratum};
use crate::error::{Error, Result};
use crate::pipeline::{AnalysisReport, EffectRow, EffectSummary, PipelineOutput, StratumReport};

const MINUS: char = '\u{2212}';
pub const DEGENERATE_CELL: &str = "\u{2014} (degenerate)";

/// Fixed-point with a typographic minus; values that round to zero lose their sign.
pub fn signed(v: f64, decimals: usize) -> String {
    let body = format!("{:.*}", decimals, v.abs());
    if v < 0.0 && body.bytes().any(|b| (b'1'..=b'9').contains(&b)) {
        format!("{MINUS}{body}")
    } else {
        body
    }
}

/// Plain fixed-point for CSV, rounded exactly like [`signed`].
fn plain(v: f64, decimals: usize) -> String {
    signed(v, decimals).replace(MINUS, "-")
}

fn level_label(level: f64) -> String {
    let pct = level * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{pct:.0}%")
    } else {
        format!("{pct}%")
    }
}

/// `−50.00% (95% CI: −60.00%, −40.00%)` from percentages.
pub fn format_relative(relative: f64, ci: (f64, f64), level: f64) -> String {
    format!(
        "{}% ({} CI: {}%, {}%)",
        signed(relative, 2),
        level_label(level),
        signed(ci.0, 2),
        signed(ci.1, 2)
    )
}

pub fn effect_cell(row: &EffectRow, level: f64) -> String {
    match &row.estimate {
        None => DEGENERATE_CELL.to_string(),
        Some(EffectSummary {
            relative: Some(r),
            relative_ci: Some(ci),
            ..
        }) => format_relative(*r, *ci, level),
        Some(_) => "n/a (zero baseline)".to_string(),
    }
}

fn ate_cell(row: &EffectRow) -> String {
    match &row.estimate {
        None => "\u{2014}".to_string(),
        Some(e) => format!("{} [{}, {}]", signed(e.ate, 4), signed(e.ci_low, 4), signed(e.ci_high, 4)),
    }
}

fn offense_label(s: &Stratum) -> &'static str {
    s.offense.map_or("all", |o| o.as_str())
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(String::new, |v| plain(v, decimals))
}

fn opt_text(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| signed(v, decimals))
}

fn strata_of(report: &AnalysisReport, setup: SetupKind) -> impl Iterator<Item = &StratumReport> {
    report.strata.iter().filter(move |s| s.setup == setup)
}

/// Human-readable report.
pub fn render_text(report: &AnalysisReport) -> String {
    let cfg = &report.config;
    let level = cfg.level;
    let mut out = String::new();
    let _ = writeln!(out, "Moderation effect report");
    let _ = writeln!(out, "seed: {}", cfg.seed);
    let _ = writeln!(
        out,
        "learners: base {}, effect {}, bootstrap {} replicates at {}",
        cfg.base.name(),
        cfg.effect.map_or("design default", |e| e.name()),
        cfg.bootstrap_reps,
        level_label(level)
    );
    let i = &report.input;
    let _ = writeln!(
        out,
        "input: {} reports, {} moderations, {} match days, {} linked cases, coverage {}..{}",
        i.n_reports, i.n_moderations, i.n_match_days, i.n_linked_cases, i.coverage.start, i.coverage.end
    );

    for &setup in &cfg.setups {
        for &outcome in &cfg.outcomes {
            let _ = writeln!(out, "\n== {} / {} ==", setup.as_str(), outcome.as_str());
            let _ = writeln!(
                out,
                "offense | stratum | estimator | relative effect | ATE [CI] | n_treated | n_control"
            );
            for s in strata_of(report, setup) {
                for row in s.effects.iter().filter(|r| r.outcome == outcome) {
                    let _ = writeln!(
                        out,
                        "{} | {} | {} | {} | {} | {} | {}",
                        offense_label(&s.stratum),
                        s.stratum.severity_label(),
                        row.estimator.as_str(),
                        effect_cell(row, level),
                        ate_cell(row),
                        row.n_treated,
                        row.n_control
                    );
                }
            }
        }

        let _ = writeln!(out, "\n== {} / cohorts ==", setup.as_str());
        for s in strata_of(report, setup) {
            let excl: Vec<String> = s
                .exclusions
                .iter()
                .chain(&s.outcome_exclusions)
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let _ = write!(
                out,
                "{} | {} | treated {} | control {} | excluded: {}",
                offense_label(&s.stratum),
                s.stratum.severity_label(),
                s.n_treated,
                s.n_control,
                if excl.is_empty() { "none".to_string() } else { excl.join(", ") }
            );
            if let Some(d) = &s.degenerate {
                let _ = write!(out, " | degenerate: {d}");
            }
            for n in &s.notes {
                let _ = write!(out, " | note: {n}");
            }
            let _ = writeln!(out);
        }

        let _ = writeln!(out, "\n== {} / balance (mean |SMD|) ==", setup.as_str());
        for s in strata_of(report, setup) {
            if let Some(b) = &s.balance {
                let _ = writeln!(
                    out,
                    "{} | {} | k {} | pairs {} | before {} | after {}",
                    offense_label(&s.stratum),
                    s.stratum.severity_label(),
                    b.k,
                    b.n_pairs,
                    opt_text(b.mean_abs_smd_before, 4),
                    opt_text(b.mean_abs_smd_after, 4)
                );
            }
        }

        let _ = writeln!(out, "\n== {} / heterogeneity (Pearson r with CATE) ==", setup.as_str());
        for s in strata_of(report, setup) {
            for h in &s.heterogeneity {
                let _ = writeln!(
                    out,
                    "{} | {} | {} | {} | {} | r {} | n {} | undefined {}",
                    offense_label(&s.stratum),
                    s.stratum.severity_label(),
                    h.outcome.as_str(),
                    h.estimator.as_str(),
                    h.indicator,
                    opt_text(h.r, 4),
                    h.n_used,
                    h.n_undefined
                );
            }
        }
    }
    out
}

fn csv_string<F>(header: &[&str], fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let run = || -> csv::Result<Vec<u8>> {
        w.write_record(header)?;
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error().into())
    };
    let bytes = run().map_err(|e| Error::invalid(format!("csv rendering failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

/// Effect table with the same rounding as the text report.
pub fn render_csv(report: &AnalysisReport) -> Result<String> {
    csv_string(
        &[
            "setup",
            "outcome",
            "offense",
            "stratum",
            "estimator",
            "relative_pct",
            "ci_low_pct",
            "ci_high_pct",
            "ate",
            "ate_ci_low",
            "ate_ci_high",
            "n_treated",
            "n_control",
            "status",
        ],
        |w| {
            for &setup in &report.config.setups {
                for &outcome in &report.config.outcomes {
                    for s in strata_of(report, setup) {
                        for row in s.effects.iter().filter(|r| r.outcome == outcome) {
                            write_effect_row(w, s, outcome, row)?;
                        }
                    }
                }
            }
            Ok(())
        },
    )
}

fn write_effect_row(
    w: &mut csv::Writer<Vec<u8>>,
    s: &StratumReport,
    outcome: Outcome,
    row: &EffectRow,
) -> csv::Result<()> {
    let e = row.estimate.as_ref();
    let rel = e.and_then(|e| e.relative);
    let rel_ci = e.and_then(|e| e.relative_ci);
    let status = match (&row.degenerate, rel) {
        (Some(d), _) => format!("degenerate: {d}"),
        (None, None) => "zero baseline".to_string(),
        (None, Some(_)) => "ok".to_string(),
    };
    w.write_record([
        s.setup.as_str().to_string(),
        outcome.as_str().to_string(),
        offense_label(&s.stratum).to_string(),
        s.stratum.severity_label().to_string(),
        row.estimator.as_str().to_string(),
        opt(rel, 2),
        opt(rel_ci.map(|c| c.0), 2),
        opt(rel_ci.map(|c| c.1), 2),
        opt(e.map(|e| e.ate), 4),
        opt(e.map(|e| e.ci_low), 4),
        opt(e.map(|e| e.ci_high), 4),
        row.n_treated.to_string(),
        row.n_control.to_string(),
        status,
    ])
}

pub fn render_balance_csv(report: &AnalysisReport) -> Result<String> {
    csv_string(
        &[
            "setup",
            "offense",
            "stratum",
            "feature",
            "mean_treated",
            "mean_control",
            "mean_matched_control",
            "smd_before",
            "smd_after",
        ],
        |w| {
            for s in &report.strata {
                let Some(b) = &s.balance else { continue };
                for f in &b.features {
                    w.write_record([
                        s.setup.as_str().to_string(),
                        offense_label(&s.stratum).to_string(),
                        s.stratum.severity_label().to_string(),
                        f.feature.clone(),
                        plain(f.mean_treated, 4),
                        plain(f.mean_control, 4),
                        plain(f.mean_matched_control, 4),
                        opt(f.smd_before, 4),
                        opt(f.smd_after, 4),
                    ])?;
                }
            }
            Ok(())
        },
    )
}

pub fn render_heterogeneity_csv(report: &AnalysisReport) -> Result<String> {
    csv_string(
        &[
            "setup",
            "offense",
            "stratum",
            "outcome",
            "estimator",
            "indicator",
            "r",
            "n_used",
            "n_undefined",
        ],
        |w| {
            for s in &report.strata {
                for h in &s.heterogeneity {
                    w.write_record([
                        s.setup.as_str().to_string(),
                        offense_label(&s.stratum).to_string(),
                        s.stratum.severity_label().to_string(),
                        h.outcome.as_str().to_string(),
                        h.estimator.as_str().to_string(),
                        h.indicator.clone(),
                        opt(h.r, 4),
                        h.n_used.to_string(),
                        h.n_undefined.to_string(),
                    ])?;
                }
            }
            Ok(())
        },
    )
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// File names written by [`write_outputs`], relative to the output directory.
pub mod files {
    pub const REPORT_JSON: &str = "report.json";
    pub const REPORT_TXT: &str = "report.txt";
    pub const REPORT_CSV: &str = "report.csv";
    pub const BALANCE_CSV: &str = "balance.csv";
    pub const HETEROGENEITY_CSV: &str = "heterogeneity.csv";
    pub const CATE_PAIRS_CSV: &str = "heterogeneity_pairs.csv";
    pub const COHORT_DIR: &str = "cohorts";
}

/// Writes the report in all formats, the cohort tables and per-player CATE pairs.
pub fn write_outputs(output: &PipelineOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    let cohort_dir = dir.join(files::COHORT_DIR);
    std::fs::create_dir_all(&cohort_dir).map_err(io(&cohort_dir))?;
    let r = &output.report;
    let mut written = Vec::new();
    for (name, body) in [
        (files::REPORT_JSON, r.to_json()?),
        (files::REPORT_TXT, render_text(r)),
        (files::REPORT_CSV, render_csv(r)?),
        (files::BALANCE_CSV, render_balance_csv(r)?),
        (files::HETEROGENEITY_CSV, render_heterogeneity_csv(r)?),
        (files::CATE_PAIRS_CSV, render_pairs_csv(output)?),
    ] {
        let p = dir.join(name);
        write_file(&p, &body)?;
        written.push(p);
    }
    for c in &output.cohorts {
        let name = format!(
            "{}_{}_{}.csv",
            c.setup.kind.as_str(),
            offense_label(&c.stratum),
            c.stratum.severity_label()
        );
        let p = cohort_dir.join(name);
        c.write_csv(&p)?;
        written.push(p);
    }
    Ok(written)
}

fn render_pairs_csv(output: &PipelineOutput) -> Result<String> {
    csv_string(
        &["setup", "offense", "stratum", "outcome", "player_id", "cate", "ams", "dsi", "kd"],
        |w| {
            for p in &output.cate_pairs {
                w.write_record([
                    p.setup.as_str().to_string(),
                    offense_label(&p.stratum).to_string(),
                    p.stratum.severity_label().to_string(),
                    p.outcome.as_str().to_string(),
                    p.player_id.clone(),
                    format!("{:.6}", p.cate),
                    format!("{:.4}", p.ams),
                    opt(p.dsi, 6),
                    opt(p.kd, 6),
                ])?;
            }
            Ok(())
        },
    )
}
