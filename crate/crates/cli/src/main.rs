use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use modcausal::ingest::{default_study_window, default_voice_start, write_event_log, write_linked_cases};
use modcausal::pipeline::{run_pipeline, AnalysisReport, PipelineConfig};
use modcausal::report::{self, files};
use modcausal::sim::{generate_world, SimConfig};
use modcausal::validation::{self, Scale};
use modcausal::{link_cases, load_event_log, Error, EventPaths, RawTables, Window};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser)]
#[command(name = "modcausal", version, about = "Causal effects of moderation on player behavior")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic event log with known effects.
    Simulate(SimulateArgs),
    /// Validate an event log and write the linked report-to-moderation cases.
    Ingest(IngestArgs),
    /// Run the full analysis and write reports.
    Analyze(AnalyzeArgs),
    /// Re-render a saved report.json.
    Report(ReportArgs),
    /// Run the oracle validation suite.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML simulation config; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of players in the config.
    #[arg(long)]
    players: Option<usize>,
}

#[derive(Args, Clone)]
struct WindowArgs {
    /// First day of the study range (YYYY-MM-DD).
    #[arg(long)]
    start: Option<NaiveDate>,
    /// Last day of the study range.
    #[arg(long)]
    end: Option<NaiveDate>,
    /// First day voice-chat reports were accepted.
    #[arg(long)]
    voice_start: Option<NaiveDate>,
}

impl WindowArgs {
    fn resolve(&self) -> (Window, NaiveDate) {
        let d = default_study_window();
        (
            Window::new(self.start.unwrap_or(d.start), self.end.unwrap_or(d.end)),
            self.voice_start.unwrap_or_else(default_voice_start),
        )
    }
}

#[derive(Args)]
struct IngestArgs {
    /// Directory holding reports.csv, moderations.csv and matches.csv.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Learner {
    Gbt,
    Linear,
}

impl Learner {
    fn spec(self) -> modcausal::RegressorSpec {
        match self {
            Learner::Gbt => modcausal::RegressorSpec::gbt(),
            Learner::Linear => modcausal::RegressorSpec::ridge(),
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Event log directory; mutually exclusive with --simulate.
    #[arg(long, required_unless_present = "simulate", conflicts_with = "simulate")]
    input: Option<PathBuf>,
    /// Analyze a freshly simulated world instead of files.
    #[arg(long)]
    simulate: bool,
    /// Simulation config used with --simulate.
    #[arg(long, requires = "simulate")]
    sim_config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Master seed for every random choice in the analysis.
    #[arg(long, required = true)]
    seed: u64,
    /// TOML analysis config; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    /// Outcome learner for all estimators.
    #[arg(long, value_enum)]
    learner: Option<Learner>,
    /// Second-stage learner of the R and DR learners.
    #[arg(long, value_enum)]
    effect_learner: Option<Learner>,
    /// Comma-separated subset of t,s,x,r,dr.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<modcausal::Estimator>>,
    /// Run on one thread. Results are identical either way.
    #[arg(long)]
    serial: bool,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Balance,
    Heterogeneity,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json, or the directory containing it.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct SelftestArgs {
    /// Fewer seeds and worlds; a smoke run, not a verdict.
    #[arg(long)]
    quick: bool,
    /// Run only these criteria (repeatable).
    #[arg(long)]
    criterion: Vec<u8>,
}

enum Failure {
    Usage(String),
    Data(String),
    Degenerate,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.players {
        cfg.n_players = n;
    }
    cfg.validate()?;
    let (raw, truth) = generate_world(&cfg)?;
    std::fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    write_event_log(&raw, &EventPaths::in_dir(&args.out))?;
    let truth_path = args.out.join("truth.json");
    let json = serde_json::to_string_pretty(&truth).map_err(|e| Failure::Data(e.to_string()))?;
    std::fs::write(&truth_path, json).map_err(io_err(&truth_path))?;
    let cfg_path = args.out.join("sim_config.toml");
    std::fs::write(&cfg_path, cfg.to_toml_string()?).map_err(io_err(&cfg_path))?;
    println!(
        "simulated {} players: {} reports, {} moderations, {} match days; true ATE report rate {:.4}, participation {:.4}",
        cfg.n_players,
        raw.reports.len(),
        raw.moderations.len(),
        raw.match_days.len(),
        truth.true_ate_report,
        truth.true_ate_participation
    );
    Ok(())
}

fn ingest(args: &IngestArgs) -> Result<(), Failure> {
    let (range, voice) = args.window.resolve();
    let raw = load_event_log(&EventPaths::in_dir(&args.input), range, voice)?;
    let cases = link_cases(&raw);
    std::fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let path = args.out.join("linked_cases.csv");
    write_linked_cases(&cases, &path)?;
    let classified = cases.iter().filter(|c| c.severity.is_some()).count();
    let with_covariates = cases.iter().filter(|c| c.covariates.is_some()).count();
    println!(
        "{} reports, {} moderations, {} match days -> {} linked cases ({} with a severity, {} with covariates)",
        raw.reports.len(),
        raw.moderations.len(),
        raw.match_days.len(),
        cases.len(),
        classified,
        with_covariates
    );
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            PipelineConfig::from_toml_str(&text)?
        }
        None => PipelineConfig::default(),
    };
    cfg.seed = args.seed;
    if let Some(r) = args.reps {
        cfg.bootstrap_reps = r;
    }
    if let Some(l) = args.learner {
        cfg.base = l.spec();
    }
    if let Some(l) = args.effect_learner {
        cfg.effect = Some(l.spec());
    }
    if let Some(e) = &args.estimators {
        cfg.estimators = e.clone();
    }
    cfg.validate()?;

    std::fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let raw: RawTables = if args.simulate {
        let sim = match &args.sim_config {
            Some(p) => SimConfig::load(p)?,
            None => SimConfig::default(),
        };
        let (raw, _) = generate_world(&sim)?;
        let dir = args.out.join("simulated");
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write_event_log(&raw, &EventPaths::in_dir(&dir))?;
        raw
    } else {
        let input = args.input.as_ref().expect("clap requires --input without --simulate");
        let (range, voice) = args.window.resolve();
        load_event_log(&EventPaths::in_dir(input), range, voice)?
    };

    let output = run_pipeline::<f64>(&raw, &cfg, !args.serial)?;
    report::write_outputs(&output, &args.out)?;
    print!("{}", report::render_text(&output.report));
    if output.report.degenerate_only() {
        return Err(Failure::Degenerate);
    }
    Ok(())
}

fn show_report(args: &ReportArgs) -> Result<(), Failure> {
    let path = if args.input.is_dir() {
        args.input.join(files::REPORT_JSON)
    } else {
        args.input.clone()
    };
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let r = AnalysisReport::from_json(&text)?;
    let body = match args.format {
        Format::Text => report::render_text(&r),
        Format::Csv => report::render_csv(&r)?,
        Format::Balance => report::render_balance_csv(&r)?,
        Format::Heterogeneity => report::render_heterogeneity_csv(&r)?,
    };
    print!("{body}");
    Ok(())
}

fn selftest(args: &SelftestArgs) -> Result<(), Failure> {
    let scale = if args.quick { Scale::quick() } else { Scale::full() };
    let ids: Vec<u8> = if args.criterion.is_empty() {
        validation::CRITERIA.iter().map(|c| c.0).collect()
    } else {
        args.criterion.clone()
    };
    let mut failed = 0;
    for id in ids {
        let outcome = validation::run_criterion(id, scale);
        println!("{outcome}");
        failed += usize::from(!outcome.passed);
    }
    if failed > 0 {
        return Err(Failure::Data(format!("{failed} criteria failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Ingest(a) => ingest(a),
        Command::Analyze(a) => analyze(a),
        Command::Report(a) => show_report(a),
        Command::Selftest(a) => selftest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::Degenerate) => {
            eprintln!("warning: every stratum was degenerate; no effects were estimated");
            ExitCode::from(EXIT_DEGENERATE)
        }
    }
}
