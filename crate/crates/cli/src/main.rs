use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use fssrank::chart::{emit_chart, ChartError};
use fssrank::eligibility::EligibilityThresholds;
use fssrank::ingest::{write_dataset, IngestConfig};
use fssrank::model::Window;
use fssrank::pipeline::{compare_rankings, load_rank_rows, run_pipeline, PipelineError, RunReport};
use fssrank::report::{render_report, ReportFormat};
use fssrank::synth::{generate_dataset, SynthConfig};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "fssrank", version, about = "University research-productivity rankings with and without gender-stratified field scaling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Synth(SynthArgs),
    /// Evaluate a dataset and print the report.
    Run(RunArgs),
    /// Compare two rank columns given directly in a CSV.
    RanksCompare(RanksArgs),
    /// Re-render a saved JSON report.
    Report(ReportArgs),
    /// Draw R' per UDA as SVG, with a companion CSV.
    Chart(ChartArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Small,
    Desk,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "small")]
    preset: Preset,
    /// TOML generator configuration; replaces the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Female productivity multiplier (1.0 is parity).
    #[arg(long)]
    gap: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, default_value = "text")]
    format: String,
    /// Write the rendered report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also save the report as JSON, for `report` and `chart`.
    #[arg(long)]
    save_json: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Directory with researchers.csv, publications.csv, authorships.csv,
    /// taxonomy.csv and optionally wages.csv and baselines.csv.
    #[arg(long, required_unless_present = "config")]
    data: Option<PathBuf>,
    /// TOML run configuration. Relative paths resolve against its directory.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    window_start: Option<i32>,
    #[arg(long)]
    window_end: Option<i32>,
    #[arg(long)]
    min_productive_share: Option<f64>,
    #[arg(long)]
    min_per_gender: Option<usize>,
    #[arg(long)]
    min_professors: Option<usize>,
    /// Normalize with baselines.csv rather than baselines computed from the data.
    #[arg(long)]
    external_baselines: bool,
    /// Seed that produced the data, recorded in the report metadata.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RanksArgs {
    /// CSV with columns [uda_id,]university_id,rank_pooled,rank_by_gender[,fss_pooled,fss_by_gender].
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "text")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChartArgs {
    /// Saved JSON report.
    #[arg(long)]
    input: PathBuf,
    /// SVG path; the CSV is written alongside with a .csv extension.
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn io(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: EXIT_IO, error: error.into() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure { code: e.exit_code() as u8, error: e.into() }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Run(a) => run(a),
        Command::RanksCompare(a) => ranks_compare(a),
        Command::Report(a) => report(a),
        Command::Chart(a) => chart(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::io)?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display())).map_err(Failure::io)
}

fn synth(a: SynthArgs) -> CliResult {
    let mut cfg = match &a.config {
        Some(p) => read_toml::<SynthConfig>(p)?,
        None => match a.preset {
            Preset::Small => SynthConfig::small(a.seed),
            Preset::Desk => SynthConfig::desk_scale(a.seed),
        },
    };
    if let Some(g) = a.gap {
        cfg.gap = g;
    }
    let dataset = generate_dataset(&cfg).map_err(|e| Failure { code: EXIT_VALIDATION, error: e.into() })?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display())).map_err(Failure::io)?;
    write_dataset(&dataset, &a.out).map_err(Failure::io)?;
    let cfg_text = toml::to_string(&cfg).map_err(|e| Failure { code: EXIT_INTERNAL, error: e.into() })?;
    let cfg_path = a.out.join("synth.toml");
    std::fs::write(&cfg_path, cfg_text).with_context(|| format!("writing {}", cfg_path.display())).map_err(Failure::io)?;
    eprintln!(
        "wrote {} researchers, {} publications, {} authorships to {} (window {}-{})",
        dataset.researchers.len(),
        dataset.publications.len(),
        dataset.authorships.len(),
        a.out.display(),
        dataset.window.start,
        dataset.window.end
    );
    Ok(())
}

/// `run` configuration file. Everything is optional so flags can fill gaps.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    data: Option<PathBuf>,
    researchers: Option<PathBuf>,
    publications: Option<PathBuf>,
    authorships: Option<PathBuf>,
    taxonomy: Option<PathBuf>,
    wages: Option<PathBuf>,
    baselines: Option<PathBuf>,
    window: Option<Window>,
    #[serde(default)]
    scheme_overrides: std::collections::BTreeMap<String, fssrank::model::WeightingScheme>,
    thresholds: Option<EligibilityThresholds>,
    #[serde(default)]
    use_external_baselines: bool,
}

/// Window from a synth.toml in the data directory, when one exists.
fn window_from_synth(dir: &Path) -> Option<Window> {
    let text = std::fs::read_to_string(dir.join("synth.toml")).ok()?;
    toml::from_str::<SynthConfig>(&text).ok().map(|c| c.window)
}

fn build_ingest_config(a: &RunArgs) -> CliResult<IngestConfig> {
    let (file, base) = match &a.config {
        Some(p) => (read_toml::<RunFile>(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (RunFile::default(), PathBuf::new()),
    };
    let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
    let data = a.data.clone().or(file.data.map(resolve));
    let window = match (a.window_start, a.window_end) {
        (Some(start), Some(end)) => Some(Window::new(start, end)),
        (None, None) => file.window.or_else(|| data.as_deref().and_then(window_from_synth)),
        _ => {
            return Err(Failure {
                code: EXIT_VALIDATION,
                error: anyhow!("--window-start and --window-end must be given together"),
            })
        }
    };
    let window = window.ok_or_else(|| Failure {
        code: EXIT_VALIDATION,
        error: anyhow!("no publication window: pass --window-start/--window-end or set `window` in the config"),
    })?;

    let mut cfg = match &data {
        Some(dir) => IngestConfig::from_dir(dir, window),
        None => {
            let need = |p: Option<PathBuf>, name: &str| {
                p.map(resolve).ok_or_else(|| Failure {
                    code: EXIT_VALIDATION,
                    error: anyhow!("config sets no `data` directory and no `{name}` path"),
                })
            };
            IngestConfig {
                researchers: need(file.researchers.clone(), "researchers")?,
                publications: need(file.publications.clone(), "publications")?,
                authorships: need(file.authorships.clone(), "authorships")?,
                taxonomy: need(file.taxonomy.clone(), "taxonomy")?,
                wages: None,
                baselines: None,
                window,
                scheme_overrides: Default::default(),
                thresholds: Default::default(),
                use_external_baselines: false,
            }
        }
    };
    if let Some(p) = file.wages {
        cfg.wages = Some(resolve(p));
    }
    if let Some(p) = file.baselines {
        cfg.baselines = Some(resolve(p));
    }
    cfg.scheme_overrides = file.scheme_overrides;
    cfg.thresholds = file.thresholds.unwrap_or_default();
    if let Some(v) = a.min_productive_share {
        cfg.thresholds.min_productive_share = v;
    }
    if let Some(v) = a.min_per_gender {
        cfg.thresholds.min_per_gender = v;
    }
    if let Some(v) = a.min_professors {
        cfg.thresholds.min_professors = v;
    }
    cfg.use_external_baselines = file.use_external_baselines || a.external_baselines;
    Ok(cfg)
}

fn parse_format(s: &str) -> CliResult<ReportFormat> {
    s.parse().map_err(|e| Failure { code: EXIT_IO, error: anyhow::Error::from(e) })
}

fn emit(report: &RunReport, out: &OutputArgs) -> CliResult {
    let format = parse_format(&out.format)?;
    if let Some(p) = &out.save_json {
        write_file(p, &render_report(report, ReportFormat::Json))?;
    }
    write_or_print(out.out.as_deref(), &render_report(report, format))
}

fn write_file(path: &Path, body: &str) -> CliResult {
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display())).map_err(Failure::io)
}

fn write_or_print(path: Option<&Path>, body: &str) -> CliResult {
    match path {
        Some(p) => write_file(p, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(a: RunArgs) -> CliResult {
    // Reject a bad format before doing any work.
    parse_format(&a.output.format)?;
    let cfg = build_ingest_config(&a)?;
    let mut analysis = run_pipeline(&cfg)?;
    analysis.report.metadata.seed = a.seed;
    emit(&analysis.report, &a.output)
}

fn ranks_compare(a: RanksArgs) -> CliResult {
    parse_format(&a.output.format)?;
    let rows = load_rank_rows(&a.input)?;
    let report = compare_rankings(&rows)?;
    emit(&report, &a.output)
}

fn load_report(path: &Path) -> CliResult<RunReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::io)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())).map_err(Failure::io)
}

fn report(a: ReportArgs) -> CliResult {
    let format = parse_format(&a.format)?;
    let r = load_report(&a.input)?;
    write_or_print(a.out.as_deref(), &render_report(&r, format))
}

fn chart(a: ChartArgs) -> CliResult {
    let r = load_report(&a.input)?;
    let csv = emit_chart(&r, &a.out).map_err(|e| match e {
        ChartError::Empty => Failure { code: EXIT_VALIDATION, error: e.into() },
        ChartError::Io { .. } => Failure::io(e),
    })?;
    eprintln!("wrote {} and {}", a.out.display(), csv.display());
    Ok(())
}
