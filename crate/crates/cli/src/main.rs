use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bivrecon::embed::{
    accuracy_styles, likelihood_styles, mds_2d_matrix, numeric_rows, pca_2d_matrix, render_plot,
};
use bivrecon::graph::DEFAULT_CANDIDATE_CAP;
use bivrecon::io::{load_dataset_csv, projections_from_json, projections_to_json, to_canonical_json, CsvOptions, ReportFile};
use bivrecon::likelihood::{exact_cover_frequencies, WeightMode, DEFAULT_ORACLE_CAP};
use bivrecon::simulate::{run_trials, Stage, TrialConfig};
use bivrecon::{project, run_pipeline, Error, PipelineOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const EXIT_DATA: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Reconstruct discrete datasets from their bivariate projections.
#[derive(Parser, Debug)]
#[command(name = "bivrecon", version)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute every pairwise projection of a CSV file.
    Project(ProjectArgs),
    /// Enumerate, deduce, score and select rows from a projection file.
    Reconstruct(ReconstructArgs),
    /// Run seeded Monte Carlo trials on random uniform datasets.
    Simulate(SimulateArgs),
    /// Plot the candidates of a report in two dimensions as SVG.
    Embed(EmbedArgs),
    /// Exact selection frequencies for the undeduced candidates of a report.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
struct ProjectArgs {
    csv: PathBuf,
    /// Header names, 1-based positions or ranges such as `3-8`.
    #[arg(long)]
    columns: Option<String>,
    /// The first line is data, not a header.
    #[arg(long)]
    no_header: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    projections: PathBuf,
    /// Number of distinct rows in the original dataset.
    #[arg(long)]
    distinct_count: usize,
    #[arg(long, default_value = "reciprocal")]
    weight_mode: WeightMode,
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
    candidate_cap: usize,
    /// Original CSV; adds confusion labels and metrics to the report.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Column selector for the truth file (default: the projection column names).
    #[arg(long, requires = "truth")]
    truth_columns: Option<String>,
    #[arg(long, requires = "truth")]
    truth_no_header: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    n: usize,
    /// One interval for every column, or a comma-separated list with one per column.
    #[arg(long, value_delimiter = ',', required = true)]
    interval: Vec<u32>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, env = "BIVRECON_SEED")]
    seed: u64,
    #[arg(long, default_value = "likelihood")]
    stage: Stage,
    #[arg(long, default_value = "reciprocal")]
    weight_mode: WeightMode,
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
    candidate_cap: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Pca,
    Mds,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ColorArg {
    Likelihood,
    Accuracy,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    report: PathBuf,
    #[arg(long, value_enum, default_value = "pca")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "likelihood")]
    color: ColorArg,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    report: PathBuf,
    /// Largest number of subsets to enumerate.
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    cap: u128,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_DATA);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>().map(Error::root) {
        Some(Error::InvalidOptions(_)) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Project(a) => cmd_project(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let Some(path) = path else {
        std::io::stdout().write_all(text.as_bytes())?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_project(a: ProjectArgs) -> Result<()> {
    let options = CsvOptions {
        columns: a.columns,
        has_header: !a.no_header,
    };
    let data = load_dataset_csv(&a.csv, &options)?;
    emit(a.output.as_deref(), &projections_to_json(&project(&data))?)
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<()> {
    if a.distinct_count == 0 {
        return Err(Error::InvalidOptions("--distinct-count must be at least 1".into()).into());
    }
    let proj = projections_from_json(&read_text(&a.projections)?)
        .with_context(|| format!("parsing {}", a.projections.display()))?;
    let truth = match &a.truth {
        Some(path) => {
            let columns = a
                .truth_columns
                .clone()
                .or_else(|| (!a.truth_no_header).then(|| proj.columns().join(",")));
            let options = CsvOptions {
                columns,
                has_header: !a.truth_no_header,
            };
            let data = load_dataset_csv(path, &options)?;
            if data.dimension() != proj.dimension() {
                return Err(Error::InvalidOptions(format!(
                    "truth has {} columns but the projections have {}",
                    data.dimension(),
                    proj.dimension()
                ))
                .into());
            }
            Some(data.distinct_set())
        }
        None => None,
    };
    let options = PipelineOptions {
        weight_mode: a.weight_mode,
        candidate_cap: a.candidate_cap,
    };
    let rec = run_pipeline(&proj, a.distinct_count, options)?;
    let report = ReportFile::build(&rec, &options, truth.as_ref())?;
    emit(a.output.as_deref(), &report.to_json()?)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let intervals = match a.interval.as_slice() {
        [i] => vec![*i; a.dim],
        list => list.to_vec(),
    };
    let config = TrialConfig {
        dimension: a.dim,
        n: a.n,
        intervals,
        trials: a.trials,
        seed: a.seed,
        stage: a.stage,
        weight_mode: a.weight_mode,
        candidate_cap: a.candidate_cap,
    };
    let report = run_trials(&config)?;
    emit(a.output.as_deref(), &to_canonical_json(&report)?)
}

fn load_report(path: &Path) -> Result<ReportFile> {
    ReportFile::from_json(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_embed(a: EmbedArgs) -> Result<()> {
    let report = load_report(&a.report)?;
    let (matrix, coding) = numeric_rows(&report.rows());
    let mut emb = match a.method {
        MethodArg::Pca => pca_2d_matrix(&matrix)?,
        MethodArg::Mds => mds_2d_matrix(&matrix)?,
    };
    emb.coding = coding;
    let mut spec = match a.color {
        ColorArg::Likelihood => likelihood_styles(
            &report
                .candidates
                .iter()
                .map(|c| (!c.deduced).then(|| c.score.unwrap_or(0.0)))
                .collect::<Vec<_>>(),
        ),
        ColorArg::Accuracy => {
            let labels: Option<Vec<_>> = report.candidates.iter().map(|c| c.label).collect();
            let labels = labels.ok_or_else(|| {
                Error::InvalidOptions("accuracy colouring needs a report built with --truth".into())
            })?;
            accuracy_styles(&labels)
        }
    };
    spec.metadata.push(("candidates".into(), report.candidate_count.to_string()));
    spec.metadata.push(("deduced".into(), report.deduced_count.to_string()));
    spec.metadata.push(("columns".into(), report.columns.join(", ")));
    emit(a.output.as_deref(), &render_plot(&emb, &spec))
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let report = load_report(&a.report)?;
    let universe = report.undeduced();
    let freq = exact_cover_frequencies(&report.statements(), &universe, report.slots, a.cap)?;
    let mut candidates = BTreeMap::new();
    for &k in &universe {
        let c = &report.candidates[k];
        candidates.insert(
            k.to_string(),
            json!({
                "values": c.values,
                "count": freq.count(k),
                "proportion": freq.proportion(k),
                "score": c.score,
                "selected": c.selected,
            }),
        );
    }
    let out = json!({
        "slots": report.slots,
        "universe": universe.len(),
        "solutions": freq.solutions,
        "candidates": candidates,
    });
    emit(a.output.as_deref(), &to_canonical_json(&out)?)
}
