//! Command-line front end: `score`, `sketch`, `eval`, `verify`, `generate`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::synth::{planted, PlantedConfig};
use crate::eval::{ell_curve, evaluate, EvalConfig};
use crate::io::{load_matrix, save_matrix, Format};
use crate::linalg::{svd_thin, stats_from_sigma_sq, DenseMatrix, RANK_FLOOR};
use crate::pipeline::sizing::{fd_ell_for_mu, projection_ell_for_mu, sampling_ell_for_mu};
use crate::pipeline::{
    column_plan_pass, fd_pass, projected_pass, row_sample_pass, run_pipeline, score_pass, sign_table, ApproxBasis,
    BasisSpace, CsvSource, MatrixSource, PipelineConfig, RowSource, RowTransform, SketchMode,
};
use crate::scores::{batch_scores, ScoreKind, ScoreRecord};
use crate::sketch::{ColumnPlan, ProjectedCovariance, SignProjector, Snapshot, SnapshotKind, DEFAULT_INDEPENDENCE};
use crate::verify::{all_pass, run_suite_with, write_jsonl, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// `exact` or one of the sketch pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Sketch(SketchMode),
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("exact") {
            Ok(Self::Exact)
        } else {
            s.parse().map(Self::Sketch)
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sketch-anomaly", version, about = "Subspace anomaly scores from streaming sketches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every row of a matrix.
    Score(ScoreArgs),
    /// Run the accumulation pass of a sketch and save its state.
    Sketch(SketchArgs),
    /// F1 of approximate scores against exact-score labels.
    Eval(EvalArgs),
    /// Run the bound-checking suites and write JSON-lines reports.
    Verify(VerifyArgs),
    /// Write a synthetic matrix with planted anomalies.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// First CSV line is a header.
    #[arg(long)]
    header: bool,
}

#[derive(Debug, Args)]
struct SizeArgs {
    #[arg(long)]
    k: usize,
    /// Sketch size; derived from `--mu` when omitted.
    #[arg(long)]
    ell: Option<usize>,
    /// Target sketch error, translated to a sketch size.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    size: SizeArgs,
    #[arg(long, default_value = "exact")]
    mode: Mode,
    /// Resume from a saved sketch and run only the scoring pass.
    #[arg(long)]
    sketch: Option<PathBuf>,
    /// Column plan for a column-sampling sketch.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, visible_alias = "out")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SketchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    mode: SketchMode,
    #[arg(long)]
    ell: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Column plan from an earlier `sketch --mode colsample` run.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, visible_alias = "out")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    size: SizeArgs,
    #[arg(long, default_value = "exact")]
    mode: Mode,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value = "levk")]
    score: ScoreKind,
    /// Number of seeds averaged for randomized sketches, starting at `--seed`.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Comma-separated sketch sizes for an (ell, F1) curve.
    #[arg(long, value_delimiter = ',')]
    ell_grid: Vec<usize>,
    #[arg(long)]
    plot_csv: Option<PathBuf>,
    #[arg(long, visible_alias = "out")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    /// Instances per suite.
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, visible_alias = "out")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.02)]
    anomaly_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value = "csv")]
    format: Format,
    #[arg(long, visible_alias = "out")]
    output: PathBuf,
    /// One 0/1 line per row marking planted anomalies.
    #[arg(long)]
    labels: Option<PathBuf>,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Score(a) => cmd_score(a),
        Command::Sketch(a) => cmd_sketch(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize + ?Sized>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = open_output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn load(input: &InputArgs) -> Result<DenseMatrix> {
    load_matrix(&input.input, input.format, input.header)
}

/// A replayable source: CSV is re-read per pass, binary is held in memory.
enum Source {
    Csv(CsvSource),
    Mem(DenseMatrix),
}

impl Source {
    fn open(input: &InputArgs) -> Result<Self> {
        Ok(match input.format {
            Format::Csv => Self::Csv(CsvSource::open(&input.input, input.header)?),
            Format::Bin => Self::Mem(load(input)?),
        })
    }

    fn with<R>(&mut self, f: impl FnOnce(&mut dyn RowSource) -> Result<R>) -> Result<R> {
        match self {
            Self::Csv(s) => f(s),
            Self::Mem(m) => f(&mut MatrixSource::new(m)),
        }
    }
}

/// Sketch size from `--ell`, or from `--mu` using the input's spectrum.
fn resolve_ell(size: &SizeArgs, mode: SketchMode, input: &InputArgs) -> Result<usize> {
    if let Some(ell) = size.ell {
        return Ok(ell);
    }
    let Some(mu) = size.mu else {
        return Err(Error::InvalidArgument("sketch modes need --ell or --mu".into()));
    };
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("--mu must be positive, got {mu}")));
    }
    let a = load(input)?;
    let st = stats_from_sigma_sq(svd_thin(&a)?.sigma_sq(), size.k, 1)?;
    let ell = match mode {
        SketchMode::Fd | SketchMode::OnlineFd => fd_ell_for_mu(&st.sigma_sq, size.k, mu),
        SketchMode::Rproj => projection_ell_for_mu(st.stable_rank, mu, 0.1),
        SketchMode::Colsample | SketchMode::Rowsample => sampling_ell_for_mu(st.stable_rank, mu),
    };
    info!("mu = {mu:e} translates to ell = {ell}");
    Ok(ell.max(size.k + 1))
}

fn pipeline_config(size: &SizeArgs, mode: SketchMode, input: &InputArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::new(mode, size.k, resolve_ell(size, mode, input)?, size.seed);
    cfg.lambda = size.lambda;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_score(args: ScoreArgs) -> Result<i32> {
    let records = if let Some(path) = &args.sketch {
        score_from_snapshot(&args, path)?
    } else {
        match args.mode {
            Mode::Exact => batch_scores(&load(&args.input)?, args.size.k, args.size.lambda)?,
            Mode::Sketch(m) => {
                let cfg = pipeline_config(&args.size, m, &args.input)?;
                Source::open(&args.input)?.with(|s| run_pipeline(s, &cfg))?
            }
        }
    };
    write_json(&records, args.output.as_deref())?;
    Ok(EXIT_OK)
}

fn load_plan(path: Option<&Path>) -> Result<ColumnPlan> {
    let path = path.ok_or_else(|| Error::InvalidArgument("column-sampling sketches need --plan".into()))?;
    Snapshot::load(path)?.into_plan()
}

fn score_from_snapshot(args: &ScoreArgs, path: &Path) -> Result<Vec<ScoreRecord>> {
    let snap = Snapshot::load(path)?;
    let k = args.size.k;
    let ell = snap.ell as usize;
    let mut source = Source::open(&args.input)?;
    let d = source.with(|s| Ok(s.dim()))?;
    if snap.d as usize != d {
        return Err(Error::Shape(format!("sketch was built for width {}, input has width {d}", snap.d)));
    }
    match snap.kind {
        SnapshotKind::Fd => {
            let fd = snap.into_fd()?;
            let basis = ApproxBasis::from_covariance(&fd.covariance(), k, ell, RANK_FLOOR, BasisSpace::RowSpace)?;
            source.with(|s| score_pass(s, &basis, &RowTransform::Identity))
        }
        SnapshotKind::Matrix => {
            let rows = snap.payload;
            let basis =
                ApproxBasis::from_covariance(&rows.gram_cols(), k, ell.max(k + 1), RANK_FLOOR, BasisSpace::RowSpace)?;
            source.with(|s| score_pass(s, &basis, &RowTransform::Identity))
        }
        SnapshotKind::ProjectedCovariance => {
            let proj = SignProjector::new(snap.seed, d, ell, snap.aux as usize)?;
            let table = sign_table(&proj);
            let transform = match &table {
                Some(t) => RowTransform::SignTable(t),
                None => RowTransform::Sign(&proj),
            };
            let basis = ApproxBasis::from_covariance(&snap.payload, k, ell, RANK_FLOOR, BasisSpace::ProjectedSpace)?;
            source.with(|s| score_pass(s, &basis, &transform))
        }
        SnapshotKind::ColumnCovariance => {
            let plan = load_plan(args.plan.as_deref())?;
            if plan.seed() != snap.seed || plan.ell() != ell {
                return Err(Error::Snapshot("column plan does not match the covariance snapshot".into()));
            }
            let basis = ApproxBasis::from_covariance(&snap.payload, k, ell, RANK_FLOOR, BasisSpace::ProjectedSpace)?;
            source.with(|s| score_pass(s, &basis, &RowTransform::Columns(&plan)))
        }
        SnapshotKind::ColumnPlan => Err(Error::InvalidArgument(
            "a column plan alone cannot score; run `sketch --mode colsample --plan` first".into(),
        )),
    }
}

fn cmd_sketch(args: SketchArgs) -> Result<i32> {
    let mut source = Source::open(&args.input)?;
    let ell = args.ell;
    let snap = match args.mode {
        SketchMode::Fd | SketchMode::OnlineFd => Snapshot::from_fd(&source.with(|s| fd_pass(s, ell))?),
        SketchMode::Rproj => source.with(|s| {
            let proj = SignProjector::new(args.seed, s.dim(), ell, DEFAULT_INDEPENDENCE)?;
            let table = sign_table(&proj);
            let transform = match &table {
                Some(t) => RowTransform::SignTable(t),
                None => RowTransform::Sign(&proj),
            };
            let cov: ProjectedCovariance = projected_pass(s, &transform, ell)?;
            Ok(Snapshot::from_projected(&cov, s.dim(), args.seed, DEFAULT_INDEPENDENCE))
        })?,
        SketchMode::Colsample => match &args.plan {
            None => Snapshot::from_plan(&source.with(|s| column_plan_pass(s, ell, args.seed))?),
            Some(p) => {
                let plan = load_plan(Some(p))?;
                let cov = source.with(|s| projected_pass(s, &RowTransform::Columns(&plan), plan.ell()))?;
                Snapshot::from_column_covariance(&cov, &plan)
            }
        },
        SketchMode::Rowsample => {
            let mut snap = Snapshot::from_matrix(&source.with(|s| row_sample_pass(s, ell, args.seed))?);
            snap.ell = ell as u64;
            snap.seed = args.seed;
            snap
        }
    };
    snap.save(&args.output)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CurvePoint {
    ell: usize,
    f1: f64,
}

fn cmd_eval(args: EvalArgs) -> Result<i32> {
    let a = load(&args.input)?;
    let mut cfg = EvalConfig::new(args.size.k, args.eta, args.score)?;
    cfg.lambda = args.size.lambda;
    if args.seeds == 0 {
        return Err(Error::InvalidArgument("--seeds must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..args.seeds).map(|i| args.size.seed.wrapping_add(i)).collect();
    let pipeline = match args.mode {
        Mode::Exact => None,
        Mode::Sketch(m) => Some(pipeline_config(&args.size, m, &args.input)?),
    };
    let report = evaluate(&a, &cfg, pipeline.as_ref(), &seeds)?;
    if !args.ell_grid.is_empty() {
        let pc = pipeline
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("--ell-grid needs a sketch --mode".into()))?;
        let curve = ell_curve(&a, &cfg, pc, &args.ell_grid, &seeds)?;
        let path = args.plot_csv.as_deref().ok_or_else(|| Error::InvalidArgument("--ell-grid needs --plot-csv".into()))?;
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        for (ell, f1) in curve {
            w.serialize(CurvePoint { ell, f1 }).map_err(csv_err)?;
        }
        w.flush()?;
    }
    write_json(&report, args.output.as_deref())?;
    Ok(EXIT_OK)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e.to_string()))
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let suite: Suite = args.suite.parse()?;
    let reports = run_suite_with(suite, args.seed, args.seeds, args.epsilon)?;
    write_jsonl(&reports, open_output(args.output.as_deref())?)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        eprintln!("{failed} of {} applicable bounds failed", reports.iter().filter(|r| r.applicable).count());
    }
    Ok(if all_pass(&reports) { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_generate(args: GenerateArgs) -> Result<i32> {
    let mut cfg = PlantedConfig::new(args.n, args.d, args.k, args.seed);
    cfg.anomaly_fraction = args.anomaly_fraction;
    cfg.noise = args.noise;
    let p = planted(&cfg)?;
    save_matrix(&p.data, &args.output, args.format)?;
    if let Some(path) = &args.labels {
        let mut w = BufWriter::new(File::create(path)?);
        for &l in &p.is_anomaly {
            writeln!(w, "{}", u8::from(l))?;
        }
        w.flush()?;
    }
    Ok(EXIT_OK)
}
