use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use csg_core::experiment::{self, EmbeddingSource, RunConfig};
use csg_core::{emit_report, kg, OutputFormat};

const DEFAULT_HASH_DIM: usize = 64;

#[derive(Parser)]
#[command(name = "csg", version, about = "Cumulative spectral gradient for knowledge-graph datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute CSG for one dataset and one (M, k).
    Csg(CsgArgs),
    /// Compute CSG over an (M, k) grid.
    Sweep(SweepArgs),
    /// Correlate CSG reports with link-prediction MRR values.
    Correlate(CorrelateArgs),
    /// Print entity, relation, triple and class counts.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct DataArgs {
    /// Triple files (TSV); splits are concatenated in the order given.
    #[arg(long, num_args = 1.., required = true)]
    triples: Vec<PathBuf>,
    /// Dataset label used in reports; defaults to the directory or file name.
    #[arg(long)]
    name: Option<String>,
    /// Embedding file (`<count> <dim>` header, one token per line).
    #[arg(long, conflicts_with_all = ["hash_dim", "hash_seed"])]
    embeddings: Option<PathBuf>,
    /// Dimension of the hash embedder used when no embedding file is given.
    #[arg(long)]
    hash_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    hash_seed: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// L2-normalize composite vectors before the neighbor search.
    #[arg(long)]
    normalize_embeddings: bool,
    /// Let each sampled vector count itself among its neighbors.
    #[arg(long)]
    include_self: bool,
    /// Use the non-symmetric similarity matrix as is (general eigensolver).
    #[arg(long)]
    no_symmetrize: bool,
    #[arg(long, default_value_t = 1)]
    min_pairs: usize,
    #[arg(long)]
    max_classes: Option<usize>,
}

impl DataArgs {
    fn config(&self) -> RunConfig {
        let embeddings = match &self.embeddings {
            Some(path) => EmbeddingSource::File { path: path.clone() },
            None => EmbeddingSource::Hash {
                dim: self.hash_dim.unwrap_or(DEFAULT_HASH_DIM),
                seed: self.hash_seed,
            },
        };
        let mut config = RunConfig::new(self.triples.clone(), embeddings);
        config.name = self.name.clone();
        config.seed = self.seed;
        config.normalize_embeddings = self.normalize_embeddings;
        config.include_self = self.include_self;
        config.symmetrize = !self.no_symmetrize;
        config.min_pairs = self.min_pairs;
        config.max_classes = self.max_classes;
        config
    }
}

#[derive(Args)]
struct CsgArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Samples per class.
    #[arg(long, default_value_t = experiment::DEFAULT_M)]
    m: usize,
    /// Nearest neighbors per sampled vector.
    #[arg(long, default_value_t = experiment::DEFAULT_K)]
    k: usize,
    /// Eigenvalue cutoff for a partial CSG.
    #[arg(long)]
    kc: Option<usize>,
    /// Write the similarity matrix as CSV.
    #[arg(long)]
    dump_similarity: Option<PathBuf>,
    /// Write the sorted eigenvalues, one per line.
    #[arg(long)]
    dump_spectrum: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated samples-per-class values.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "120")]
    m: Vec<usize>,
    /// Comma-separated neighbor counts.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "50")]
    k: Vec<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CorrelateArgs {
    /// CSG reports in JSON, as written by `csg --format json`.
    #[arg(long, num_args = 1.., required = true)]
    reports: Vec<PathBuf>,
    /// CSV with header `dataset,model,mrr`.
    #[arg(long)]
    metrics: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, num_args = 1.., required = true)]
    triples: Vec<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn run_csg(args: CsgArgs) -> Result<()> {
    let mut config = args.data.config();
    config.m = args.m;
    config.k = args.k;
    config.k_c = args.kc;
    let outcome = experiment::run_csg_detailed(&config)?;
    if let Some(path) = &args.dump_similarity {
        let data = experiment::prepare(&config)?;
        outcome.similarity.write_csv(&data.tails(), create(path)?)?;
    }
    if let Some(path) = &args.dump_spectrum {
        outcome.spectrum.write_lines(create(path)?)?;
    }
    emit_report(&outcome.report, args.output.format.into(), sink(&args.output.out)?)?;
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let config = args.data.config();
    let grid = experiment::run_sweep(&config, &args.m, &args.k)?;
    emit_report(&grid, args.output.format.into(), sink(&args.output.out)?)?;
    Ok(())
}

fn run_correlate(args: CorrelateArgs) -> Result<()> {
    let mut reports = Vec::new();
    for path in &args.reports {
        let file = File::open(path).map_err(|e| csg_core::Error::File {
            path: path.clone(),
            source: Box::new(e.into()),
        })?;
        let report: csg_core::CsgReport = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| csg_core::Error::File {
                path: path.clone(),
                source: Box::new(e.into()),
            })?;
        reports.push(report);
    }
    let metrics = File::open(&args.metrics).map_err(|e| csg_core::Error::File {
        path: args.metrics.clone(),
        source: Box::new(e.into()),
    })?;
    let corr = experiment::correlate_with_metrics(&reports, BufReader::new(metrics))?;
    emit_report(&corr, args.output.format.into(), sink(&args.output.out)?)?;
    Ok(())
}

#[derive(serde::Serialize)]
struct StatsOut {
    dataset: String,
    #[serde(flatten)]
    stats: kg::DatasetStats,
}

fn run_stats(args: StatsArgs) -> Result<()> {
    let ts = kg::read_triple_files(&args.triples)?;
    let mut config = RunConfig::new(args.triples.clone(), EmbeddingSource::Hash { dim: 1, seed: 0 });
    config.name = args.name;
    let out = StatsOut {
        dataset: config.dataset_name(),
        stats: kg::dataset_stats(&ts),
    };
    let mut w = sink(&args.output.out)?;
    match args.output.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &out)?;
            writeln!(w)?;
        }
        Format::Csv => {
            writeln!(w, "dataset,entities,relations,triples,classes")?;
            let s = out.stats;
            let mut rec = csv::Writer::from_writer(Vec::new());
            rec.write_record([out.dataset.as_str()])?;
            let name = String::from_utf8(rec.into_inner()?)?;
            writeln!(
                w,
                "{},{},{},{},{}",
                name.trim_end(),
                s.entity_count,
                s.relation_count,
                s.triple_count,
                s.class_count
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<csg_core::Error>() {
        Some(e) => e.kind().exit_code() as u8,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Csg(a) => run_csg(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Correlate(a) => run_correlate(a),
        Command::Stats(a) => run_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
