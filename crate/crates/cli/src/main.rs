use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use trustlens::config::RunConfig;
use trustlens::dataset::ingest;
use trustlens::eval::{evaluate_dataset, window_views, ModeSelection};
use trustlens::report::{summary_table, write_csv, write_json};
use trustlens::TrustGraph;

#[derive(Parser)]
#[command(
    name = "trustlens",
    version,
    about = "Trust-augmented collaborative filtering evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Configuration file (`section.key = value` lines).
    #[arg(long, short)]
    config: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the leave-one-out experiment and write CSV and JSON reports.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["both", "standard-only", "hybrid-only"])]
        mode: Option<String>,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the trust graph of one window as an edge list.
    DumpGraph {
        #[command(flatten)]
        common: Common,
        /// Zero-based window index.
        #[arg(long)]
        window: usize,
        /// Destination file; defaults to `graph_<window>.txt` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the configuration and print the resolved settings.
    Validate {
        #[arg(long, short)]
        config: PathBuf,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(t) = common.threads {
        cfg.experiment.threads = t;
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn run(common: Common, mode: Option<String>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = load(&common)?;
    if let Some(m) = mode {
        cfg.experiment.modes = m.parse::<ModeSelection>().map_err(anyhow::Error::msg)?;
    }
    if let Some(dir) = out {
        cfg.output_dir = dir;
    }
    let ratings = ingest(&cfg.dataset_path, cfg.dataset_format)?;
    let reports = evaluate_dataset(&ratings, &cfg.experiment)?;

    let csv_path = cfg.csv_path();
    let mut csv = create(&csv_path)?;
    write_csv(&mut csv, &reports)?;
    csv.flush()?;
    let json_path = cfg.json_path();
    let mut json = create(&json_path)?;
    write_json(&mut json, &cfg.experiment, &reports)?;
    json.flush()?;

    print!("{}", summary_table(&reports));
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn dump_graph(common: Common, window: usize, out: Option<PathBuf>) -> Result<()> {
    let cfg = load(&common)?;
    let ratings = ingest(&cfg.dataset_path, cfg.dataset_format)?;
    let views = window_views(&ratings, &cfg.experiment)?;
    if window >= views.len() {
        bail!(
            "window index {window} out of range ({} windows)",
            views.len()
        );
    }
    let view = &views[window].0;
    let graph = TrustGraph::build(
        view,
        cfg.experiment.eval.min_overlap,
        &cfg.experiment.eval.evidence,
    );
    let path = out.unwrap_or_else(|| cfg.output_dir.join(format!("graph_{window}.txt")));
    let mut f = create(&path)?;
    graph.write_edge_list(&mut f)?;
    f.flush()?;
    println!("wrote {} edges to {}", graph.edge_count(), path.display());
    Ok(())
}

fn validate(config: &Path) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    print!("{}", cfg.to_config_text());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { common, mode, out } => run(common, mode, out),
        Command::DumpGraph {
            common,
            window,
            out,
        } => dump_graph(common, window, out),
        Command::Validate { config } => validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
