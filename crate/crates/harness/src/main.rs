use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use std::path::PathBuf;
use std::process::ExitCode;
use wsd_core::models::Architecture;
use wsd_harness::{Pipeline, RunConfig, RunOptions, Stage};

#[derive(Parser)]
#[command(
    name = "wsd",
    version,
    about = "Probe translation models for word-sense information"
)]
struct Cli {
    /// Log filter (error, warn, info, debug, trace); RUST_LOG overrides it.
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run config; every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's out_dir, else runs/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to one or more architectures.
    #[arg(long, value_enum)]
    arch: Vec<ArchArg>,
    /// Recompute requested stages even when cached output is valid.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ArchArg {
    Transformer,
    Rnns2s,
}

impl From<ArchArg> for Architecture {
    fn from(a: ArchArg) -> Self {
        match a {
            ArchArg::Transformer => Architecture::Transformer,
            ArchArg::Rnns2s => Architecture::Rnns2s,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build (or read) the corpus, learn BPE and vocabularies.
    Generate(Common),
    /// Train the translation models.
    Train(Common),
    /// Materialize probe representations from the trained models.
    Trace(Common),
    /// Run the probe sweep over cached representations.
    Probe(Common),
    /// Attention statistics and BLEU on held-out sentences.
    Analyze(Common),
    /// Write summary.json and print the result tables.
    Report(Common),
    /// Run several stages (all by default).
    Run {
        #[command(flatten)]
        common: Common,
        /// Comma-separated stage list.
        #[arg(long, value_enum, value_delimiter = ',')]
        stages: Vec<Stage>,
    },
}

fn execute(common: Common, stages: Vec<Stage>, print_tables: bool) -> Result<()> {
    let mut config = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| config.output_dir());
    let mut pipeline = Pipeline::new(config, &out)?;
    let opts = RunOptions {
        stages,
        architectures: common.arch.iter().map(|&a| a.into()).collect(),
        force: common.force,
    };
    let summary = pipeline.run(&opts)?;
    if print_tables {
        print_summary(&summary);
    }
    log::info!("outputs in {}", out.display());
    Ok(())
}

fn print_summary(summary: &Value) {
    println!(
        "config {}  seed {}",
        summary["config_hash"].as_str().unwrap_or("?"),
        summary["master_seed"]
    );
    let Some(archs) = summary["architectures"].as_object() else {
        return;
    };
    for (arch, entry) in archs {
        println!("\n{arch} ({} parameters)", entry["parameters"]);
        if let Some(rows) = entry["probe"].as_array() {
            println!(
                "  {:<10} {:>5} {:<9} {:>9} {:>8}",
                "side", "layer", "mode", "accuracy", "std"
            );
            for r in rows {
                println!(
                    "  {:<10} {:>5} {:<9} {:>9.4} {:>8.4}",
                    r["side"].as_str().unwrap_or(""),
                    r["layer"],
                    r["mode"].as_str().unwrap_or(""),
                    r["mean_accuracy"].as_f64().unwrap_or(f64::NAN),
                    r["std"].as_f64().unwrap_or(f64::NAN)
                );
            }
        }
        if let Some(groups) = entry["analysis"]["attention"].as_array() {
            println!(
                "  {:<16} {:>5} {:>11} {:>9} {:>10} {:>6}",
                "group", "layer", "self-weight", "entropy", "argmax-self", "n"
            );
            for g in groups {
                for l in g["layers"].as_array().into_iter().flatten() {
                    println!(
                        "  {:<16} {:>5} {:>11.4} {:>9.4} {:>10.4} {:>6}",
                        g["group"].as_str().unwrap_or(""),
                        l["layer"],
                        l["mean_self_weight"].as_f64().unwrap_or(f64::NAN),
                        l["mean_entropy"].as_f64().unwrap_or(f64::NAN),
                        l["argmax_self_share"].as_f64().unwrap_or(f64::NAN),
                        l["samples"]
                    );
                }
            }
        }
        if let Some(b) = entry["analysis"]["bleu"]["score"].as_f64() {
            println!("  BLEU {b:.2}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log)
        .parse_env("RUST_LOG")
        .format_timestamp_secs()
        .init();
    let result = match cli.command {
        Command::Generate(c) => execute(c, vec![Stage::Generate], false),
        Command::Train(c) => execute(c, vec![Stage::Train], false),
        Command::Trace(c) => execute(c, vec![Stage::Trace], false),
        Command::Probe(c) => execute(c, vec![Stage::Probe], false),
        Command::Analyze(c) => execute(c, vec![Stage::Analyze], false),
        Command::Report(c) => execute(c, vec![Stage::Report], true),
        Command::Run { common, stages } => execute(common, stages, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
