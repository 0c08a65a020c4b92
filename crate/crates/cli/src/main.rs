use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use semiseq::oracle::ScanOptions;
use semiseq::pipeline::{cmd_decompose, cmd_scan, cmd_sequence, cmd_verify, PipelineConfig};
use semiseq::{Certificate, GElemWire, GroupSpec};

#[derive(Parser)]
#[command(name = "semiseq", version, about = "Sequencings in Z_p semidirect products")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find and certify a sequencing of a set.
    Sequence(RunArgs),
    /// Replay a certificate (or the certificate inside a report).
    Verify {
        #[arg(long)]
        cert: PathBuf,
    },
    /// Exhaustive sequenceability scan over small subsets.
    Scan {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        max_size: usize,
        #[arg(long, default_value_t = 1)]
        shards: usize,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        budget: Option<u64>,
        /// Per-size table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the block decomposition of a set.
    Decompose(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Base configuration; flags below override it.
    #[arg(long, env = "SEMISEQ_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long)]
    group: Option<PathBuf>,
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long = "force-R")]
    force_r: Option<usize>,
    #[arg(long = "force-K")]
    force_k: Option<usize>,
    /// Block size window as `lo,hi`.
    #[arg(long, value_parser = parse_window)]
    window: Option<(usize, usize)>,
    /// Cap for partition and ordering resampling.
    #[arg(long)]
    retries: Option<usize>,
    #[arg(long)]
    no_fallback: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo = a.trim().parse().map_err(|e| format!("lo: {e}"))?;
    let hi = b.trim().parse().map_err(|e| format!("hi: {e}"))?;
    Ok((lo, hi))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {what} {}", path.display()))
}

fn emit<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn build_config(a: &RunArgs) -> Result<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            PipelineConfig::from_json(&text).with_context(|| format!("config {}", p.display()))?
        }
        None => {
            let Some(g) = &a.group else { bail!("--group is required without --config") };
            let Some(seed) = a.seed else { bail!("--seed is required without --config") };
            PipelineConfig::new(read_json::<GroupSpec>(g, "group")?, seed)
        }
    };
    if let Some(g) = &a.group {
        cfg.group = read_json(g, "group")?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(v) = a.c1 {
        cfg.c1 = v;
    }
    if let Some(v) = a.c2 {
        cfg.c2 = v;
    }
    cfg.force_r = a.force_r.or(cfg.force_r);
    cfg.force_k = a.force_k.or(cfg.force_k);
    if let Some(w) = a.window {
        cfg.window = w;
    }
    if let Some(r) = a.retries {
        cfg.retries.partitions = r;
        cfg.retries.orderings = r;
    }
    if a.no_fallback {
        cfg.fallback = false;
    }
    if a.out.is_some() {
        cfg.output = a.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Sequence(a) => {
            let cfg = build_config(&a)?;
            let set: Vec<GElemWire> = read_json(&a.set, "set")?;
            let report = cmd_sequence(&cfg, &set)?;
            emit(&report, cfg.output.as_deref())?;
            Ok(if report.verdict.ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Verify { cert } => {
            let value: serde_json::Value = read_json(&cert, "certificate")?;
            let inner = value.get("certificate").cloned().unwrap_or(value);
            let cert: Certificate =
                serde_json::from_value(inner).with_context(|| format!("certificate fields in {}", cert.display()))?;
            let verdict = cmd_verify(&cert)?;
            emit(&verdict, None)?;
            Ok(if verdict.ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Scan { group, max_size, shards, checkpoint, budget, csv, out } => {
            let spec: GroupSpec = read_json(&group, "group")?;
            let opts = ScanOptions { shards, checkpoint_dir: checkpoint, budget };
            let report = cmd_scan(&spec, max_size, &opts)?;
            if let Some(path) = csv {
                let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
                for row in &report.by_size {
                    w.serialize(row)?;
                }
                w.flush()?;
            }
            emit(&report, out.as_deref())?;
            Ok(if report.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Decompose(a) => {
            let cfg = build_config(&a)?;
            let set: Vec<GElemWire> = read_json(&a.set, "set")?;
            emit(&cmd_decompose(&cfg, &set)?, cfg.output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
