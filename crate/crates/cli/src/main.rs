//! `boxassort`: design shipping-box assortments from order packing
//! simulation.

mod commands;
mod config;
mod vlog;

use anyhow::{bail, Context, Result};
use boxassort::analytics::TuningParams;
use boxassort::pipeline::{default_grid, SplitSpec};
use clap::{Args, Parser, Subcommand};
use commands::{DesignConfig, SolveMethod};
use config::{
    parse_f64, parse_grid, parse_path, parse_u64, parse_usize, require, resolve, ConfigFile,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "boxassort",
    version,
    about = "Design an assortment of k shipping-box sizes by simulating order packing",
    after_help = "Set BOXASSORT_LOG=error|warn|info|debug to control stderr verbosity."
)]
struct Cli {
    /// Flat key=value configuration file; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for packing and grid search (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CorpusArgs {
    /// Box file: box_id,length,depth,height,max_weight.
    #[arg(long, value_name = "CSV")]
    boxes: Option<PathBuf>,

    /// Sku file: sku_id,length,depth,height,weight.
    #[arg(long, value_name = "CSV")]
    skus: Option<PathBuf>,

    /// Order file: order_id,sku_id,quantity.
    #[arg(long, value_name = "CSV")]
    orders: Option<PathBuf>,

    /// Output directory for reports.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Pack a corpus with a fixed assortment; write trace and report.
    Pack(CorpusArgs),

    /// Report an assortment's corpus metrics, optionally against a baseline.
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Baseline assortment to compare against (boxes.csv schema).
        #[arg(long, value_name = "CSV")]
        baseline: Option<PathBuf>,
    },

    /// Estimate effective volumes over the full pool and derive weights.
    Weights {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Volume penalty exponent (> 0).
        #[arg(long)]
        rho: Option<f64>,
    },

    /// Build the substitution-cost matrix for a candidate pool.
    Costs {
        /// Candidate pool file.
        #[arg(long, value_name = "CSV")]
        boxes: Option<PathBuf>,
        /// Dimension tolerance (>= 0).
        #[arg(long)]
        delta: Option<f64>,
        /// Denominator offset (>= 0).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },

    /// Solve a k-row selection over exported cost and weight files.
    Select {
        /// Cost matrix CSV produced by `costs`.
        #[arg(long, value_name = "CSV")]
        costs: Option<PathBuf>,
        /// Weights CSV produced by `weights`.
        #[arg(long, value_name = "CSV")]
        weights: Option<PathBuf>,
        /// Number of rows to select.
        #[arg(long)]
        k: Option<usize>,
        /// greedy, em, or exhaustive.
        #[arg(long, default_value = "greedy")]
        method: String,
        /// Seed for the EM initialization.
        #[arg(long)]
        seed: Option<u64>,
        /// EM iteration cap.
        #[arg(long, value_name = "N")]
        max_iter: Option<usize>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },

    /// Full protocol: split, grid search, model selection, final fit,
    /// test evaluation.
    Design {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Baseline assortment (boxes.csv schema); also the default k.
        #[arg(long, value_name = "CSV")]
        baseline: Option<PathBuf>,
        /// Assortment size; defaults to the baseline box count.
        #[arg(long)]
        k: Option<usize>,
        /// Single rho (with --delta and --alpha, replaces the grid).
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Grid spec `rho=0.25,0.5;delta=0,1;alpha=0,1`; default is the
        /// built-in 100-setting grid.
        #[arg(long, value_name = "SPEC")]
        grid: Option<String>,
        /// Seed for the corpus split.
        #[arg(long)]
        seed: Option<u64>,
        /// Split fractions `train,validation,test` (default 0.6,0.2,0.2).
        #[arg(long, value_name = "T,V,E")]
        split: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(threads) = resolve(&cli.threads, &file, "threads", parse_usize)? {
        if threads == 0 {
            bail!("threads must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("initializing the worker pool")?;
    }

    match cli.command {
        Command::Pack(corpus) => {
            let (boxes, skus, orders, out) = resolve_corpus(&corpus, &file)?;
            commands::cmd_pack(boxes, skus, orders, out)
        }
        Command::Evaluate { corpus, baseline } => {
            let (boxes, skus, orders, out) = resolve_corpus(&corpus, &file)?;
            let baseline = resolve(&baseline, &file, "baseline", parse_path)?;
            commands::cmd_evaluate(boxes, skus, orders, baseline, out)
        }
        Command::Weights { corpus, rho } => {
            let (boxes, skus, orders, out) = resolve_corpus(&corpus, &file)?;
            let rho = require(resolve(&rho, &file, "rho", parse_f64)?, "rho")?;
            commands::cmd_weights(boxes, skus, orders, rho, out)
        }
        Command::Costs {
            boxes,
            delta,
            alpha,
            out,
        } => {
            let boxes = require(resolve(&boxes, &file, "boxes", parse_path)?, "boxes")?;
            let delta = require(resolve(&delta, &file, "delta", parse_f64)?, "delta")?;
            let alpha = require(resolve(&alpha, &file, "alpha", parse_f64)?, "alpha")?;
            let out = resolve_out(&out, &file)?;
            commands::cmd_costs(boxes, delta, alpha, out)
        }
        Command::Select {
            costs,
            weights,
            k,
            method,
            seed,
            max_iter,
            out,
        } => {
            let costs = require(costs, "costs")?;
            let weights = require(weights, "weights")?;
            let k = require(resolve(&k, &file, "k", parse_usize)?, "k")?;
            let method: SolveMethod = method.parse()?;
            let seed = resolve(&seed, &file, "seed", parse_u64)?.unwrap_or(0);
            let max_iter = resolve(&max_iter, &file, "em_max_iter", parse_usize)?.unwrap_or(100);
            let out = resolve_out(&out, &file)?;
            commands::cmd_select(costs, weights, k, method, seed, max_iter, out)
        }
        Command::Design {
            corpus,
            baseline,
            k,
            rho,
            delta,
            alpha,
            grid,
            seed,
            split,
        } => {
            let (boxes, skus, orders, out) = resolve_corpus(&corpus, &file)?;
            let baseline = require(
                resolve(&baseline, &file, "baseline", parse_path)?,
                "baseline",
            )?;
            let k = resolve(&k, &file, "k", parse_usize)?;
            let seed = resolve(&seed, &file, "seed", parse_u64)?.unwrap_or(0);
            let grid = resolve_design_grid(rho, delta, alpha, grid, &file)?;
            let split = resolve_split(split, seed, &file)?;
            commands::cmd_design(DesignConfig {
                boxes,
                skus,
                orders,
                baseline,
                k,
                grid,
                split,
                seed,
                out,
            })
        }
    }
}

fn resolve_corpus(
    args: &CorpusArgs,
    file: &ConfigFile,
) -> Result<(PathBuf, PathBuf, PathBuf, PathBuf)> {
    let boxes = require(resolve(&args.boxes, file, "boxes", parse_path)?, "boxes")?;
    let skus = require(resolve(&args.skus, file, "skus", parse_path)?, "skus")?;
    let orders = require(resolve(&args.orders, file, "orders", parse_path)?, "orders")?;
    let out = resolve_out(&args.out, file)?;
    Ok((boxes, skus, orders, out))
}

fn resolve_out(flag: &Option<PathBuf>, file: &ConfigFile) -> Result<PathBuf> {
    Ok(resolve(flag, file, "out", parse_path)?.unwrap_or_else(|| PathBuf::from("out")))
}

/// Grid resolution order: explicit (rho, delta, alpha) triple, then a grid
/// spec, then the built-in 100-setting default.
fn resolve_design_grid(
    rho: Option<f64>,
    delta: Option<f64>,
    alpha: Option<f64>,
    grid: Option<String>,
    file: &ConfigFile,
) -> Result<Vec<TuningParams>> {
    let rho = resolve(&rho, file, "rho", parse_f64)?;
    let delta = resolve(&delta, file, "delta", parse_f64)?;
    let alpha = resolve(&alpha, file, "alpha", parse_f64)?;
    match (rho, delta, alpha) {
        (Some(rho), Some(delta), Some(alpha)) => Ok(vec![TuningParams::new(rho, delta, alpha)?]),
        (None, None, None) => match resolve(&grid, file, "grid", |s| Ok(s.to_string()))? {
            Some(spec) => parse_grid(&spec),
            None => Ok(default_grid()),
        },
        _ => bail!("give all three of --rho, --delta, --alpha, or none"),
    }
}

fn resolve_split(flag: Option<String>, seed: u64, file: &ConfigFile) -> Result<SplitSpec> {
    if let Some(raw) = flag {
        return parse_split(&raw, seed);
    }
    let train = resolve(&None, file, "train_fraction", parse_f64)?;
    let validation = resolve(&None, file, "validation_fraction", parse_f64)?;
    let test = resolve(&None, file, "test_fraction", parse_f64)?;
    match (train, validation, test) {
        (None, None, None) => Ok(SplitSpec::default_with_seed(seed)),
        (Some(t), Some(v), Some(e)) => Ok(SplitSpec::new(t, v, e, seed)?),
        _ => bail!("give all three split fractions, or none"),
    }
}

fn parse_split(raw: &str, seed: u64) -> Result<SplitSpec> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("--split expects three comma-separated fractions, got '{raw}'");
    }
    Ok(SplitSpec::new(
        parse_f64(parts[0])?,
        parse_f64(parts[1])?,
        parse_f64(parts[2])?,
        seed,
    )?)
}
