//! Implementations of the six subcommands.

use crate::config::config_hash;
use crate::vlog;
use anyhow::{bail, Context, Result};
use boxassort::analytics::{
    build_cost_matrix, compute_weights, estimate_effective_volumes, TuningParams,
};
use boxassort::io;
use boxassort::model::{BoxType, CandidatePool, Item, Order};
use boxassort::packer::pack_order;
use boxassort::pipeline::{
    aggregate_report, compare, evaluate_assortment, finalize_detailed, grid_search, select_model,
    split_corpus, SplitSpec,
};
use boxassort::solver::{solve_em, solve_exhaustive, solve_greedy, Selection, SelectionProblem};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub fn load_boxes(path: &Path, what: &str) -> Result<Vec<BoxType>> {
    let boxes = io::read_boxes(path).with_context(|| format!("stage ingest: reading {what}"))?;
    if boxes.is_empty() {
        bail!(
            "stage ingest: {what} file {} lists no boxes",
            path.display()
        );
    }
    vlog::info(format!(
        "loaded {} boxes from {}",
        boxes.len(),
        path.display()
    ));
    Ok(boxes)
}

pub fn load_skus(path: &Path) -> Result<Vec<Item>> {
    let items = io::read_skus(path).context("stage ingest: reading skus")?;
    vlog::info(format!(
        "loaded {} skus from {}",
        items.len(),
        path.display()
    ));
    Ok(items)
}

pub fn load_orders(path: &Path, catalog: &[Item]) -> Result<Vec<Order>> {
    let orders = io::read_orders(path, catalog).context("stage ingest: reading orders")?;
    vlog::info(format!(
        "loaded {} orders from {}",
        orders.len(),
        path.display()
    ));
    Ok(orders)
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)
        .with_context(|| format!("stage report: creating output directory {}", out.display()))
}

/// `pack`: pack a corpus with a fixed assortment, writing the per-placement
/// trace and the aggregate report.
pub fn cmd_pack(boxes: PathBuf, skus: PathBuf, orders: PathBuf, out: PathBuf) -> Result<()> {
    let assortment = load_boxes(&boxes, "assortment")?;
    let catalog = load_skus(&skus)?;
    let order_list = load_orders(&orders, &catalog)?;
    if order_list.is_empty() {
        bail!("stage ingest: orders file lists no orders");
    }
    ensure_out_dir(&out)?;

    let results: Vec<_> = order_list
        .par_iter()
        .map(|order| pack_order(order, &assortment))
        .collect();
    let report = aggregate_report(&assortment, order_list.len(), "corpus", &results);

    let trace_path = out.join("packing_trace.jsonl");
    io::write_trace(&trace_path, &results).context("stage report: writing packing trace")?;
    let report_path = out.join("packing_report.csv");
    io::write_assortment_report(&report_path, &report)
        .context("stage report: writing packing report")?;
    io::write_unpacked(&out.join("unpacked.csv"), &results)
        .context("stage report: writing unpacked items")?;

    println!(
        "packed {} orders: {} box instances, utilization {:.4}, {} unpacked items",
        report.orders, report.total_boxes_used, report.utilization, report.unpacked_items
    );
    println!("trace:  {}", trace_path.display());
    println!("report: {}", report_path.display());
    Ok(())
}

/// `evaluate`: report an assortment's metrics on a corpus, optionally
/// against a baseline assortment.
pub fn cmd_evaluate(
    boxes: PathBuf,
    skus: PathBuf,
    orders: PathBuf,
    baseline: Option<PathBuf>,
    out: PathBuf,
) -> Result<()> {
    let assortment = load_boxes(&boxes, "assortment")?;
    let catalog = load_skus(&skus)?;
    let order_list = load_orders(&orders, &catalog)?;
    ensure_out_dir(&out)?;

    let report = evaluate_assortment(&assortment, &order_list, "corpus")
        .context("stage evaluate: packing with the assortment")?;
    let mut reports = vec![report.clone()];

    if let Some(baseline_path) = baseline {
        let baseline_boxes = load_boxes(&baseline_path, "baseline")?;
        let baseline_report = evaluate_assortment(&baseline_boxes, &order_list, "corpus")
            .context("stage evaluate: packing with the baseline")?;
        let comparison =
            compare(&report, &baseline_report).context("stage evaluate: comparing reports")?;
        reports.push(baseline_report);
        let comparison_path = out.join("comparison.csv");
        let mut w = fs::File::create(&comparison_path)
            .with_context(|| format!("stage report: {}", comparison_path.display()))?;
        writeln!(w, "box_reduction_pct,utilization_improvement_pct")?;
        writeln!(
            w,
            "{},{}",
            comparison.box_reduction_pct, comparison.utilization_improvement_pct
        )?;
        println!(
            "vs baseline: box reduction {:.4}%, utilization improvement {:.4}%",
            comparison.box_reduction_pct, comparison.utilization_improvement_pct
        );
    }

    let report_path = out.join("evaluation_report.csv");
    io::write_assortment_reports(&report_path, &reports)
        .context("stage report: writing evaluation report")?;
    println!(
        "evaluated {} orders: {} box instances, utilization {:.4}, {} unpacked items",
        report.orders, report.total_boxes_used, report.utilization, report.unpacked_items
    );
    Ok(())
}

/// `weights`: effective volumes over the full pool and the derived weights.
pub fn cmd_weights(
    boxes: PathBuf,
    skus: PathBuf,
    orders: PathBuf,
    rho: f64,
    out: PathBuf,
) -> Result<()> {
    let pool_boxes = load_boxes(&boxes, "candidate pool")?;
    let pool = CandidatePool::new(pool_boxes).context("stage ingest: validating pool")?;
    let catalog = load_skus(&skus)?;
    let order_list = load_orders(&orders, &catalog)?;
    ensure_out_dir(&out)?;

    let ev = estimate_effective_volumes(&order_list, &pool)
        .context("stage weights: packing the corpus with the full pool")?;
    let weights = compute_weights(&ev, &pool, rho).context("stage weights: applying rho")?;
    let ids: Vec<String> = pool.iter().map(|b| b.id.clone()).collect();
    let path = out.join("weights.csv");
    io::write_weights(&path, &ids, &weights).context("stage report: writing weights")?;
    println!(
        "weights for {} boxes written to {}",
        pool.len(),
        path.display()
    );
    Ok(())
}

/// `costs`: the substitution-cost matrix for a pool.
pub fn cmd_costs(boxes: PathBuf, delta: f64, alpha: f64, out: PathBuf) -> Result<()> {
    let pool_boxes = load_boxes(&boxes, "candidate pool")?;
    let pool = CandidatePool::new(pool_boxes).context("stage ingest: validating pool")?;
    ensure_out_dir(&out)?;
    let matrix = build_cost_matrix(&pool, delta, alpha);
    let path = out.join("costs.csv");
    io::write_cost_matrix(&path, &matrix).context("stage report: writing cost matrix")?;
    println!(
        "{}x{} cost matrix written to {}",
        matrix.n(),
        matrix.n(),
        path.display()
    );
    Ok(())
}

pub enum SolveMethod {
    Greedy,
    Em,
    Exhaustive,
}

impl std::str::FromStr for SolveMethod {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(SolveMethod::Greedy),
            "em" => Ok(SolveMethod::Em),
            "exhaustive" => Ok(SolveMethod::Exhaustive),
            other => bail!("unknown method '{other}' (expected greedy, em, exhaustive)"),
        }
    }
}

/// `select`: solve a selection problem from cost and weight files.
pub fn cmd_select(
    costs: PathBuf,
    weights: PathBuf,
    k: usize,
    method: SolveMethod,
    seed: u64,
    max_iter: usize,
    out: PathBuf,
) -> Result<()> {
    let matrix = io::read_cost_matrix(&costs).context("stage ingest: reading cost matrix")?;
    let (ids, _ev, w) = io::read_weights(&weights).context("stage ingest: reading weights")?;
    if ids != matrix.box_ids() {
        bail!(
            "stage ingest: weight box ids do not match cost matrix ids ({} vs {} entries)",
            ids.len(),
            matrix.box_ids().len()
        );
    }
    ensure_out_dir(&out)?;
    let box_ids = matrix.box_ids().to_vec();
    let problem = SelectionProblem::from_cost_matrix(&matrix, w, k)
        .context("stage select: building problem")?;
    let selection: Selection = match method {
        SolveMethod::Greedy => solve_greedy(&problem),
        SolveMethod::Em => {
            solve_em(&problem, None, max_iter, seed).context("stage select: EM solver")?
        }
        SolveMethod::Exhaustive => {
            solve_exhaustive(&problem).context("stage select: exhaustive solver")?
        }
    };
    let path = out.join("selection.csv");
    io::write_selection(&path, &problem, &selection, Some(&box_ids))
        .context("stage report: writing selection")?;
    println!(
        "selected {} rows, objective {}: {}",
        selection.rows.len(),
        selection.objective,
        path.display()
    );
    Ok(())
}

/// Everything `design` needs after flag/config resolution.
pub struct DesignConfig {
    pub boxes: PathBuf,
    pub skus: PathBuf,
    pub orders: PathBuf,
    pub baseline: PathBuf,
    pub k: Option<usize>,
    pub grid: Vec<TuningParams>,
    pub split: SplitSpec,
    pub seed: u64,
    pub out: PathBuf,
}

/// `design`: the full protocol of split, grid search on validation, model
/// selection, final fit on train + validation, test evaluation.
pub fn cmd_design(config: DesignConfig) -> Result<()> {
    let pool_boxes = load_boxes(&config.boxes, "candidate pool")?;
    let pool = CandidatePool::new(pool_boxes).context("stage ingest: validating pool")?;
    let baseline = load_boxes(&config.baseline, "baseline")?;
    let catalog = load_skus(&config.skus)?;
    let orders = load_orders(&config.orders, &catalog)?;
    let k = config.k.unwrap_or(baseline.len());
    if k == 0 {
        bail!("stage ingest: k must be >= 1");
    }
    ensure_out_dir(&config.out)?;

    let (train, validation, test) =
        split_corpus(&orders, &config.split).context("stage split: partitioning the corpus")?;
    vlog::info(format!(
        "split {} orders into {} train / {} validation / {} test",
        orders.len(),
        train.len(),
        validation.len(),
        test.len()
    ));
    vlog::debug(format!("grid has {} settings", config.grid.len()));

    let results = grid_search(&train, &validation, &pool, &baseline, k, &config.grid)
        .context("stage grid-search: evaluating parameter settings")?;
    io::write_grid_report(&config.out.join("grid_report.csv"), &results)
        .context("stage report: writing grid report")?;

    let choice = select_model(&results).context("stage model-selection")?;
    if choice.sacrifices_boxes {
        vlog::warn("every grid setting used more boxes than the baseline; picked best utilization");
    }
    vlog::info(format!(
        "selected rho={} delta={} alpha={}",
        choice.params.rho, choice.params.delta, choice.params.alpha
    ));

    let merged: Vec<Order> = train.iter().chain(&validation).cloned().collect();
    let fit = finalize_detailed(&merged, &pool, &choice.params, k)
        .context("stage finalize: refitting on train + validation")?;

    let candidate_report = evaluate_assortment(&fit.assortment, &test, "test")
        .context("stage test-evaluation: packing with the designed assortment")?;
    let baseline_report = evaluate_assortment(&baseline, &test, "test")
        .context("stage test-evaluation: packing with the baseline")?;
    let comparison = compare(&candidate_report, &baseline_report)
        .context("stage test-evaluation: comparing reports")?;

    let pool_ids: Vec<String> = pool.iter().map(|b| b.id.clone()).collect();
    io::write_selection(
        &config.out.join("selection.csv"),
        &fit.problem,
        &fit.selection,
        Some(&pool_ids),
    )
    .context("stage report: writing selection")?;
    io::write_boxes(&config.out.join("final_assortment.csv"), &fit.assortment)
        .context("stage report: writing final assortment")?;
    io::write_weights(&config.out.join("weights.csv"), &pool_ids, &fit.weights)
        .context("stage report: writing weights")?;
    io::write_assortment_reports(
        &config.out.join("final_reports.csv"),
        &[candidate_report.clone(), baseline_report.clone()],
    )
    .context("stage report: writing final reports")?;

    let comparison_path = config.out.join("final_comparison.csv");
    let mut w = fs::File::create(&comparison_path)
        .with_context(|| format!("stage report: {}", comparison_path.display()))?;
    writeln!(w, "box_reduction_pct,utilization_improvement_pct")?;
    writeln!(
        w,
        "{},{}",
        comparison.box_reduction_pct, comparison.utilization_improvement_pct
    )?;

    write_manifest(&config, k, &choice, results.len()).context("stage report: writing manifest")?;

    println!(
        "designed assortment of {k} boxes: {}",
        fit.assortment
            .iter()
            .map(|b| b.id.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!(
        "test set: box reduction {:.4}%, utilization improvement {:.4}% (utilization {:.4} vs baseline {:.4})",
        comparison.box_reduction_pct,
        comparison.utilization_improvement_pct,
        candidate_report.utilization,
        baseline_report.utilization
    );
    println!("reports in {}", config.out.display());
    Ok(())
}

fn write_manifest(
    config: &DesignConfig,
    k: usize,
    choice: &boxassort::pipeline::ModelChoice,
    grid_len: usize,
) -> Result<()> {
    // The echo covers the semantic configuration only; output paths and
    // thread counts do not affect results and stay out of the hash.
    let mut echo: BTreeMap<String, String> = BTreeMap::new();
    echo.insert("boxes".into(), config.boxes.display().to_string());
    echo.insert("skus".into(), config.skus.display().to_string());
    echo.insert("orders".into(), config.orders.display().to_string());
    echo.insert("baseline".into(), config.baseline.display().to_string());
    echo.insert("k".into(), k.to_string());
    echo.insert("seed".into(), config.seed.to_string());
    echo.insert(
        "train_fraction".into(),
        config.split.train_fraction.to_string(),
    );
    echo.insert(
        "validation_fraction".into(),
        config.split.validation_fraction.to_string(),
    );
    echo.insert(
        "test_fraction".into(),
        config.split.test_fraction.to_string(),
    );
    let grid_text: Vec<String> = config
        .grid
        .iter()
        .map(|p| format!("({},{},{})", p.rho, p.delta, p.alpha))
        .collect();
    echo.insert("grid".into(), grid_text.join(" "));

    let path = config.out.join("manifest.txt");
    let mut w = fs::File::create(&path).with_context(|| path.display().to_string())?;
    writeln!(w, "version = {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "config_hash = {}", config_hash(&echo))?;
    for (key, value) in &echo {
        writeln!(w, "{key} = {value}")?;
    }
    writeln!(w, "grid_settings = {grid_len}")?;
    writeln!(
        w,
        "selected = rho={} delta={} alpha={}",
        choice.params.rho, choice.params.delta, choice.params.alpha
    )?;
    writeln!(w, "sacrifices_boxes = {}", choice.sacrifices_boxes)?;
    Ok(())
}
