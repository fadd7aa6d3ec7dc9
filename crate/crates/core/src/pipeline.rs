//! The end-to-end experiment protocol: split the corpus, grid-search the
//! tuning parameters on the validation set, pick the model that improves
//! utilization most without sacrificing box count, then re-fit on
//! train + validation for the final assortment.

use crate::analytics::{
    build_cost_matrix, compute_weights, estimate_effective_volumes, CostMatrix, TuningParams,
};
use crate::error::Error;
use crate::model::{BoxType, CandidatePool, Order};
use crate::packer::pack_order;
use crate::solver::{solve_greedy, Selection, SelectionProblem};
use crate::Result;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Corpus split fractions and the seed of the hash that assigns orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64, seed: u64) -> Result<Self> {
        for (name, f) in [("train", train), ("validation", validation), ("test", test)] {
            if !f.is_finite() || f <= 0.0 || f >= 1.0 {
                return Err(Error::invalid(format!(
                    "{name} fraction must lie in (0, 1), got {f}"
                )));
            }
        }
        let sum = train + validation + test;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "split fractions sum to {sum}, expected 1"
            )));
        }
        Ok(SplitSpec {
            train_fraction: train,
            validation_fraction: validation,
            test_fraction: test,
            seed,
        })
    }

    /// 0.6 / 0.2 / 0.2.
    pub fn default_with_seed(seed: u64) -> Self {
        SplitSpec {
            train_fraction: 0.6,
            validation_fraction: 0.2,
            test_fraction: 0.2,
            seed,
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(bytes: &[u8], seed: u64) -> u64 {
    let mut hash = FNV_OFFSET;
    for b in seed.to_le_bytes().iter().chain(bytes) {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// FNV's high bits avalanche poorly on short keys; finish with a 64-bit
/// mixer before using them as a uniform coordinate.
fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

/// Map an order id to a stable point in [0, 1).
fn split_coordinate(order_id: &str, seed: u64) -> f64 {
    (mix64(fnv1a64(order_id.as_bytes(), seed)) >> 11) as f64 / (1u64 << 53) as f64
}

/// Partition orders into train / validation / test by seeded hash of the
/// order id, so membership is stable under reordering of the input file.
pub fn split_corpus(
    orders: &[Order],
    spec: &SplitSpec,
) -> Result<(Vec<Order>, Vec<Order>, Vec<Order>)> {
    if orders.len() < 3 {
        return Err(Error::invalid(format!(
            "corpus has {} orders; need at least 3 to split",
            orders.len()
        )));
    }
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut test = Vec::new();
    for order in orders {
        let u = split_coordinate(&order.order_id, spec.seed);
        if u < spec.train_fraction {
            train.push(order.clone());
        } else if u < spec.train_fraction + spec.validation_fraction {
            validation.push(order.clone());
        } else {
            test.push(order.clone());
        }
    }
    Ok((train, validation, test))
}

/// Aggregate metrics of one assortment packed over one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct AssortmentReport {
    pub assortment_ids: Vec<String>,
    pub corpus_label: String,
    pub orders: usize,
    pub total_boxes_used: u64,
    /// Packed item volume over used box volume; 0 when nothing was packed.
    pub utilization: f64,
    pub unpacked_items: u64,
    pub packed_item_volume: f64,
    pub used_box_volume: f64,
}

/// Pack every order with the assortment and aggregate the corpus metrics.
pub fn evaluate_assortment(
    assortment: &[BoxType],
    orders: &[Order],
    corpus_label: &str,
) -> Result<AssortmentReport> {
    if assortment.is_empty() {
        return Err(Error::invalid("assortment is empty"));
    }
    if orders.is_empty() {
        return Err(Error::invalid(format!("corpus '{corpus_label}' is empty")));
    }
    // Per-order results collected in corpus order for run-to-run determinism.
    let results: Vec<crate::packer::PackingResult> = orders
        .par_iter()
        .map(|order| pack_order(order, assortment))
        .collect();
    Ok(aggregate_report(
        assortment,
        orders.len(),
        corpus_label,
        &results,
    ))
}

/// Fold per-order packing results into one report, in the given order.
pub fn aggregate_report(
    assortment: &[BoxType],
    order_count: usize,
    corpus_label: &str,
    results: &[crate::packer::PackingResult],
) -> AssortmentReport {
    let mut total_boxes_used = 0u64;
    let mut packed_item_volume = 0.0;
    let mut used_box_volume = 0.0;
    let mut unpacked_items = 0u64;
    for result in results {
        total_boxes_used += result.box_count() as u64;
        packed_item_volume += result.packed_item_volume();
        used_box_volume += result.used_box_volume();
        unpacked_items += result.unpacked.len() as u64;
    }
    let utilization = if used_box_volume > 0.0 {
        packed_item_volume / used_box_volume
    } else {
        0.0
    };
    AssortmentReport {
        assortment_ids: assortment.iter().map(|b| b.id.clone()).collect(),
        corpus_label: corpus_label.to_string(),
        orders: order_count,
        total_boxes_used,
        utilization,
        unpacked_items,
        packed_item_volume,
        used_box_volume,
    }
}

/// Relative change of a candidate report against a baseline on the same
/// corpus, in percent. Positive reduction means fewer boxes; positive
/// improvement means higher utilization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub box_reduction_pct: f64,
    pub utilization_improvement_pct: f64,
}

pub fn compare(candidate: &AssortmentReport, baseline: &AssortmentReport) -> Result<Comparison> {
    if candidate.corpus_label != baseline.corpus_label {
        return Err(Error::invalid(format!(
            "comparing reports from different corpora: '{}' vs '{}'",
            candidate.corpus_label, baseline.corpus_label
        )));
    }
    if baseline.total_boxes_used == 0 {
        return Err(Error::UndefinedMetric(
            "box reduction against a baseline that used no boxes".to_string(),
        ));
    }
    if baseline.utilization <= 0.0 {
        return Err(Error::UndefinedMetric(
            "utilization improvement against zero baseline utilization".to_string(),
        ));
    }
    let box_reduction_pct = 100.0
        * (baseline.total_boxes_used as f64 - candidate.total_boxes_used as f64)
        / baseline.total_boxes_used as f64;
    let utilization_improvement_pct =
        100.0 * (candidate.utilization - baseline.utilization) / baseline.utilization;
    Ok(Comparison {
        box_reduction_pct,
        utilization_improvement_pct,
    })
}

/// One grid-search cell: the parameters, the selected assortment, and its
/// validation performance against the baseline.
#[derive(Debug, Clone)]
pub struct GridResult {
    pub params: TuningParams,
    pub box_reduction_pct: f64,
    pub utilization_improvement_pct: f64,
    pub selection: Selection,
    pub selected_box_ids: Vec<String>,
    pub report: AssortmentReport,
}

/// The default tuning grid: rho in {0.25, 0.5, 0.75, 1}, delta and alpha
/// in {0, 1, 2, 3, 4}; 100 settings, rho-major.
pub fn default_grid() -> Vec<TuningParams> {
    let mut grid = Vec::with_capacity(100);
    for &rho in &[0.25, 0.5, 0.75, 1.0] {
        for delta in 0..=4 {
            for alpha in 0..=4 {
                grid.push(TuningParams {
                    rho,
                    delta: delta as f64,
                    alpha: alpha as f64,
                });
            }
        }
    }
    grid
}

/// Solve one parameter setting given precomputed effective volumes and a
/// cost matrix.
fn solve_setting(
    ev: &[f64],
    cost: &CostMatrix,
    pool: &CandidatePool,
    rho: f64,
    k: usize,
) -> Result<(Selection, Vec<BoxType>)> {
    let weights = compute_weights(ev, pool, rho)?;
    let problem = SelectionProblem::from_cost_matrix(cost, weights.w, k)?;
    let selection = solve_greedy(&problem);
    let assortment: Vec<BoxType> = selection.rows.iter().map(|&j| pool[j].clone()).collect();
    Ok((selection, assortment))
}

/// Run every grid setting: effective volumes are estimated once from the
/// training corpus (rho only rescales them), the selected assortment is
/// evaluated on the validation corpus, and both are compared against the
/// baseline assortment evaluated on validation.
pub fn grid_search(
    train: &[Order],
    validation: &[Order],
    pool: &CandidatePool,
    baseline_assortment: &[BoxType],
    k: usize,
    grid: &[TuningParams],
) -> Result<Vec<GridResult>> {
    if grid.is_empty() {
        return Err(Error::invalid("parameter grid is empty"));
    }
    if k < 1 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let ev = estimate_effective_volumes(train, pool)?;
    let baseline_report = evaluate_assortment(baseline_assortment, validation, "validation")?;

    // Cost matrices depend only on (delta, alpha); build each distinct pair once.
    let mut matrices: BTreeMap<(u64, u64), CostMatrix> = BTreeMap::new();
    for p in grid {
        matrices
            .entry((p.delta.to_bits(), p.alpha.to_bits()))
            .or_insert_with(|| build_cost_matrix(pool, p.delta, p.alpha));
    }

    grid.par_iter()
        .map(|params| {
            let cost = &matrices[&(params.delta.to_bits(), params.alpha.to_bits())];
            let (selection, assortment) = solve_setting(&ev, cost, pool, params.rho, k)?;
            let report = evaluate_assortment(&assortment, validation, "validation")?;
            let comparison = compare(&report, &baseline_report)?;
            Ok(GridResult {
                params: *params,
                box_reduction_pct: comparison.box_reduction_pct,
                utilization_improvement_pct: comparison.utilization_improvement_pct,
                selection,
                selected_box_ids: assortment.into_iter().map(|b| b.id).collect(),
                report,
            })
        })
        .collect()
}

/// The chosen grid cell. `sacrifices_boxes` flags the fallback case where
/// every setting lost boxes against the baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelChoice {
    pub params: TuningParams,
    pub index: usize,
    pub sacrifices_boxes: bool,
}

/// Among settings that do not increase box usage, pick the one improving
/// utilization most; ties go to the larger box reduction, then grid order.
/// If every setting sacrifices boxes, fall back to the best utilization
/// improvement overall and flag it.
pub fn select_model(results: &[GridResult]) -> Result<ModelChoice> {
    if results.is_empty() {
        return Err(Error::invalid("no grid results to select from"));
    }
    let pick = |indices: &mut dyn Iterator<Item = usize>| -> Option<usize> {
        let mut best: Option<usize> = None;
        for idx in indices {
            let better = match best {
                None => true,
                Some(b) => {
                    let (r, i) = (
                        results[idx].utilization_improvement_pct,
                        results[idx].box_reduction_pct,
                    );
                    let (br, bi) = (
                        results[b].utilization_improvement_pct,
                        results[b].box_reduction_pct,
                    );
                    r > br || (r == br && i > bi)
                }
            };
            if better {
                best = Some(idx);
            }
        }
        best
    };

    let non_sacrificing =
        pick(&mut (0..results.len()).filter(|&i| results[i].box_reduction_pct >= 0.0));
    match non_sacrificing {
        Some(index) => Ok(ModelChoice {
            params: results[index].params,
            index,
            sacrifices_boxes: false,
        }),
        None => {
            let index = pick(&mut (0..results.len())).expect("results non-empty");
            Ok(ModelChoice {
                params: results[index].params,
                index,
                sacrifices_boxes: true,
            })
        }
    }
}

/// The final fit with its intermediates, for callers that export the
/// weights or per-step objectives.
#[derive(Debug, Clone)]
pub struct FinalFit {
    pub selection: Selection,
    pub assortment: Vec<BoxType>,
    pub weights: crate::analytics::WeightVector,
    pub problem: SelectionProblem,
}

/// Re-fit on the merged corpus with the chosen parameters and solve for the
/// final k-box assortment.
pub fn finalize(
    merged: &[Order],
    pool: &CandidatePool,
    params: &TuningParams,
    k: usize,
) -> Result<Selection> {
    finalize_detailed(merged, pool, params, k).map(|fit| fit.selection)
}

/// [`finalize`], keeping the weights and the selection problem.
pub fn finalize_detailed(
    merged: &[Order],
    pool: &CandidatePool,
    params: &TuningParams,
    k: usize,
) -> Result<FinalFit> {
    let ev = estimate_effective_volumes(merged, pool)?;
    let cost = build_cost_matrix(pool, params.delta, params.alpha);
    let weights = compute_weights(&ev, pool, params.rho)?;
    let problem = SelectionProblem::from_cost_matrix(&cost, weights.w.clone(), k)?;
    let selection = solve_greedy(&problem);
    let assortment: Vec<BoxType> = selection.rows.iter().map(|&j| pool[j].clone()).collect();
    Ok(FinalFit {
        selection,
        assortment,
        weights,
        problem,
    })
}
