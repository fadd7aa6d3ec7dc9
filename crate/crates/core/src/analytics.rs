//! Solver parameters estimated from data: effective volumes, box economic
//! weights, and the box-to-box substitution cost matrix.
//!
//! Effective volume `ev[j]` is the total item volume packed into boxes of
//! type `j` when the whole corpus is packed with the full candidate pool
//! available. The weight `w[j] = ev[j] / volume(j)^rho` discounts large
//! boxes. The substitution cost `c[i][j]` scores repacking box-j loads into
//! box i from the dimensional relation between the two boxes; it is zero
//! unless box i dominates box j or sits in its dimension neighborhood.

use crate::error::Error;
use crate::model::{CandidatePool, Order};
use crate::packer::pack_order;
use crate::Result;
use rayon::prelude::*;
use std::collections::HashMap;

/// Tuning parameters for weight and cost estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningParams {
    /// Volume penalty exponent, > 0.
    pub rho: f64,
    /// Dimension tolerance for the neighborhood set, >= 0, absolute units.
    pub delta: f64,
    /// Denominator offset in the neighborhood cost, >= 0.
    pub alpha: f64,
}

impl TuningParams {
    pub fn new(rho: f64, delta: f64, alpha: f64) -> Result<Self> {
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::invalid(format!("rho must be > 0, got {rho}")));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::invalid(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(TuningParams { rho, delta, alpha })
    }
}

/// Effective volumes and the derived per-box weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub ev: Vec<f64>,
    pub w: Vec<f64>,
}

/// Dense n x n substitution cost matrix. Row i is the substitute box,
/// column j the substituted box; every entry lies in [-1, 0] and the
/// diagonal is exactly -1.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
    box_ids: Vec<String>,
}

impl CostMatrix {
    pub(crate) fn from_parts(n: usize, data: Vec<f64>, box_ids: Vec<String>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        debug_assert_eq!(box_ids.len(), n);
        CostMatrix { n, data, box_ids }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn box_ids(&self) -> &[String] {
        &self.box_ids
    }
}

/// Pack every order with the full pool and attribute packed item volume to
/// the box type of each instance. Unpacked items contribute nothing.
pub fn estimate_effective_volumes(orders: &[Order], pool: &CandidatePool) -> Result<Vec<f64>> {
    if orders.is_empty() {
        return Err(Error::invalid("effective volumes: empty order corpus"));
    }
    let index_by_id: HashMap<&str, usize> = pool
        .iter()
        .enumerate()
        .map(|(j, b)| (b.id.as_str(), j))
        .collect();

    // Per-order contributions are computed in parallel but reduced in corpus
    // order so the result is identical across runs and thread counts.
    let contributions: Vec<Vec<(usize, f64)>> = orders
        .par_iter()
        .map(|order| {
            let result = pack_order(order, pool.boxes());
            result
                .boxes
                .iter()
                .map(|packed| {
                    let j = index_by_id[packed.box_type.id.as_str()];
                    (j, packed.packed_volume())
                })
                .collect()
        })
        .collect();

    let mut ev = vec![0.0; pool.len()];
    for order_contrib in contributions {
        for (j, volume) in order_contrib {
            ev[j] += volume;
        }
    }
    Ok(ev)
}

/// `w[j] = ev[j] / volume(j)^rho`, componentwise.
pub fn compute_weights(ev: &[f64], pool: &CandidatePool, rho: f64) -> Result<WeightVector> {
    if !rho.is_finite() || rho <= 0.0 {
        return Err(Error::invalid(format!("rho must be > 0, got {rho}")));
    }
    if ev.len() != pool.len() {
        return Err(Error::invalid(format!(
            "effective volume vector length {} does not match pool size {}",
            ev.len(),
            pool.len()
        )));
    }
    let w = ev
        .iter()
        .zip(pool.iter())
        .map(|(&e, b)| e / b.volume().powf(rho))
        .collect();
    Ok(WeightVector { ev: ev.to_vec(), w })
}

/// Boxes whose canonical dims dominate box j componentwise. Always contains
/// j itself.
pub fn dominating_set(j: usize, pool: &CandidatePool) -> Vec<usize> {
    let d = pool[j].dims;
    (0..pool.len())
        .filter(|&i| {
            let b = pool[i].dims;
            b[0] >= d[0] && b[1] >= d[1] && b[2] >= d[2]
        })
        .collect()
}

/// Boxes whose canonical dims fall within +-delta of box j componentwise.
pub fn neighbor_set(j: usize, pool: &CandidatePool, delta: f64) -> Vec<usize> {
    let d = pool[j].dims;
    (0..pool.len())
        .filter(|&i| {
            let b = pool[i].dims;
            (0..3).all(|a| b[a] >= d[a] - delta && b[a] <= d[a] + delta)
        })
        .collect()
}

/// Boxes strictly smaller than box j in every canonical dimension.
pub fn strictly_smaller_set(j: usize, pool: &CandidatePool) -> Vec<usize> {
    let d = pool[j].dims;
    (0..pool.len())
        .filter(|&i| {
            let b = pool[i].dims;
            b[0] < d[0] && b[1] < d[1] && b[2] < d[2]
        })
        .collect()
}

fn in_dominating(i: [f64; 3], j: [f64; 3]) -> bool {
    i[0] >= j[0] && i[1] >= j[1] && i[2] >= j[2]
}

fn in_neighborhood(i: [f64; 3], j: [f64; 3], delta: f64) -> bool {
    (0..3).all(|a| i[a] >= j[a] - delta && i[a] <= j[a] + delta)
}

fn in_strictly_smaller(i: [f64; 3], j: [f64; 3]) -> bool {
    i[0] < j[0] && i[1] < j[1] && i[2] < j[2]
}

/// The piecewise substitution cost of box i standing in for box j, cases
/// read top-down: dominating boxes pay the volume ratio, neighborhood boxes
/// that are not strictly smaller pay the ratio discounted by the number of
/// box-i needed plus alpha, everything else costs nothing.
pub fn substitution_cost(i: usize, j: usize, pool: &CandidatePool, delta: f64, alpha: f64) -> f64 {
    let (bi, bj) = (pool[i].dims, pool[j].dims);
    let ratio = pool[j].volume() / pool[i].volume();
    if in_dominating(bi, bj) {
        -ratio
    } else if in_neighborhood(bi, bj, delta) && !in_strictly_smaller(bi, bj) {
        -ratio / (ratio.ceil() + alpha)
    } else {
        0.0
    }
}

/// Evaluate the substitution cost over all pairs.
pub fn build_cost_matrix(pool: &CandidatePool, delta: f64, alpha: f64) -> CostMatrix {
    let n = pool.len();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = substitution_cost(i, j, pool, delta, alpha);
        }
    });
    let box_ids = pool.iter().map(|b| b.id.clone()).collect();
    CostMatrix::from_parts(n, data, box_ids)
}
