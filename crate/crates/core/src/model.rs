//! Core domain types: boxes, items, orders, candidate pools.
//!
//! All dimension triples are canonicalized at construction (sorted
//! descending, so `length >= depth >= height`) because every dimensionwise
//! comparison in the system (box containment, substitution sets) is only
//! meaningful under a fixed orientation convention. Units are never
//! interpreted; inputs must share one length unit and one mass unit.

use crate::error::Error;
use crate::Result;
use std::collections::BTreeSet;

/// A dimension triple, canonical order (descending) unless stated otherwise.
pub type Dims = [f64; 3];

/// Sort a dimension triple descending, validating positivity and finiteness.
///
/// Idempotent: applying it to an already-sorted triple returns it unchanged.
pub fn canonicalize(dims: Dims) -> Result<Dims> {
    for (idx, &value) in dims.iter().enumerate() {
        check_positive(&format!("dims[{idx}]"), value)?;
    }
    Ok(sort_desc(dims))
}

fn sort_desc(mut dims: Dims) -> Dims {
    dims.sort_by(|a, b| b.partial_cmp(a).expect("dimensions are finite"));
    dims
}

fn check_positive(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite {
            field: field.to_string(),
            value,
        });
    }
    if value <= 0.0 {
        return Err(Error::NonPositiveDimension {
            field: field.to_string(),
            value,
        });
    }
    Ok(())
}

/// True when canonical dims `inner` fit componentwise inside canonical `outer`.
///
/// For a single rigid cuboid this is exact: it fits under some axis-aligned
/// rotation iff its sorted dimensions are dominated by the sorted container
/// dimensions.
pub fn fits_within(inner: Dims, outer: Dims) -> bool {
    inner[0] <= outer[0] && inner[1] <= outer[1] && inner[2] <= outer[2]
}

/// A candidate shipping box: canonical outer dimensions and a weight limit.
/// Walls are zero-thickness, so outer and inner dimensions coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxType {
    pub id: String,
    /// Canonical dims, `dims[0] >= dims[1] >= dims[2] > 0`.
    pub dims: Dims,
    pub max_weight: f64,
}

impl BoxType {
    pub fn new(
        id: impl Into<String>,
        length: f64,
        depth: f64,
        height: f64,
        max_weight: f64,
    ) -> Result<Self> {
        check_positive("length", length)?;
        check_positive("depth", depth)?;
        check_positive("height", height)?;
        check_positive("max_weight", max_weight)?;
        Ok(BoxType {
            id: id.into(),
            dims: sort_desc([length, depth, height]),
            max_weight,
        })
    }

    pub fn length(&self) -> f64 {
        self.dims[0]
    }

    pub fn depth(&self) -> f64 {
        self.dims[1]
    }

    pub fn height(&self) -> f64 {
        self.dims[2]
    }

    pub fn volume(&self) -> f64 {
        self.dims[0] * self.dims[1] * self.dims[2]
    }
}

/// A rigid rectangular product with canonical dims and a weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub sku_id: String,
    /// Canonical dims, descending.
    pub dims: Dims,
    pub weight: f64,
}

impl Item {
    pub fn new(
        sku_id: impl Into<String>,
        length: f64,
        depth: f64,
        height: f64,
        weight: f64,
    ) -> Result<Self> {
        check_positive("length", length)?;
        check_positive("depth", depth)?;
        check_positive("height", height)?;
        check_positive("weight", weight)?;
        Ok(Item {
            sku_id: sku_id.into(),
            dims: sort_desc([length, depth, height]),
            weight,
        })
    }

    pub fn volume(&self) -> f64 {
        self.dims[0] * self.dims[1] * self.dims[2]
    }
}

/// One line of an order: an item and how many of it were bought.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderLine {
    pub item: Item,
    pub quantity: u32,
}

/// A customer order: a non-empty multiset of items.
#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub order_id: String,
    pub lines: Vec<OrderLine>,
}

impl Order {
    pub fn new(order_id: impl Into<String>, lines: Vec<OrderLine>) -> Result<Self> {
        let order_id = order_id.into();
        if lines.is_empty() {
            return Err(Error::invalid(format!("order '{order_id}' has no lines")));
        }
        if let Some(line) = lines.iter().find(|l| l.quantity == 0) {
            return Err(Error::invalid(format!(
                "order '{order_id}': quantity 0 for sku '{}'",
                line.item.sku_id
            )));
        }
        Ok(Order { order_id, lines })
    }

    /// Total number of physical items in the order.
    pub fn item_count(&self) -> usize {
        self.lines.iter().map(|l| l.quantity as usize).sum()
    }

    /// Expand quantities into one `Item` reference per physical unit.
    pub fn expanded_items(&self) -> Vec<&Item> {
        let mut out = Vec::with_capacity(self.item_count());
        for line in &self.lines {
            for _ in 0..line.quantity {
                out.push(&line.item);
            }
        }
        out
    }

    /// Sum of item volumes over the whole order.
    pub fn total_volume(&self) -> f64 {
        self.lines
            .iter()
            .map(|l| l.item.volume() * l.quantity as f64)
            .sum()
    }
}

/// The pool of all n candidate box sizes an assortment is selected from.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    boxes: Vec<BoxType>,
}

impl CandidatePool {
    /// Build a pool, rejecting empty input and duplicate
    /// `(length, depth, height, max_weight)` tuples.
    pub fn new(boxes: Vec<BoxType>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::invalid("candidate pool is empty"));
        }
        let mut seen: BTreeSet<[u64; 4]> = BTreeSet::new();
        for b in &boxes {
            let key = [
                b.dims[0].to_bits(),
                b.dims[1].to_bits(),
                b.dims[2].to_bits(),
                b.max_weight.to_bits(),
            ];
            if !seen.insert(key) {
                return Err(Error::invalid(format!(
                    "duplicate box dimensions in pool: '{}' ({} x {} x {}, max {})",
                    b.id, b.dims[0], b.dims[1], b.dims[2], b.max_weight
                )));
            }
        }
        Ok(CandidatePool { boxes })
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn boxes(&self) -> &[BoxType] {
        &self.boxes
    }

    pub fn get(&self, j: usize) -> &BoxType {
        &self.boxes[j]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BoxType> {
        self.boxes.iter()
    }

    /// Index of the box with the given id, if present.
    pub fn index_of(&self, box_id: &str) -> Option<usize> {
        self.boxes.iter().position(|b| b.id == box_id)
    }
}

impl std::ops::Index<usize> for CandidatePool {
    type Output = BoxType;

    fn index(&self, j: usize) -> &BoxType {
        &self.boxes[j]
    }
}

/// Enumerate every canonical triple `a >= b >= c` from the arithmetic grid
/// `min_dim, min_dim + step, ..., <= max_dim`, one `BoxType` per triple, all
/// carrying `max_weight`. The pool size is the number of size-3 multisets of
/// the grid, `C(g + 2, 3)` for g grid values.
pub fn generate_candidate_pool(
    min_dim: f64,
    max_dim: f64,
    step: f64,
    max_weight: f64,
) -> Result<CandidatePool> {
    check_positive("min_dim", min_dim)?;
    check_positive("step", step)?;
    check_positive("max_weight", max_weight)?;
    if !max_dim.is_finite() {
        return Err(Error::NonFinite {
            field: "max_dim".to_string(),
            value: max_dim,
        });
    }
    if min_dim > max_dim {
        return Err(Error::invalid(format!(
            "empty dimension grid: min_dim {min_dim} > max_dim {max_dim}"
        )));
    }

    // Tolerate accumulated rounding at the top of the grid.
    let eps = step * 1e-9;
    let mut grid = Vec::new();
    let mut t = 0u32;
    loop {
        let v = min_dim + step * t as f64;
        if v > max_dim + eps {
            break;
        }
        grid.push(v);
        t += 1;
    }
    if grid.is_empty() {
        return Err(Error::invalid("empty dimension grid"));
    }

    let mut boxes = Vec::new();
    for (ai, &a) in grid.iter().enumerate() {
        for (bi, &b) in grid.iter().enumerate().take(ai + 1) {
            for &c in grid.iter().take(bi + 1) {
                boxes.push(BoxType::new(format!("B{a}x{b}x{c}"), a, b, c, max_weight)?);
            }
        }
    }
    CandidatePool::new(boxes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalize_sorts_descending() {
        assert_eq!(canonicalize([2.0, 5.0, 3.0]).unwrap(), [5.0, 3.0, 2.0]);
    }

    #[test]
    fn canonicalize_identity_on_equal_dims() {
        assert_eq!(canonicalize([4.0, 4.0, 4.0]).unwrap(), [4.0, 4.0, 4.0]);
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let once = canonicalize([7.5, 1.25, 3.0]).unwrap();
        assert_eq!(canonicalize(once).unwrap(), once);
    }

    #[test]
    fn canonicalize_rejects_non_positive() {
        let err = canonicalize([0.0, 1.0, 2.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("non-positive dimension"), "got: {msg}");
        assert!(msg.contains("dims[0]"), "got: {msg}");
    }

    #[test]
    fn canonicalize_rejects_non_finite() {
        let err = canonicalize([1.0, f64::NAN, 2.0]).unwrap_err();
        assert!(err.to_string().contains("dims[1]"));
    }

    #[test]
    fn box_construction_canonicalizes() {
        let a = BoxType::new("a", 2.0, 5.0, 3.0, 10.0).unwrap();
        let b = BoxType::new("b", 5.0, 3.0, 2.0, 10.0).unwrap();
        assert_eq!(a.dims, b.dims);
        assert_eq!(a.dims, [5.0, 3.0, 2.0]);
        assert_eq!(a.volume(), 30.0);
    }

    #[test]
    fn box_rejects_bad_weight() {
        let err = BoxType::new("a", 1.0, 1.0, 1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("max_weight"));
    }

    #[test]
    fn order_rejects_empty_and_zero_quantity() {
        assert!(Order::new("o1", vec![]).is_err());
        let item = Item::new("s", 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(Order::new("o1", vec![OrderLine { item, quantity: 0 }]).is_err());
    }

    #[test]
    fn pool_rejects_duplicates() {
        let boxes = vec![
            BoxType::new("a", 1.0, 2.0, 3.0, 5.0).unwrap(),
            // Same canonical dims and weight, different id: still a duplicate.
            BoxType::new("b", 3.0, 1.0, 2.0, 5.0).unwrap(),
        ];
        assert!(CandidatePool::new(boxes).is_err());
    }

    #[test]
    fn generate_pool_two_values() {
        let pool = generate_candidate_pool(1.0, 2.0, 1.0, 10.0).unwrap();
        let dims: Vec<Dims> = pool.iter().map(|b| b.dims).collect();
        assert_eq!(
            dims,
            vec![
                [1.0, 1.0, 1.0],
                [2.0, 1.0, 1.0],
                [2.0, 2.0, 1.0],
                [2.0, 2.0, 2.0],
            ]
        );
    }

    #[test]
    fn generate_pool_three_values() {
        let pool = generate_candidate_pool(1.0, 3.0, 1.0, 10.0).unwrap();
        assert_eq!(pool.len(), 10);
    }

    #[test]
    fn generate_pool_matches_multiset_count() {
        // g grid values yield C(g + 2, 3) multisets of size 3.
        let pool = generate_candidate_pool(1.0, 19.0, 1.0, 10.0).unwrap();
        let g = 19u64;
        let expected = (g + 2) * (g + 1) * g / 6;
        assert_eq!(pool.len() as u64, expected);
        assert_eq!(pool.len(), 1330);
    }

    #[test]
    fn generate_pool_rejects_empty_grid() {
        assert!(generate_candidate_pool(3.0, 2.0, 1.0, 10.0).is_err());
        assert!(generate_candidate_pool(1.0, 2.0, 0.0, 10.0).is_err());
    }
}
