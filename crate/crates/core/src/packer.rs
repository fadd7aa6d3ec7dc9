//! Pack one order into box instances drawn from an assortment, under the
//! four constraints length, depth, height, and weight.
//!
//! Strategy: candidate boxes are tried in ascending volume order and the
//! first box that holds the whole remaining item set is used. When no single
//! box suffices, the largest greedily-admitted prefix of the items (sorted by
//! volume descending) is packed into the smallest box achieving that prefix,
//! and the remainder recurses, splitting the order across instances.
//!
//! Inside a box, placement is best-fit over empty maximal spaces: each item
//! goes into the admitting free space with the least residual volume, trying
//! all six axis-aligned orientations, ties broken by lexicographically
//! smallest origin then smallest orientation index. Free spaces intersecting
//! a new placement are replaced by their maximal sub-spaces on each side of
//! it, and spaces contained in another are pruned.
//!
//! Everything is deterministic: no randomness, all ties broken by fixed
//! lexicographic rules, and the result does not depend on the ordering of
//! the assortment slice.

use crate::model::{fits_within, BoxType, Dims, Item, Order};
use crate::Result;
use std::cmp::Ordering;

/// The six axis-aligned orientations as permutations of canonical dims.
/// Index 0 is the identity.
const ORIENTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn oriented(dims: Dims, orientation: usize) -> Dims {
    let p = ORIENTATIONS[orientation];
    [dims[p[0]], dims[p[1]], dims[p[2]]]
}

/// One item placed inside one box instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub item: Item,
    /// Index of the box instance within the packing result, 0-based.
    pub box_instance: usize,
    /// Placement corner relative to the box corner.
    pub origin: Dims,
    /// Item dims after rotation; a permutation of `item.dims`.
    pub oriented_dims: Dims,
}

impl Placement {
    /// Far corner of the placed cuboid.
    pub fn end(&self) -> Dims {
        [
            self.origin[0] + self.oriented_dims[0],
            self.origin[1] + self.oriented_dims[1],
            self.origin[2] + self.oriented_dims[2],
        ]
    }
}

/// Why an item could not be packed into any box of the assortment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnfitReason {
    /// Too large in some dimension under every orientation, for every box.
    DimExceeded,
    /// Fits dimensionally in at least one box, but outweighs every such box.
    WeightExceeded,
}

impl UnfitReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnfitReason::DimExceeded => "DIM_EXCEEDED",
            UnfitReason::WeightExceeded => "WEIGHT_EXCEEDED",
        }
    }
}

/// An item that fits in no box of the assortment on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct UnpackedItem {
    pub item: Item,
    pub reason: UnfitReason,
}

/// One opened box instance and the items placed in it.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedBox {
    pub box_type: BoxType,
    pub placements: Vec<Placement>,
}

impl PackedBox {
    pub fn packed_volume(&self) -> f64 {
        self.placements.iter().map(|p| p.item.volume()).sum()
    }

    pub fn packed_weight(&self) -> f64 {
        self.placements.iter().map(|p| p.item.weight).sum()
    }
}

/// Result of packing one order: used box instances plus any items that fit
/// in no box of the assortment alone.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingResult {
    pub order_id: String,
    pub boxes: Vec<PackedBox>,
    pub unpacked: Vec<UnpackedItem>,
}

impl PackingResult {
    /// Number of box instances used.
    pub fn box_count(&self) -> usize {
        self.boxes.len()
    }

    /// Total volume of placed items.
    pub fn packed_item_volume(&self) -> f64 {
        self.boxes.iter().map(|b| b.packed_volume()).sum()
    }

    /// Total volume of the used box instances.
    pub fn used_box_volume(&self) -> f64 {
        self.boxes.iter().map(|b| b.box_type.volume()).sum()
    }
}

/// Aggregate utilization of a packing: placed item volume over used box
/// volume.
pub fn utilization(result: &PackingResult) -> Result<f64> {
    if result.boxes.is_empty() {
        return Err(crate::Error::UndefinedMetric(format!(
            "utilization of order '{}': no box instances used",
            result.order_id
        )));
    }
    Ok(result.packed_item_volume() / result.used_box_volume())
}

/// An empty axis-aligned sub-space of a box, stored as corner pair so that
/// boundary coordinates propagate exactly through splits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSpace {
    pub min: Dims,
    pub max: Dims,
}

impl FreeSpace {
    fn volume(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1]) * (self.max[2] - self.min[2])
    }

    fn is_empty(&self) -> bool {
        self.min[0] >= self.max[0] || self.min[1] >= self.max[1] || self.min[2] >= self.max[2]
    }

    fn contains(&self, other: &FreeSpace) -> bool {
        (0..3).all(|a| self.min[a] <= other.min[a] && other.max[a] <= self.max[a])
    }

    /// Open-interval intersection test against a placed cuboid.
    fn intersects(&self, p_min: Dims, p_max: Dims) -> bool {
        (0..3).all(|a| self.min[a] < p_max[a] && p_min[a] < self.max[a])
    }

    /// Can `dims` be placed at this space's min corner?
    fn admits(&self, dims: Dims) -> bool {
        (0..3).all(|a| self.min[a] + dims[a] <= self.max[a])
    }
}

fn cmp_dims(a: Dims, b: Dims) -> Ordering {
    for axis in 0..3 {
        match a[axis].partial_cmp(&b[axis]).expect("finite dims") {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// The empty maximal sub-spaces of one box instance. Spaces may overlap each
/// other but never overlap a placement.
#[derive(Debug, Clone)]
pub struct FreeSpaceState {
    pub spaces: Vec<FreeSpace>,
}

impl FreeSpaceState {
    fn new(box_dims: Dims) -> Self {
        FreeSpaceState {
            spaces: vec![FreeSpace {
                min: [0.0; 3],
                max: box_dims,
            }],
        }
    }

    /// Remove the placed cuboid from every space it intersects, replacing
    /// each by the maximal sub-spaces on its six sides, then prune spaces
    /// contained in another.
    fn subtract(&mut self, p_min: Dims, p_max: Dims) {
        let mut next = Vec::with_capacity(self.spaces.len() + 3);
        for space in &self.spaces {
            if !space.intersects(p_min, p_max) {
                next.push(*space);
                continue;
            }
            for axis in 0..3 {
                // Side below the placement on this axis.
                if p_min[axis] > space.min[axis] {
                    let mut sub = *space;
                    sub.max[axis] = p_min[axis];
                    if !sub.is_empty() {
                        next.push(sub);
                    }
                }
                // Side above.
                if p_max[axis] < space.max[axis] {
                    let mut sub = *space;
                    sub.min[axis] = p_max[axis];
                    if !sub.is_empty() {
                        next.push(sub);
                    }
                }
            }
        }
        // Canonical order, then drop duplicates and contained spaces.
        next.sort_by(|a, b| cmp_dims(a.min, b.min).then_with(|| cmp_dims(a.max, b.max)));
        next.dedup();
        let mut keep = vec![true; next.len()];
        for i in 0..next.len() {
            if !keep[i] {
                continue;
            }
            for j in 0..next.len() {
                if i != j && keep[j] && next[j].contains(&next[i]) {
                    keep[i] = false;
                    break;
                }
            }
        }
        self.spaces = next
            .into_iter()
            .zip(keep)
            .filter_map(|(s, k)| k.then_some(s))
            .collect();
    }
}

/// Incremental packing state for a single box instance.
struct BoxFitter<'a> {
    box_type: &'a BoxType,
    state: FreeSpaceState,
    placements: Vec<Placement>,
    weight: f64,
}

impl<'a> BoxFitter<'a> {
    fn new(box_type: &'a BoxType) -> Self {
        BoxFitter {
            box_type,
            state: FreeSpaceState::new(box_type.dims),
            placements: Vec::new(),
            weight: 0.0,
        }
    }

    /// Try to place one item; on success the free-space state is updated.
    fn try_place(&mut self, item: &Item) -> bool {
        if self.weight + item.weight > self.box_type.max_weight {
            return false;
        }

        // Best-fit: admitting space of least volume, ties by smallest min
        // corner then smallest max corner; then the smallest orientation
        // index that fits in that space.
        let mut best: Option<(f64, &FreeSpace)> = None;
        for space in &self.state.spaces {
            if !ORIENTATIONS
                .iter()
                .enumerate()
                .any(|(o, _)| space.admits(oriented(item.dims, o)))
            {
                continue;
            }
            let vol = space.volume();
            let better = match &best {
                None => true,
                Some((bv, bs)) => match vol.partial_cmp(bv).expect("finite volume") {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => cmp_dims(space.min, bs.min)
                        .then_with(|| cmp_dims(space.max, bs.max))
                        .is_lt(),
                },
            };
            if better {
                best = Some((vol, space));
            }
        }

        let Some((_, space)) = best else {
            return false;
        };
        let space = *space;
        let orientation = (0..6)
            .find(|&o| space.admits(oriented(item.dims, o)))
            .expect("an admitting orientation exists");
        let dims = oriented(item.dims, orientation);
        let origin = space.min;
        let end = [
            origin[0] + dims[0],
            origin[1] + dims[1],
            origin[2] + dims[2],
        ];

        self.weight += item.weight;
        self.placements.push(Placement {
            item: item.clone(),
            box_instance: 0,
            origin,
            oriented_dims: dims,
        });
        self.state.subtract(origin, end);
        true
    }
}

/// Deterministic packing order: volume descending, then dims, weight, and
/// sku descending/ascending as tiebreakers, finally the original position.
fn sort_for_packing(items: &mut [(usize, &Item)]) {
    items.sort_by(|(ai, a), (bi, b)| {
        b.volume()
            .partial_cmp(&a.volume())
            .expect("finite volume")
            .then_with(|| cmp_dims(b.dims, a.dims))
            .then_with(|| b.weight.partial_cmp(&a.weight).expect("finite weight"))
            .then_with(|| a.sku_id.cmp(&b.sku_id))
            .then_with(|| ai.cmp(bi))
    });
}

/// Ascending trial order over boxes: volume, then dims, weight limit, id.
fn sort_boxes_ascending(boxes: &mut Vec<&BoxType>) {
    boxes.sort_by(|a, b| {
        a.volume()
            .partial_cmp(&b.volume())
            .expect("finite volume")
            .then_with(|| cmp_dims(a.dims, b.dims))
            .then_with(|| {
                a.max_weight
                    .partial_cmp(&b.max_weight)
                    .expect("finite weight")
            })
            .then_with(|| a.id.cmp(&b.id))
    });
}

fn item_fits_box_alone(item: &Item, box_type: &BoxType) -> bool {
    fits_within(item.dims, box_type.dims) && item.weight <= box_type.max_weight
}

/// Can this item set fit entirely in one box?
///
/// Exact for a single item; heuristic for two or more (it may return `None`
/// on a geometrically feasible set). The returned placements carry
/// `box_instance = 0`.
pub fn fit_single_box(items: &[Item], box_type: &BoxType) -> Option<Vec<Placement>> {
    let mut indexed: Vec<(usize, &Item)> = items.iter().enumerate().collect();
    sort_for_packing(&mut indexed);
    let mut fitter = BoxFitter::new(box_type);
    for (_, item) in indexed {
        if !fitter.try_place(item) {
            return None;
        }
    }
    Some(fitter.placements)
}

/// Pack an order into instances from `assortment`.
///
/// Items that fit in no box alone are reported in `unpacked` with a reason;
/// everything else is always placed. Identical inputs yield identical
/// output, and the result does not depend on the order of `assortment`.
pub fn pack_order(order: &Order, assortment: &[BoxType]) -> PackingResult {
    let mut boxes: Vec<&BoxType> = assortment.iter().collect();
    sort_boxes_ascending(&mut boxes);

    let expanded = order.expanded_items();
    let mut unpacked = Vec::new();
    let mut feasible: Vec<(usize, &Item)> = Vec::with_capacity(expanded.len());
    for (idx, item) in expanded.iter().enumerate() {
        if boxes.iter().any(|b| item_fits_box_alone(item, b)) {
            feasible.push((idx, item));
        } else {
            let dims_fit_somewhere = boxes.iter().any(|b| fits_within(item.dims, b.dims));
            unpacked.push(UnpackedItem {
                item: (*item).clone(),
                reason: if dims_fit_somewhere {
                    UnfitReason::WeightExceeded
                } else {
                    UnfitReason::DimExceeded
                },
            });
        }
    }
    sort_for_packing(&mut feasible);

    let mut result = PackingResult {
        order_id: order.order_id.clone(),
        boxes: Vec::new(),
        unpacked,
    };

    let mut remaining = feasible;
    while !remaining.is_empty() {
        // Prefix sums let us skip boxes that cannot beat the current best
        // prefix on volume or weight alone.
        let cum_volume: Vec<f64> = remaining
            .iter()
            .scan(0.0, |acc, (_, it)| {
                *acc += it.volume();
                Some(*acc)
            })
            .collect();
        let cum_weight: Vec<f64> = remaining
            .iter()
            .scan(0.0, |acc, (_, it)| {
                *acc += it.weight;
                Some(*acc)
            })
            .collect();

        let mut best_len = 0usize;
        let mut best_fitter: Option<BoxFitter> = None;
        for &box_type in &boxes {
            if best_len == remaining.len() {
                break;
            }
            // To improve on best_len the box must hold at least one more
            // item than the incumbent prefix.
            if box_type.volume() < cum_volume[best_len]
                || box_type.max_weight < cum_weight[best_len]
                || !item_fits_box_alone(remaining[0].1, box_type)
            {
                continue;
            }
            let mut fitter = BoxFitter::new(box_type);
            let mut len = 0;
            for (_, item) in &remaining {
                if !fitter.try_place(item) {
                    break;
                }
                len += 1;
            }
            if len > best_len {
                best_len = len;
                best_fitter = Some(fitter);
            }
        }

        let fitter = best_fitter.expect("every remaining item fits some box alone");
        let instance = result.boxes.len();
        let mut placements = fitter.placements;
        for p in &mut placements {
            p.box_instance = instance;
        }
        result.boxes.push(PackedBox {
            box_type: fitter.box_type.clone(),
            placements,
        });
        remaining.drain(..best_len);
    }

    result
}
