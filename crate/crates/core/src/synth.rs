//! Seeded generators for synthetic catalogs, orders, and assortments.
//! Everything is deterministic in the seed, so generated corpora can serve
//! as reproducible fixtures.

use crate::model::{BoxType, Item, Order, OrderLine};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::ops::Range;

/// Random item catalog with dims drawn uniformly from `dim_range` and
/// weights from `weight_range`.
pub fn random_catalog(
    count: usize,
    dim_range: Range<f64>,
    weight_range: Range<f64>,
    seed: u64,
) -> Vec<Item> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            Item::new(
                format!("sku{i:05}"),
                rng.gen_range(dim_range.clone()),
                rng.gen_range(dim_range.clone()),
                rng.gen_range(dim_range.clone()),
                rng.gen_range(weight_range.clone()),
            )
            .expect("generated dims are positive")
        })
        .collect()
}

/// Random orders over a catalog: 1..=max_lines distinct lines, each with
/// quantity 1..=max_quantity.
pub fn random_orders(
    prefix: &str,
    count: usize,
    catalog: &[Item],
    max_lines: usize,
    max_quantity: u32,
    seed: u64,
) -> Vec<Order> {
    assert!(!catalog.is_empty(), "catalog must be non-empty");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let lines = rng.gen_range(1..=max_lines.max(1));
            let lines = (0..lines)
                .map(|_| OrderLine {
                    item: catalog[rng.gen_range(0..catalog.len())].clone(),
                    quantity: rng.gen_range(1..=max_quantity.max(1)),
                })
                .collect();
            Order::new(format!("{prefix}{i:06}"), lines).expect("generated order is valid")
        })
        .collect()
}

/// Random assortment of boxes with dims from `dim_range`, all sharing
/// `max_weight`.
pub fn random_assortment(
    count: usize,
    dim_range: Range<f64>,
    max_weight: f64,
    seed: u64,
) -> Vec<BoxType> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            BoxType::new(
                format!("box{i:04}"),
                rng.gen_range(dim_range.clone()),
                rng.gen_range(dim_range.clone()),
                rng.gen_range(dim_range.clone()),
                max_weight,
            )
            .expect("generated dims are positive")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic_in_the_seed() {
        let a = random_catalog(10, 1.0..5.0, 0.1..2.0, 42);
        let b = random_catalog(10, 1.0..5.0, 0.1..2.0, 42);
        assert_eq!(a, b);
        let oa = random_orders("o", 5, &a, 3, 4, 7);
        let ob = random_orders("o", 5, &b, 3, 4, 7);
        assert_eq!(oa, ob);
        let c = random_catalog(10, 1.0..5.0, 0.1..2.0, 43);
        assert_ne!(a, c);
    }
}
