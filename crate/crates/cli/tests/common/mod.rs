//! Shared fixtures and helpers for CLI tests.
//
// Each test target compiles its own copy, so helpers one target skips are
// dead code there.
#![allow(dead_code)]

use boxassort::io;
use boxassort::model::{BoxType, Item, Order};
use boxassort::synth::{random_assortment, random_catalog, random_orders};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boxassort"))
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub boxes: PathBuf,
    pub skus: PathBuf,
    pub orders: PathBuf,
    pub out: PathBuf,
}

/// A small random corpus plus an assortment that can hold most items.
pub fn small_fixture(seed: u64, orders: usize) -> Fixture {
    let catalog = random_catalog(12, 1.0..6.0, 0.1..2.0, seed);
    let order_list = random_orders("o", orders, &catalog, 3, 2, seed ^ 0xfeed);
    let assortment = random_assortment(6, 3.0..10.0, 20.0, seed ^ 0xbeef);
    write_fixture(catalog, order_list, assortment)
}

pub fn write_fixture(catalog: Vec<Item>, orders: Vec<Order>, boxes: Vec<BoxType>) -> Fixture {
    let dir = tempfile::tempdir().expect("tempdir");
    let boxes_path = dir.path().join("boxes.csv");
    let skus_path = dir.path().join("skus.csv");
    let orders_path = dir.path().join("orders.csv");
    let out = dir.path().join("out");
    io::write_boxes(&boxes_path, &boxes).unwrap();
    io::write_skus(&skus_path, &catalog).unwrap();
    io::write_orders(&orders_path, &orders).unwrap();
    Fixture {
        dir,
        boxes: boxes_path,
        skus: skus_path,
        orders: orders_path,
        out,
    }
}

pub fn read_to_string(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}
