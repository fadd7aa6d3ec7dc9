//! Shipping-box assortment design from order packing simulation.
//!
//! Given a candidate pool of box sizes and a corpus of historical orders,
//! this crate simulates packing every order with the full pool, estimates
//! per-box economic weights and box-to-box substitution costs, and selects
//! an assortment of `k` box sizes by solving a generalized weighted
//! k-medoids problem over the resulting cost matrix.
//!
//! The crate is organized as a pipeline:
//!
//! * [`model`]: boxes, items, orders, candidate pools.
//! * [`packer`]: single-order 4D (dimensions + weight) packing with
//!   best-fit-first placement and order splitting.
//! * [`analytics`]: effective volumes, box weights, substitution costs.
//! * [`solver`]: greedy, EM, and exhaustive selection over a cost matrix.
//! * [`pipeline`]: corpus splitting, grid search, model selection,
//!   final evaluation against a baseline assortment.
//! * [`io`]: CSV ingestion and report/matrix export.
//! * [`synth`]: seeded generators for synthetic boxes, items, and orders.

pub mod analytics;
pub mod error;
pub mod io;
pub mod model;
pub mod packer;
pub mod pipeline;
pub mod solver;
pub mod synth;

pub use error::Error;
pub use model::{BoxType, CandidatePool, Item, Order, OrderLine};
pub use packer::{PackingResult, Placement, UnfitReason};
pub use solver::{Selection, SelectionProblem};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
