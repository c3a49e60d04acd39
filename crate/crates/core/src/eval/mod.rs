//! Measurement protocol: confusion counts with don't-care exclusion,
//! pixel-level aggregation, per-group averaging, average precision for the
//! face/non-face protocol, threshold sweeps and rank-of-average-rank tables.

mod ap;
mod confusion;
mod rank;
mod sweep;

pub use ap::{average_precision, ImageClass};
pub use confusion::{aggregate_pixel_level, confusion, group_average, metrics, ConfusionCounts, Metrics};
pub use rank::{rank_table, RankTable};
pub use sweep::{sweep_with, threshold_sweep, SweepRow};
