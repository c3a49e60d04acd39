//! Explicit-rule and lightly trained per-pixel detectors.

mod cheddad;
mod chen;
mod dyc;

pub use cheddad::{cheddad_detect, fit_cheddad, train_cheddad, CheddadModel, DEFAULT_MASS, MIN_SKIN_PIXELS, MIN_SPREAD};
pub use chen::{chen_detect, ChenBounds};
pub use dyc::{dyc_cluster, dyc_detect, DycParams, DynamicCluster};
