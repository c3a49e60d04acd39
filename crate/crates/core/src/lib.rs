//! Skin detection toolkit: classical per-pixel detectors, spatial-analysis
//! pipelines, weighted-vote ensembles and a pixel-level evaluation protocol.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod color;
pub mod dataset;
pub mod detector;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod models;
mod quantile;
pub mod raster;
pub mod rules;
pub mod spatial;
pub mod training;

pub use dataset::{Manifest, ManifestEntry};
pub use detector::{Detector, Method, ModelSet, ProbabilitySource};
pub use ensemble::{vote, EnsembleConfig, Preset};
pub use error::{Error, Result};
pub use raster::{load_image, load_mask, save_mask, threshold_map, Image, Label, LabelMask, ProbabilityMap, Rgb, Threshold8};
