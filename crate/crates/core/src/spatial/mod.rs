//! Spatial analysis: seed extraction, geodesic propagation, texture features
//! with a Fisher discriminant, and the SA1/SA2/SA3 pipelines.

mod lda;
mod propagate;
mod sa;
mod seeds;
mod texture;

pub use lda::{train_lda, LdaAccumulator, LdaModel, REGULARIZATION, SQUASH_TARGET};
pub use propagate::{propagate, propagate_and_threshold, reachable, step_cost, DistanceMap, NEIGHBORS};
pub use sa::{
    blend_maps, lda_map, sa1_detect, sa1_from_map, sa2_detect, sa2_from_map, sa3_detect, sa3_from_map,
    LocalChromaModel, LOCAL_VARIANCE_FLOOR, SA3_BASE_WEIGHT,
};
pub use seeds::{
    adaptive_threshold, extract_seeds_adaptive, extract_seeds_fixed, SeedMask, ADAPTIVE_FLOOR,
    ADAPTIVE_PERCENTILE, DEFAULT_SEED_THRESHOLD, MIN_COMPONENT_FRACTION,
};
pub use texture::{pixel_features, texture_features, FeatureVector, TextureFeatures, FEATURE_DIM, KERNEL_SIZES};
