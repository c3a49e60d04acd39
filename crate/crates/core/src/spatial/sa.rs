//! The three spatial-analysis pipelines built on a base probability map.

use rayon::prelude::*;

use crate::color::rgb_to_ycbcr;
use crate::detector::ProbabilitySource;
use crate::error::{Error, Result};
use crate::raster::{Image, LabelMask, ProbabilityMap, Threshold8};

use super::lda::LdaModel;
use super::propagate::propagate;
use super::seeds::{extract_seeds_adaptive, extract_seeds_fixed, SeedMask, DEFAULT_SEED_THRESHOLD};
use super::texture::{pixel_features, FEATURE_DIM};

/// Weight of the base map in the SA3 blend; the local model gets the rest.
pub const SA3_BASE_WEIGHT: f64 = 0.5;
/// Variance floor of the SA3 local chroma model, in 8-bit units².
pub const LOCAL_VARIANCE_FLOOR: f64 = 1.0;

fn check_dims(img: &Image, map: &ProbabilityMap) -> Result<()> {
    if img.dims() != map.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            found: map.dims(),
        });
    }
    Ok(())
}

/// SA1 on a precomputed map: fixed seeds, propagation, `distance <= tau`.
pub fn sa1_from_map(map: &ProbabilityMap, seed_threshold: Threshold8, tau: Threshold8) -> LabelMask {
    let seeds = extract_seeds_fixed(map, seed_threshold);
    propagate(map, &seeds)
        .expect("seeds share the map dimensions")
        .within(f64::from(tau.value()))
}

pub fn sa1_detect(img: &Image, base: &dyn ProbabilitySource, tau: Threshold8) -> Result<LabelMask> {
    let map = base.probability_map(img);
    check_dims(img, &map)?;
    Ok(sa1_from_map(&map, DEFAULT_SEED_THRESHOLD, tau))
}

/// Texture features of the base map projected through the discriminant.
pub fn lda_map(map: &ProbabilityMap, lda: &LdaModel) -> Result<ProbabilityMap> {
    if lda.dim() != FEATURE_DIM {
        return Err(Error::InvalidParameter(format!(
            "LDA model has {} inputs, texture features have {FEATURE_DIM}",
            lda.dim()
        )));
    }
    let (w, h) = map.dims();
    let values = (0..w * h)
        .into_par_iter()
        .map(|i| lda.probability(&pixel_features(map, i % w, i / w)))
        .collect();
    Ok(ProbabilityMap::from_valid(w, h, values))
}

pub fn sa2_from_map(
    map: &ProbabilityMap,
    lda: &LdaModel,
    seed_threshold: Threshold8,
    tau: Threshold8,
) -> Result<LabelMask> {
    let discriminant = lda_map(map, lda)?;
    Ok(sa1_from_map(&discriminant, seed_threshold, tau))
}

pub fn sa2_detect(img: &Image, base: &dyn ProbabilitySource, lda: &LdaModel, tau: Threshold8) -> Result<LabelMask> {
    let map = base.probability_map(img);
    check_dims(img, &map)?;
    sa2_from_map(&map, lda, DEFAULT_SEED_THRESHOLD, tau)
}

/// Per-image Gaussian over (Cb, Cr) fitted on seed pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalChromaModel {
    pub mean: [f64; 2],
    pub variance: [f64; 2],
}

impl LocalChromaModel {
    /// `None` when there are no seeds.
    pub fn fit(img: &Image, seeds: &SeedMask) -> Option<Self> {
        let chroma: Vec<[f64; 2]> = seeds
            .indices()
            .map(|i| {
                let c = rgb_to_ycbcr(img.pixels()[i]);
                [c.cb, c.cr]
            })
            .collect();
        if chroma.is_empty() {
            return None;
        }
        let n = chroma.len() as f64;
        let mut mean = [0.0; 2];
        for c in &chroma {
            mean[0] += c[0];
            mean[1] += c[1];
        }
        mean = mean.map(|m| m / n);
        let mut var = [0.0; 2];
        for c in &chroma {
            var[0] += (c[0] - mean[0]).powi(2);
            var[1] += (c[1] - mean[1]).powi(2);
        }
        Some(Self {
            mean,
            variance: var.map(|v| (v / n).max(LOCAL_VARIANCE_FLOOR)),
        })
    }

    /// Unnormalized Gaussian, 1 at the mean.
    pub fn probability(&self, cb: f64, cr: f64) -> f64 {
        let z = (cb - self.mean[0]).powi(2) / self.variance[0] + (cr - self.mean[1]).powi(2) / self.variance[1];
        (-0.5 * z).exp()
    }

    pub fn probability_map(&self, img: &Image) -> ProbabilityMap {
        let values = img
            .pixels()
            .par_iter()
            .map(|&p| {
                let c = rgb_to_ycbcr(p);
                self.probability(c.cb, c.cr)
            })
            .collect();
        ProbabilityMap::from_valid(img.width(), img.height(), values)
    }
}

/// `w·base + (1 − w)·local`, pixel by pixel.
pub fn blend_maps(base: &ProbabilityMap, local: &ProbabilityMap, base_weight: f64) -> ProbabilityMap {
    assert_eq!(base.dims(), local.dims(), "blended maps must share dimensions");
    let values = base
        .values()
        .iter()
        .zip(local.values())
        .map(|(b, l)| (base_weight * b + (1.0 - base_weight) * l).clamp(0.0, 1.0))
        .collect();
    ProbabilityMap::from_valid(base.width(), base.height(), values)
}

/// SA3 on a precomputed base map.
pub fn sa3_from_map(img: &Image, map: &ProbabilityMap, tau: Threshold8) -> Result<LabelMask> {
    check_dims(img, map)?;
    let seeds = extract_seeds_adaptive(map);
    let Some(local) = LocalChromaModel::fit(img, &seeds) else {
        return LabelMask::filled(img.width(), img.height(), crate::raster::Label::NonSkin);
    };
    let blended = blend_maps(map, &local.probability_map(img), SA3_BASE_WEIGHT);
    Ok(propagate(&blended, &seeds)?.within(f64::from(tau.value())))
}

pub fn sa3_detect(img: &Image, base: &dyn ProbabilitySource, tau: Threshold8) -> Result<LabelMask> {
    let map = base.probability_map(img);
    sa3_from_map(img, &map, tau)
}
