//! Manifest-level training helpers shared by the CLI and the tests.

use rayon::prelude::*;

use crate::dataset::Manifest;
use crate::detector::ProbabilitySource;
use crate::error::{Error, Result};
use crate::models::{train_gmm_traced, GmmConfig, GmmModel, GmmTrace, Reservoir};
use crate::raster::{Label, Rgb};
use crate::spatial::{texture_features, LdaAccumulator, LdaModel, FEATURE_DIM};

/// Images loaded concurrently before their pixels are fed, in manifest
/// order, to the reservoirs.
const LOAD_CHUNK: usize = 32;

/// Pixel samples of both classes with the class totals they were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSample {
    pub skin: Vec<Rgb>,
    pub nonskin: Vec<Rgb>,
    pub skin_seen: u64,
    pub nonskin_seen: u64,
}

impl PixelSample {
    /// Skin share of all labeled pixels, not of the capped samples.
    pub fn skin_prior(&self) -> f64 {
        self.skin_seen as f64 / (self.skin_seen + self.nonskin_seen) as f64
    }
}

/// Uniform samples of at most `cap` skin and `cap` non-skin pixels.
///
/// Pixels are offered in manifest order, so the result depends only on the
/// manifest and `seed`.
pub fn sample_pixels(manifest: &Manifest, cap: usize, seed: u64) -> Result<PixelSample> {
    let mut skin = Reservoir::new(cap, seed);
    let mut nonskin = Reservoir::new(cap, seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    for chunk in manifest.entries.chunks(LOAD_CHUNK) {
        let pairs = chunk.par_iter().map(|e| e.load_pair()).collect::<Result<Vec<_>>>()?;
        for (img, mask) in &pairs {
            for (&p, &l) in img.pixels().iter().zip(mask.labels()) {
                match l {
                    Label::Skin => skin.offer(p),
                    Label::NonSkin => nonskin.offer(p),
                    Label::DontCare => {}
                }
            }
        }
    }
    if skin.seen() == 0 || nonskin.seen() == 0 {
        return Err(Error::EmptyTrainingSet(format!(
            "{} skin and {} non-skin pixels",
            skin.seen(),
            nonskin.seen()
        )));
    }
    Ok(PixelSample {
        skin_seen: skin.seen(),
        nonskin_seen: nonskin.seen(),
        skin: skin.into_samples(),
        nonskin: nonskin.into_samples(),
    })
}

/// Trains both mixtures on capped samples; the prior uses the full counts.
pub fn train_gmm_on_manifest(manifest: &Manifest, cfg: &GmmConfig, cap: usize) -> Result<(GmmModel, GmmTrace)> {
    let sample = sample_pixels(manifest, cap, cfg.seed)?;
    let (mut model, trace) = train_gmm_traced(&sample.skin, &sample.nonskin, cfg)?;
    model.skin_prior = sample.skin_prior();
    Ok((model, trace))
}

/// Fits the texture discriminant on features of `base` maps over labeled
/// pixels.
pub fn train_lda_on_manifest(manifest: &Manifest, base: &dyn ProbabilitySource) -> Result<LdaModel> {
    if manifest.is_empty() {
        return Err(Error::EmptyTrainingSet("manifest has no entries".into()));
    }
    let parts = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let (img, mask) = entry.load_pair()?;
            let features = texture_features(&base.probability_map(&img));
            let mut acc = LdaAccumulator::new(FEATURE_DIM);
            for (f, &l) in features.features().iter().zip(mask.labels()) {
                if l != Label::DontCare {
                    acc.add(f, l == Label::Skin);
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    // merged in manifest order so float sums do not depend on scheduling
    let mut total = LdaAccumulator::new(FEATURE_DIM);
    for part in &parts {
        total.merge(part);
    }
    total.fit()
}
