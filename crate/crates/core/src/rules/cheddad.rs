use std::collections::HashMap;

use rayon::prelude::*;

use crate::color::cheddad_e;
use crate::dataset::Manifest;
use crate::error::{Error, Result};
use crate::quantile::weighted_sorted_quantile;
use crate::raster::{Image, Label, ProbabilityMap, Rgb};

/// Minimum number of skin pixels needed to fit the interval.
pub const MIN_SKIN_PIXELS: u64 = 1000;
/// Floor for the Gaussian spread and half-width used to widen a collapsed
/// interval.
pub const MIN_SPREAD: f64 = 1e-4;
/// Default probability mass of the central interval.
pub const DEFAULT_MASS: f64 = 0.95;

/// Skin interval on the Cheddad error signal with a Gaussian fit inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheddadModel {
    pub e_lo: f64,
    pub e_hi: f64,
    pub e_mean: f64,
    pub e_std: f64,
}

impl CheddadModel {
    /// `exp(-(e - mean)² / 2σ²)` inside `[e_lo, e_hi]`, zero outside.
    #[inline]
    pub fn probability(&self, e: f64) -> f64 {
        if e < self.e_lo || e > self.e_hi {
            return 0.0;
        }
        let z = (e - self.e_mean) / self.e_std;
        (-0.5 * z * z).exp()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.e_lo < self.e_hi
            && self.e_lo <= self.e_mean
            && self.e_mean <= self.e_hi
            && self.e_std > 0.0
            && [self.e_lo, self.e_hi, self.e_mean, self.e_std].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("inconsistent Cheddad model {self:?}")))
        }
    }
}

/// Fits the model to weighted e-values `(e, count)`.
///
/// The interval is the central `mass` quantile range; mean and standard
/// deviation come from the same values. A collapsed interval is widened by
/// [`MIN_SPREAD`] on both sides and the deviation is floored at it.
pub fn fit_cheddad(samples: &[(f64, u64)], mass: f64) -> Result<CheddadModel> {
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(Error::InvalidParameter(format!("interval mass {mass} outside (0, 1]")));
    }
    let n: u64 = samples.iter().map(|(_, c)| c).sum();
    if n < MIN_SKIN_PIXELS {
        return Err(Error::TooFewSamples {
            needed: MIN_SKIN_PIXELS as usize,
            available: n as usize,
        });
    }
    let mut sorted: Vec<(f64, u64)> = samples.iter().copied().filter(|(_, c)| *c > 0).collect();
    // full order so sums do not depend on the caller's sample order
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let tail = (1.0 - mass) / 2.0;
    let mut e_lo = weighted_sorted_quantile(&sorted, tail);
    let mut e_hi = weighted_sorted_quantile(&sorted, 1.0 - tail);
    if e_hi <= e_lo {
        let mid = e_lo;
        e_lo = mid - MIN_SPREAD;
        e_hi = mid + MIN_SPREAD;
    }

    let total = n as f64;
    let mean = sorted.iter().map(|&(v, c)| v * c as f64).sum::<f64>() / total;
    let var = sorted.iter().map(|&(v, c)| (v - mean).powi(2) * c as f64).sum::<f64>() / total;
    Ok(CheddadModel {
        e_lo,
        e_hi,
        e_mean: mean.clamp(e_lo, e_hi),
        e_std: var.sqrt().max(MIN_SPREAD),
    })
}

fn skin_colors(manifest: &Manifest) -> Result<HashMap<Rgb, u64>> {
    manifest
        .entries
        .par_iter()
        .map(|entry| {
            let (img, mask) = entry.load_pair()?;
            let mut counts = HashMap::new();
            for (&p, &l) in img.pixels().iter().zip(mask.labels()) {
                if l == Label::Skin {
                    *counts.entry(p).or_insert(0u64) += 1;
                }
            }
            Ok(counts)
        })
        .try_reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            Ok(a)
        })
}

/// Learns the skin interval from the skin pixels of a manifest. Pixels are
/// tallied per color, so the fit is exact without storing every sample.
pub fn train_cheddad(manifest: &Manifest, mass: f64) -> Result<CheddadModel> {
    let counts = skin_colors(manifest)?;
    let samples: Vec<(f64, u64)> = counts.into_iter().map(|(p, c)| (cheddad_e(p), c)).collect();
    fit_cheddad(&samples, mass)
}

pub fn cheddad_detect(img: &Image, model: &CheddadModel) -> ProbabilityMap {
    let values = img
        .pixels()
        .par_iter()
        .map(|&p| model.probability(cheddad_e(p)))
        .collect();
    ProbabilityMap::from_valid(img.width(), img.height(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> CheddadModel {
        CheddadModel {
            e_lo: 0.0,
            e_hi: 0.2,
            e_mean: 0.08,
            e_std: 0.03,
        }
    }

    #[test]
    fn uniform_generator_quantiles() {
        // 10001 evenly spaced values covering [0.02, 0.12]
        let n = 10_000;
        let samples: Vec<(f64, u64)> = (0..=n)
            .map(|i| (0.02 + 0.1 * i as f64 / n as f64, 1))
            .collect();
        let m = fit_cheddad(&samples, 0.95).unwrap();
        assert!((m.e_lo - 0.0225).abs() < 0.002, "{m:?}");
        assert!((m.e_hi - 0.1175).abs() < 0.002, "{m:?}");
        assert!((m.e_mean - 0.07).abs() < 1e-9);
        m.validate().unwrap();
    }

    #[test]
    fn degenerate_single_value() {
        let m = fit_cheddad(&[(0.05, 5000)], 0.95).unwrap();
        assert_eq!(m.e_std, MIN_SPREAD);
        assert!((m.e_lo - (0.05 - MIN_SPREAD)).abs() < 1e-15);
        assert!((m.e_hi - (0.05 + MIN_SPREAD)).abs() < 1e-15);
        assert_eq!(m.probability(0.05), 1.0);
        m.validate().unwrap();
    }

    #[test]
    fn empty_and_small_sets_fail() {
        assert!(matches!(fit_cheddad(&[], 0.95), Err(Error::TooFewSamples { .. })));
        assert!(matches!(fit_cheddad(&[(0.1, 999)], 0.95), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn probability_shape() {
        let m = model();
        assert_eq!(m.probability(0.08), 1.0);
        assert_eq!(m.probability(0.25), 0.0);
        assert_eq!(m.probability(-0.01), 0.0);
        assert!((m.probability(0.11) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((m.probability(0.11) - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn probability_non_increasing_away_from_mean() {
        let m = model();
        let mut prev = 1.0;
        for i in 0..=120 {
            let e = 0.08 + i as f64 * 0.001;
            let p = m.probability(e);
            assert!(p <= prev);
            prev = p;
        }
        let mut prev = 1.0;
        for i in 0..=80 {
            let p = m.probability(0.08 - i as f64 * 0.001);
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn detect_uses_error_signal() {
        let img = Image::new(2, 1, vec![[255, 0, 0], [0, 255, 0]]).unwrap();
        let m = CheddadModel {
            e_lo: 0.2,
            e_hi: 0.4,
            e_mean: 0.2989,
            e_std: 0.05,
        };
        let map = cheddad_detect(&img, &m);
        assert!((map.values()[0] - 1.0).abs() < 1e-12);
        assert_eq!(map.values()[1], 0.0);
    }
}
