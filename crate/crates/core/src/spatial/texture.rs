//! Neighborhood statistics of a probability map.

use rayon::prelude::*;

use crate::raster::ProbabilityMap;

/// Square kernel sizes, smallest first.
pub const KERNEL_SIZES: [usize; 4] = [3, 5, 7, 9];
/// Statistics per kernel: median, min, range, population std.
pub const STATS_PER_KERNEL: usize = 4;
pub const FEATURE_DIM: usize = KERNEL_SIZES.len() * STATS_PER_KERNEL;

pub type FeatureVector = [f64; FEATURE_DIM];

/// Sixteen features per pixel, laid out kernel-major:
/// `[median₃, min₃, range₃, std₃, median₅, …, std₉]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureFeatures {
    width: usize,
    height: usize,
    features: Vec<FeatureVector>,
}

impl TextureFeatures {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn features(&self) -> &[FeatureVector] {
        &self.features
    }

    pub fn get(&self, x: usize, y: usize) -> &FeatureVector {
        &self.features[y * self.width + x]
    }
}

fn window_stats(window: &mut [f64]) -> [f64; STATS_PER_KERNEL] {
    let n = window.len() as f64;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &v in window.iter() {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    let range = max - min;
    let std = if range == 0.0 {
        0.0
    } else {
        let mean = sum / n;
        (window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    let mid = window.len() / 2;
    let (_, median, _) = window.select_nth_unstable_by(mid, f64::total_cmp);
    [*median, min, range, std]
}

/// Features of a single pixel, with edge-replication padding.
pub fn pixel_features(map: &ProbabilityMap, x: usize, y: usize) -> FeatureVector {
    let (w, h) = map.dims();
    let values = map.values();
    let mut out = [0.0; FEATURE_DIM];
    let mut window = Vec::with_capacity(81);
    for (k, &size) in KERNEL_SIZES.iter().enumerate() {
        let r = (size / 2) as isize;
        window.clear();
        for dy in -r..=r {
            let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
            for dx in -r..=r {
                let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                window.push(values[yy * w + xx]);
            }
        }
        out[k * STATS_PER_KERNEL..(k + 1) * STATS_PER_KERNEL].copy_from_slice(&window_stats(&mut window));
    }
    out
}

pub fn texture_features(map: &ProbabilityMap) -> TextureFeatures {
    let (w, h) = map.dims();
    let features = (0..w * h)
        .into_par_iter()
        .map(|i| pixel_features(map, i % w, i / w))
        .collect();
    TextureFeatures {
        width: w,
        height: h,
        features,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_map() {
        let map = ProbabilityMap::constant(6, 5, 0.5).unwrap();
        let f = texture_features(&map);
        for v in f.features() {
            for k in 0..4 {
                assert_eq!(&v[k * 4..k * 4 + 4], &[0.5, 0.5, 0.0, 0.0]);
            }
        }
    }

    #[test]
    fn single_bright_pixel() {
        let mut values = vec![0.0; 25];
        values[12] = 1.0;
        let map = ProbabilityMap::new(5, 5, values).unwrap();
        let f = pixel_features(&map, 2, 2);
        assert_eq!(f[0], 0.0); // median
        assert_eq!(f[1], 0.0); // min
        assert_eq!(f[2], 1.0); // range
        assert!((f[3] - (8.0f64 / 81.0).sqrt()).abs() < 1e-12);
        assert!((f[3] - 0.3143).abs() < 1e-4);
    }

    #[test]
    fn edge_replication() {
        // 1x1 map: every window is the single value repeated
        let map = ProbabilityMap::constant(1, 1, 0.3).unwrap();
        let f = pixel_features(&map, 0, 0);
        assert_eq!(&f[12..16], &[0.3, 0.3, 0.0, 0.0]);
        // corner of a 2x1 map [0, 1]: 3x3 window holds six zeros and three ones
        let map = ProbabilityMap::new(2, 1, vec![0.0, 1.0]).unwrap();
        let f = pixel_features(&map, 0, 0);
        assert_eq!((f[0], f[1], f[2]), (0.0, 0.0, 1.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn order_statistics_are_consistent(values in prop::collection::vec(0.0f64..=1.0, 12)) {
                let map = ProbabilityMap::new(4, 3, values).unwrap();
                for f in texture_features(&map).features() {
                    for k in 0..4 {
                        let (med, min, range, std) = (f[k * 4], f[k * 4 + 1], f[k * 4 + 2], f[k * 4 + 3]);
                        prop_assert!(min <= med && med <= min + range + 1e-15);
                        prop_assert!(std >= 0.0);
                    }
                }
            }

            #[test]
            fn constant_maps_have_zero_spread(c in 0.0f64..=1.0) {
                let map = ProbabilityMap::constant(5, 4, c).unwrap();
                for f in texture_features(&map).features() {
                    for k in 0..4 {
                        prop_assert_eq!(f[k * 4 + 2], 0.0);
                        prop_assert_eq!(f[k * 4 + 3], 0.0);
                    }
                }
            }
        }
    }
}
