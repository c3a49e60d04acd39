//! Seeded synthetic inputs for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skinbench_core::{Image, LabelMask, ProbabilityMap};

pub fn random_image(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = (0..width * height).map(|_| rng.random::<[u8; 3]>()).collect();
    Image::new(width, height, pixels).expect("non-empty dimensions")
}

/// Smooth blob-like map so propagation has realistic fronts.
pub fn blob_map(width: usize, height: usize, seed: u64) -> ProbabilityMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random_range(0.0..width as f64),
                rng.random_range(0.0..height as f64),
                rng.random_range(4.0..(width.min(height) as f64 / 3.0).max(5.0)),
            )
        })
        .collect();
    let values = (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64, (i / width) as f64);
            centers
                .iter()
                .map(|&(cx, cy, r)| (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * r * r)).exp())
                .fold(0.0, f64::max)
        })
        .collect();
    ProbabilityMap::new(width, height, values).expect("values lie in [0, 1]")
}

pub fn random_masks(n: usize, width: usize, height: usize, seed: u64) -> Vec<LabelMask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let bits: Vec<bool> = (0..width * height).map(|_| rng.random()).collect();
            LabelMask::from_bools(width, height, bits).expect("matching length")
        })
        .collect()
}
