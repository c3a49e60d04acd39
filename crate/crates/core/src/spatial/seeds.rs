use crate::quantile::sorted_quantile;
use crate::raster::{ProbabilityMap, Threshold8};

/// Default cutoff for fixed seed extraction (230 / 255).
pub const DEFAULT_SEED_THRESHOLD: Threshold8 = Threshold8(230);
/// Lower bound on the adaptive seed threshold.
pub const ADAPTIVE_FLOOR: f64 = 0.5;
/// Percentile of the image's probabilities used as the adaptive threshold.
pub const ADAPTIVE_PERCENTILE: f64 = 0.95;
/// Seed components smaller than this fraction of the image area are dropped.
pub const MIN_COMPONENT_FRACTION: f64 = 1e-4;

/// Boolean raster of seed pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedMask {
    width: usize,
    height: usize,
    seeds: Vec<bool>,
}

impl SeedMask {
    pub fn new(width: usize, height: usize, seeds: Vec<bool>) -> Self {
        assert_eq!(seeds.len(), width * height, "seed mask size");
        Self { width, height, seeds }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn seeds(&self) -> &[bool] {
        &self.seeds
    }

    pub fn count(&self) -> usize {
        self.seeds.iter().filter(|s| **s).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.seeds.iter().enumerate().filter(|(_, s)| **s).map(|(i, _)| i)
    }
}

/// Seeds are pixels with probability at least `q / 255`.
pub fn extract_seeds_fixed(map: &ProbabilityMap, q: Threshold8) -> SeedMask {
    let cutoff = q.cutoff();
    SeedMask::new(
        map.width(),
        map.height(),
        map.values().iter().map(|&p| p >= cutoff).collect(),
    )
}

/// Threshold used by [`extract_seeds_adaptive`]: the 95th percentile of the
/// map, never below 0.5.
pub fn adaptive_threshold(map: &ProbabilityMap) -> f64 {
    let mut sorted = map.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted_quantile(&sorted, ADAPTIVE_PERCENTILE).max(ADAPTIVE_FLOOR)
}

/// Per-image seeds: pixels at or above [`adaptive_threshold`], keeping only
/// 8-connected components of at least 0.01% of the image area.
pub fn extract_seeds_adaptive(map: &ProbabilityMap) -> SeedMask {
    let t = adaptive_threshold(map);
    let (w, h) = map.dims();
    let mut seeds: Vec<bool> = map.values().iter().map(|&p| p >= t).collect();
    let min_size = MIN_COMPONENT_FRACTION * (w * h) as f64;

    let mut visited = vec![false; w * h];
    let mut stack = Vec::new();
    let mut component = Vec::new();
    for start in 0..w * h {
        if !seeds[start] || visited[start] {
            continue;
        }
        component.clear();
        visited[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            component.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if seeds[j] && !visited[j] {
                        visited[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if (component.len() as f64) < min_size {
            for &i in &component {
                seeds[i] = false;
            }
        }
    }
    SeedMask::new(w, h, seeds)
}
