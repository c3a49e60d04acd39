//! Geodesic skinness propagation over the 8-connected pixel grid.
//!
//! Entering a pixel with probability `p` costs `255·(1 − p)` per unit step;
//! diagonal steps are `√2` long. Distances are exact multi-source shortest
//! paths from the seed set, so `τ` values on a 0–255 scale keep their
//! meaning.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::raster::{LabelMask, ProbabilityMap};

use super::seeds::SeedMask;

/// 8-neighborhood offsets with their step length.
pub const NEIGHBORS: [(isize, isize, f64); 8] = [
    (-1, -1, SQRT_2),
    (0, -1, 1.0),
    (1, -1, SQRT_2),
    (-1, 0, 1.0),
    (1, 0, 1.0),
    (-1, 1, SQRT_2),
    (0, 1, 1.0),
    (1, 1, SQRT_2),
];

/// Cost of stepping into a pixel of probability `p` with a step of length `len`.
#[inline]
pub fn step_cost(p: f64, len: f64) -> f64 {
    255.0 * (1.0 - p) * len
}

/// Shortest-path distance from the nearest seed; `+∞` where unreachable.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DistanceMap {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Skin iff the pixel was reached with distance at most `tau`.
    pub fn within(&self, tau: f64) -> LabelMask {
        LabelMask::from_bools(
            self.width,
            self.height,
            self.values.iter().map(|&d| d.is_finite() && d <= tau),
        )
        .expect("dimensions come from a valid map")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties by index
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra from every seed.
pub fn propagate(map: &ProbabilityMap, seeds: &SeedMask) -> Result<DistanceMap> {
    if map.dims() != seeds.dims() {
        return Err(Error::DimensionMismatch {
            expected: map.dims(),
            found: seeds.dims(),
        });
    }
    let (w, h) = map.dims();
    let probs = map.values();
    let mut dist = vec![f64::INFINITY; w * h];
    let mut done = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    for i in seeds.indices() {
        dist[i] = 0.0;
        heap.push(Entry { dist: 0.0, index: i });
    }
    while let Some(Entry { dist: d, index: i }) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for &(dx, dy, len) in &NEIGHBORS {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            if done[j] {
                continue;
            }
            let nd = d + step_cost(probs[j], len);
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Entry { dist: nd, index: j });
            }
        }
    }
    Ok(DistanceMap {
        width: w,
        height: h,
        values: dist,
    })
}

/// Marks skin every pixel reached within `tau` from a seed.
pub fn propagate_and_threshold(map: &ProbabilityMap, seeds: &SeedMask, tau: f64) -> Result<LabelMask> {
    Ok(propagate(map, seeds)?.within(tau))
}

/// Reachability mask: skin wherever some seed reaches at finite cost.
pub fn reachable(distances: &DistanceMap) -> LabelMask {
    distances.within(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(values: &[f64]) -> ProbabilityMap {
        ProbabilityMap::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn hand_walk_1x3() {
        let map = row(&[1.0, 0.5, 0.0]);
        let seeds = SeedMask::new(3, 1, vec![true, false, false]);
        let d = propagate(&map, &seeds).unwrap();
        assert_eq!(d.values(), &[0.0, 127.5, 382.5]);
    }

    #[test]
    fn all_seeds_and_no_seeds() {
        let map = ProbabilityMap::constant(4, 3, 0.2).unwrap();
        let all = SeedMask::new(4, 3, vec![true; 12]);
        assert!(propagate(&map, &all).unwrap().values().iter().all(|&d| d == 0.0));
        let none = SeedMask::empty(4, 3);
        assert!(propagate(&map, &none).unwrap().values().iter().all(|d| d.is_infinite()));
    }

    #[test]
    fn diagonal_steps_cost_sqrt2() {
        let map = ProbabilityMap::constant(2, 2, 0.0).unwrap();
        let seeds = SeedMask::new(2, 2, vec![true, false, false, false]);
        let d = propagate(&map, &seeds).unwrap();
        assert_eq!(d.get(1, 1), 255.0 * SQRT_2);
        assert_eq!(d.get(1, 0), 255.0);
    }

    #[test]
    fn dimension_mismatch() {
        let map = ProbabilityMap::constant(2, 2, 0.0).unwrap();
        assert!(propagate(&map, &SeedMask::empty(3, 2)).is_err());
    }
}
