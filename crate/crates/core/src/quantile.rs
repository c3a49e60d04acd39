//! Linear-interpolation quantiles (the "type 7" estimator).

/// Quantile of already sorted values, `p` in `[0, 1]`.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quantile of `(value, count)` pairs sorted by value, as if each value were
/// repeated `count` times.
pub fn weighted_sorted_quantile(sorted: &[(f64, u64)], p: f64) -> f64 {
    let n: u64 = sorted.iter().map(|(_, c)| c).sum();
    debug_assert!(n > 0);
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as u64;
    let hi = h.ceil() as u64;
    let at = |rank: u64| {
        let mut seen = 0;
        for &(v, c) in sorted {
            seen += c;
            if rank < seen {
                return v;
            }
        }
        sorted[sorted.len() - 1].0
    };
    let (a, b) = (at(lo), at(hi));
    a + (h - lo as f64) * (b - a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_unweighted_expansion() {
        let pairs = [(0.1, 3u64), (0.4, 1), (0.9, 2)];
        let expanded: Vec<f64> = pairs
            .iter()
            .flat_map(|&(v, c)| std::iter::repeat_n(v, c as usize))
            .collect();
        for p in [0.0, 0.05, 0.3, 0.5, 0.77, 0.95, 1.0] {
            assert_eq!(weighted_sorted_quantile(&pairs, p), sorted_quantile(&expanded, p));
        }
    }

    #[test]
    fn interpolates() {
        assert_eq!(sorted_quantile(&[0.0, 10.0], 0.25), 2.5);
        assert_eq!(sorted_quantile(&[4.0], 0.9), 4.0);
    }
}
