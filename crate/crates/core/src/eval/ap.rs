use crate::error::{Error, Result};

/// Whether an image belongs to the positive (face) set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageClass {
    Face,
    NonFace,
}

/// Average precision, in `[0, 100]`, of ranking images by their fraction of
/// skin pixels.
///
/// Images are sorted by fraction, highest first; equal fractions keep their
/// input order. The result is the mean, over positive images, of the
/// precision at each positive's rank. No interpolation is applied.
pub fn average_precision(samples: &[(ImageClass, f64)]) -> Result<f64> {
    let positives = samples.iter().filter(|(c, _)| *c == ImageClass::Face).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    // stable: ties keep input order
    order.sort_by(|&a, &b| samples[b].1.total_cmp(&samples[a].1));

    let mut seen = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if samples[i].0 == ImageClass::Face {
            seen += 1;
            sum += seen as f64 / (rank + 1) as f64;
        }
    }
    Ok(100.0 * sum / positives as f64)
}

#[cfg(test)]
mod tests {
    use super::ImageClass::*;
    use super::*;

    #[test]
    fn separable_ranking_is_perfect() {
        let s = [(Face, 0.5), (Face, 0.4), (NonFace, 0.3), (NonFace, 0.1)];
        assert_eq!(average_precision(&s).unwrap(), 100.0);
    }

    #[test]
    fn hand_walk() {
        let s = [(Face, 0.5), (Face, 0.2), (NonFace, 0.3), (NonFace, 0.1)];
        let ap = average_precision(&s).unwrap();
        assert!((ap - 100.0 * (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((ap - 83.33).abs() < 0.01);
    }

    #[test]
    fn ties_follow_input_order() {
        let a = [(NonFace, 0.2), (Face, 0.2)];
        let b = [(Face, 0.2), (NonFace, 0.2)];
        assert_eq!(average_precision(&a).unwrap(), 50.0);
        assert_eq!(average_precision(&b).unwrap(), 100.0);
    }

    #[test]
    fn needs_a_positive() {
        assert!(matches!(
            average_precision(&[(NonFace, 0.3)]),
            Err(Error::NoPositives)
        ));
    }
}
