use crate::error::{Error, Result};
use crate::raster::{LabelMask, ProbabilityMap, Threshold8};

use super::confusion::{confusion, metrics, ConfusionCounts, Metrics};

/// Pixel-level result for one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<T> {
    pub tau: T,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// Pixel-level metrics of a probability detector at each threshold, using
/// the inclusive `p >= tau / 255` rule.
pub fn threshold_sweep(
    maps: &[ProbabilityMap],
    gts: &[LabelMask],
    taus: &[Threshold8],
) -> Result<Vec<SweepRow<Threshold8>>> {
    if maps.len() != gts.len() {
        return Err(Error::InvalidParameter(format!(
            "{} probability maps for {} ground-truth masks",
            maps.len(),
            gts.len()
        )));
    }
    for (m, g) in maps.iter().zip(gts) {
        if m.dims() != g.dims() {
            return Err(Error::DimensionMismatch {
                expected: g.dims(),
                found: m.dims(),
            });
        }
    }
    Ok(taus
        .iter()
        .map(|&tau| {
            let cutoff = tau.cutoff();
            let mut counts = ConfusionCounts::default();
            for (m, g) in maps.iter().zip(gts) {
                for (&p, &t) in m.values().iter().zip(g.labels()) {
                    counts.record(p >= cutoff, t);
                }
            }
            SweepRow {
                tau,
                counts,
                metrics: metrics(&counts),
            }
        })
        .collect())
}

/// Generic sweep: `classify(i, tau)` produces the prediction for image `i`.
/// Used for detectors whose threshold is not a probability cutoff (distance
/// thresholds, log-ratio thresholds).
pub fn sweep_with<T, F>(gts: &[LabelMask], taus: &[T], mut classify: F) -> Result<Vec<SweepRow<T>>>
where
    T: Copy,
    F: FnMut(usize, T) -> Result<LabelMask>,
{
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut counts = ConfusionCounts::default();
        for (i, gt) in gts.iter().enumerate() {
            counts += confusion(&classify(i, tau)?, gt)?;
        }
        rows.push(SweepRow {
            tau,
            counts,
            metrics: metrics(&counts),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{threshold_map, Label};

    fn sample() -> (Vec<ProbabilityMap>, Vec<LabelMask>) {
        let map = ProbabilityMap::new(4, 1, vec![0.9, 0.6, 0.3, 0.05]).unwrap();
        let gt = LabelMask::new(4, 1, vec![Label::Skin, Label::NonSkin, Label::Skin, Label::DontCare]).unwrap();
        (vec![map], vec![gt])
    }

    #[test]
    fn endpoints() {
        let (maps, gts) = sample();
        let rows = threshold_sweep(&maps, &gts, &[Threshold8(0), Threshold8(255)]).unwrap();
        assert_eq!(rows[0].metrics.recall, 1.0);
        assert_eq!(rows[1].counts.tp, 0);
    }

    #[test]
    fn matches_generic_sweep() {
        let (maps, gts) = sample();
        let taus: Vec<Threshold8> = [50u8, 70, 90, 110, 140].map(Threshold8).to_vec();
        let fast = threshold_sweep(&maps, &gts, &taus).unwrap();
        let slow = sweep_with(&gts, &taus, |i, t| Ok(threshold_map(&maps[i], t))).unwrap();
        assert_eq!(fast, slow);
    }
}
