use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use crate::error::{Error, Result};
use crate::raster::{Label, LabelMask};

/// Pixel confusion counts with skin as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Records one compared pixel. Don't-care ground truth is ignored.
    #[inline]
    pub fn record(&mut self, predicted_skin: bool, truth: Label) {
        match (predicted_skin, truth) {
            (_, Label::DontCare) => {}
            (true, Label::Skin) => self.tp += 1,
            (true, Label::NonSkin) => self.fp += 1,
            (false, Label::Skin) => self.fn_ += 1,
            (false, Label::NonSkin) => self.tn += 1,
        }
    }

    pub fn metrics(&self) -> Metrics {
        metrics(self)
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            tp: self.tp + rhs.tp,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
            tn: self.tn + rhs.tn,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Compares a prediction against ground truth, skipping don't-care pixels.
pub fn confusion(pred: &LabelMask, gt: &LabelMask) -> Result<ConfusionCounts> {
    if pred.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            found: pred.dims(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (p, t) in pred.labels().iter().zip(gt.labels()) {
        c.record(p.is_skin(), *t);
    }
    Ok(c)
}

/// Rates derived from a confusion matrix. Any 0/0 ratio is reported as 0
/// and sets `degenerate`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64, degenerate: &mut bool) -> f64 {
    if den == 0 {
        *degenerate = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let mut degenerate = false;
    let precision = ratio(c.tp, c.tp + c.fp, &mut degenerate);
    let recall = ratio(c.tp, c.tp + c.fn_, &mut degenerate);
    let f1 = ratio(2 * c.tp, 2 * c.tp + c.fn_ + c.fp, &mut degenerate);
    let fpr = ratio(c.fp, c.fp + c.tn, &mut degenerate);
    Metrics {
        precision,
        recall,
        f1,
        tpr: recall,
        fpr,
        degenerate,
    }
}

/// Sums counts over all images, then computes metrics once.
pub fn aggregate_pixel_level<'a>(counts: impl IntoIterator<Item = &'a ConfusionCounts>) -> Metrics {
    metrics(&counts.into_iter().copied().sum())
}

/// Pixel-level metrics per group, then the unweighted mean across groups.
/// Every entry must carry a group id.
pub fn group_average<'a, G>(counts: impl IntoIterator<Item = (Option<G>, &'a ConfusionCounts)>) -> Result<Metrics>
where
    G: AsRef<str>,
{
    let mut groups: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
    for (i, (group, c)) in counts.into_iter().enumerate() {
        let group = group.ok_or_else(|| Error::MissingGroup(format!("#{}", i + 1)))?;
        *groups.entry(group.as_ref().to_owned()).or_default() += *c;
    }
    if groups.is_empty() {
        return Ok(Metrics {
            degenerate: true,
            ..Metrics::default()
        });
    }
    let n = groups.len() as f64;
    let mut out = Metrics::default();
    for m in groups.values().map(metrics) {
        out.precision += m.precision;
        out.recall += m.recall;
        out.f1 += m.f1;
        out.fpr += m.fpr;
        out.degenerate |= m.degenerate;
    }
    out.precision /= n;
    out.recall /= n;
    out.f1 /= n;
    out.fpr /= n;
    out.tpr = out.recall;
    Ok(out)
}
