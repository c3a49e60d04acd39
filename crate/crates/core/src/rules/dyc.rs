//! Per-image dynamic skin cluster in YCbCr.
//!
//! Two passes over the image. First, pixels passing a luma gate and a loose
//! static chroma box become candidates; their `[q, 1 - q]` quantiles give a
//! dynamic Cb and Cr range, and a least-squares line `Cr ≈ a·Cb + c` captures
//! the chroma correlation. Second, a pixel is skin iff its chroma falls in
//! both dynamic ranges and lies within `delta` of the line.

use crate::color::{rgb_to_ycbcr, YCbCr};
use crate::error::{Error, Result};
use crate::quantile::sorted_quantile;
use crate::raster::{Image, Label, LabelMask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DycParams {
    pub y_lo: f64,
    pub y_hi: f64,
    pub cb_lo: f64,
    pub cb_hi: f64,
    pub cr_lo: f64,
    pub cr_hi: f64,
    /// Tail fraction trimmed from each end of the candidate chroma ranges.
    pub quantile: f64,
    /// Maximum distance (in Cr units) from the fitted correlation line.
    pub delta: f64,
}

impl Default for DycParams {
    fn default() -> Self {
        Self {
            y_lo: 16.0,
            y_hi: 235.0,
            cb_lo: 77.0,
            cb_hi: 127.0,
            cr_lo: 133.0,
            cr_hi: 173.0,
            quantile: 0.05,
            delta: 12.0,
        }
    }
}

impl DycParams {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::InvalidParameter(format!("DYC: {m}")));
        if !(0.0 <= self.y_lo && self.y_lo < self.y_hi && self.y_hi <= 255.0) {
            return err("luma gate must satisfy 0 <= lo < hi <= 255");
        }
        if !(self.cb_lo <= self.cb_hi && self.cr_lo <= self.cr_hi) {
            return err("static chroma gate is empty");
        }
        if !(self.quantile > 0.0 && self.quantile < 0.5) {
            return err("quantile must lie in (0, 0.5)");
        }
        if !(self.delta > 0.0) {
            return err("delta must be positive");
        }
        Ok(())
    }

    fn is_candidate(&self, c: &YCbCr) -> bool {
        (self.y_lo..=self.y_hi).contains(&c.y)
            && (self.cb_lo..=self.cb_hi).contains(&c.cb)
            && (self.cr_lo..=self.cr_hi).contains(&c.cr)
    }
}

/// Per-image cluster learned in the statistics pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicCluster {
    pub cb_range: (f64, f64),
    pub cr_range: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
}

impl DynamicCluster {
    pub fn accepts(&self, c: &YCbCr, delta: f64) -> bool {
        let in_cb = self.cb_range.0 <= c.cb && c.cb <= self.cb_range.1;
        let in_cr = self.cr_range.0 <= c.cr && c.cr <= self.cr_range.1;
        in_cb && in_cr && (c.cr - (self.slope * c.cb + self.intercept)).abs() <= delta
    }
}

/// Statistics pass; `None` when no pixel passes the gates.
pub fn dyc_cluster(img: &Image, params: &DycParams) -> Option<DynamicCluster> {
    let mut candidates: Vec<YCbCr> = img
        .pixels()
        .iter()
        .map(|&p| rgb_to_ycbcr(p))
        .filter(|c| params.is_candidate(c))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    // fixed accumulation order keeps the fit independent of pixel order
    candidates.sort_by(|a, b| a.cb.total_cmp(&b.cb).then(a.cr.total_cmp(&b.cr)));
    let mut cb: Vec<f64> = candidates.iter().map(|c| c.cb).collect();
    let mut cr: Vec<f64> = candidates.iter().map(|c| c.cr).collect();

    let n = candidates.len() as f64;
    let mean_cb = cb.iter().sum::<f64>() / n;
    let mean_cr = cr.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for c in &candidates {
        sxx += (c.cb - mean_cb).powi(2);
        sxy += (c.cb - mean_cb) * (c.cr - mean_cr);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_cr - slope * mean_cb;

    cb.sort_by(f64::total_cmp);
    cr.sort_by(f64::total_cmp);
    let q = params.quantile;
    Some(DynamicCluster {
        cb_range: (sorted_quantile(&cb, q), sorted_quantile(&cb, 1.0 - q)),
        cr_range: (sorted_quantile(&cr, q), sorted_quantile(&cr, 1.0 - q)),
        slope,
        intercept,
    })
}

pub fn dyc_detect(img: &Image, params: &DycParams) -> LabelMask {
    let labels = match dyc_cluster(img, params) {
        None => vec![Label::NonSkin; img.len()],
        Some(cluster) => img
            .pixels()
            .iter()
            .map(|&p| Label::from_skin(cluster.accepts(&rgb_to_ycbcr(p), params.delta)))
            .collect(),
    };
    LabelMask::new(img.width(), img.height(), labels).expect("dimensions come from a valid image")
}
