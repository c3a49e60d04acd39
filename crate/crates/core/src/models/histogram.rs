//! RGB color histograms for the Bayes posterior and SPL log-ratio detectors.

use rayon::prelude::*;

use crate::dataset::Manifest;
use crate::error::{Error, Result};
use crate::raster::{Image, Label, LabelMask, ProbabilityMap, Rgb};

/// Default resolution per channel.
pub const DEFAULT_BINS: u32 = 32;
/// Laplace smoothing added to every bin.
pub const SMOOTHING: f64 = 1.0;

/// Skin and non-skin color counts over a `bins³` RGB grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramModel {
    bins: u32,
    shift: u32,
    skin: Vec<u64>,
    nonskin: Vec<u64>,
}

impl HistogramModel {
    /// Empty histogram. `bins` must be a power of two between 1 and 256.
    pub fn new(bins: u32) -> Result<Self> {
        if !bins.is_power_of_two() || bins > 256 {
            return Err(Error::InvalidParameter(format!(
                "histogram bins must be a power of two in 1..=256, got {bins}"
            )));
        }
        let cells = (bins as usize).pow(3);
        Ok(Self {
            bins,
            shift: 8 - bins.trailing_zeros(),
            skin: vec![0; cells],
            nonskin: vec![0; cells],
        })
    }

    /// Builds a model from raw counts, as read back from a model file.
    pub fn from_counts(bins: u32, skin: Vec<u64>, nonskin: Vec<u64>) -> Result<Self> {
        let mut m = Self::new(bins)?;
        if skin.len() != m.skin.len() || nonskin.len() != m.nonskin.len() {
            return Err(Error::InvalidParameter(format!(
                "count arrays must have {} cells",
                m.skin.len()
            )));
        }
        m.skin = skin;
        m.nonskin = nonskin;
        Ok(m)
    }

    pub fn bins(&self) -> u32 {
        self.bins
    }

    pub fn cells(&self) -> usize {
        self.skin.len()
    }

    pub fn skin_counts(&self) -> &[u64] {
        &self.skin
    }

    pub fn nonskin_counts(&self) -> &[u64] {
        &self.nonskin
    }

    #[inline]
    pub fn index(&self, [r, g, b]: Rgb) -> usize {
        let n = self.bins as usize;
        let s = self.shift;
        ((r >> s) as usize * n + (g >> s) as usize) * n + (b >> s) as usize
    }

    pub fn add(&mut self, p: Rgb, label: Label) {
        let i = self.index(p);
        match label {
            Label::Skin => self.skin[i] += 1,
            Label::NonSkin => self.nonskin[i] += 1,
            Label::DontCare => {}
        }
    }

    /// Adds every labeled pixel of an image. Don't-care pixels are skipped.
    pub fn accumulate(&mut self, img: &Image, mask: &LabelMask) -> Result<()> {
        if img.dims() != mask.dims() {
            return Err(Error::DimensionMismatch {
                expected: img.dims(),
                found: mask.dims(),
            });
        }
        for (&p, &l) in img.pixels().iter().zip(mask.labels()) {
            self.add(p, l);
        }
        Ok(())
    }

    /// Merges counts from another histogram of the same resolution.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.bins != self.bins {
            return Err(Error::InvalidParameter(format!(
                "cannot merge {} and {} bin histograms",
                self.bins, other.bins
            )));
        }
        for (a, b) in self.skin.iter_mut().zip(&other.skin) {
            *a += b;
        }
        for (a, b) in self.nonskin.iter_mut().zip(&other.nonskin) {
            *a += b;
        }
        Ok(())
    }

    pub fn skin_total(&self) -> u64 {
        self.skin.iter().sum()
    }

    pub fn nonskin_total(&self) -> u64 {
        self.nonskin.iter().sum()
    }

    /// Fraction of training pixels that were skin.
    pub fn skin_prior(&self) -> f64 {
        let s = self.skin_total() as f64;
        let n = self.nonskin_total() as f64;
        s / (s + n)
    }

    fn ensure_trained(&self) -> Result<()> {
        let (s, n) = (self.skin_total(), self.nonskin_total());
        if s == 0 && n == 0 {
            return Err(Error::EmptyTrainingSet("no labeled pixels".into()));
        }
        if s == 0 || n == 0 {
            let missing = if s == 0 { "skin" } else { "non-skin" };
            return Err(Error::EmptyTrainingSet(format!("no {missing} pixels")));
        }
        Ok(())
    }

    /// Smoothed class-conditional frequencies `(f_skin, f_nonskin)` for every
    /// bin, `(count + eps) / (total + eps * cells)`.
    fn frequencies(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let cells = self.cells() as f64;
        let ds = self.skin_total() as f64 + SMOOTHING * cells;
        let dn = self.nonskin_total() as f64 + SMOOTHING * cells;
        self.skin
            .iter()
            .zip(&self.nonskin)
            .map(move |(&s, &n)| ((s as f64 + SMOOTHING) / ds, (n as f64 + SMOOTHING) / dn))
    }

    fn frequency_at(&self, i: usize) -> (f64, f64) {
        let cells = self.cells() as f64;
        let fs = (self.skin[i] as f64 + SMOOTHING) / (self.skin_total() as f64 + SMOOTHING * cells);
        let fn_ = (self.nonskin[i] as f64 + SMOOTHING) / (self.nonskin_total() as f64 + SMOOTHING * cells);
        (fs, fn_)
    }

    /// Smoothed Bayes posterior `P(skin | rgb)`.
    pub fn bayes_posterior(&self, p: Rgb) -> f64 {
        let (fs, fn_) = self.frequency_at(self.index(p));
        posterior(fs, fn_, self.skin_prior())
    }

    /// SPL statistic `log2(f_skin / f_nonskin)`.
    pub fn spl_logratio(&self, p: Rgb) -> f64 {
        let (fs, fn_) = self.frequency_at(self.index(p));
        (fs / fn_).log2()
    }

    /// Precomputes the posterior for every bin.
    pub fn posterior_lut(&self) -> Result<PosteriorLut> {
        self.ensure_trained()?;
        let prior = self.skin_prior();
        Ok(PosteriorLut {
            bins: self.bins,
            shift: self.shift,
            table: self.frequencies().map(|(fs, fn_)| posterior(fs, fn_, prior)).collect(),
        })
    }

    /// Precomputes the SPL log-ratio for every bin.
    pub fn logratio_lut(&self) -> Result<LogRatioLut> {
        self.ensure_trained()?;
        Ok(LogRatioLut {
            bins: self.bins,
            shift: self.shift,
            table: self.frequencies().map(|(fs, fn_)| (fs / fn_).log2()).collect(),
        })
    }
}

#[inline]
fn posterior(fs: f64, fn_: f64, prior: f64) -> f64 {
    let a = fs * prior;
    a / (a + fn_ * (1.0 - prior))
}

#[inline]
fn lut_index(bins: u32, shift: u32, [r, g, b]: Rgb) -> usize {
    let n = bins as usize;
    ((r >> shift) as usize * n + (g >> shift) as usize) * n + (b >> shift) as usize
}

/// Bayes posterior per histogram bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorLut {
    bins: u32,
    shift: u32,
    table: Vec<f64>,
}

impl PosteriorLut {
    #[inline]
    pub fn get(&self, p: Rgb) -> f64 {
        self.table[lut_index(self.bins, self.shift, p)]
    }

    pub fn probability_map(&self, img: &Image) -> ProbabilityMap {
        let values = img.pixels().par_iter().map(|&p| self.get(p)).collect();
        ProbabilityMap::from_valid(img.width(), img.height(), values)
    }
}

/// SPL log-ratio per histogram bin.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRatioLut {
    bins: u32,
    shift: u32,
    table: Vec<f64>,
}

impl LogRatioLut {
    #[inline]
    pub fn get(&self, p: Rgb) -> f64 {
        self.table[lut_index(self.bins, self.shift, p)]
    }

    /// Skin iff the log-ratio is strictly above `tau`.
    pub fn detect(&self, img: &Image, tau: f64) -> LabelMask {
        let labels = img
            .pixels()
            .par_iter()
            .map(|&p| Label::from_skin(spl_accepts(self.get(p), tau)))
            .collect();
        LabelMask::new(img.width(), img.height(), labels).expect("dimensions come from a valid image")
    }
}

/// SPL decision rule, strict `l > tau`.
#[inline]
pub fn spl_accepts(logratio: f64, tau: f64) -> bool {
    logratio > tau
}

/// Counts every labeled pixel of a manifest into a fresh histogram.
///
/// Images are processed in parallel; counts are integers, so the result does
/// not depend on manifest order or worker count.
pub fn train_histogram(manifest: &Manifest, bins: u32) -> Result<HistogramModel> {
    if manifest.is_empty() {
        return Err(Error::EmptyTrainingSet("manifest has no entries".into()));
    }
    let empty = HistogramModel::new(bins)?;
    let model = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let (img, mask) = entry.load_pair()?;
            let mut h = empty.clone();
            h.accumulate(&img, &mask)?;
            Ok(h)
        })
        .try_reduce(
            || empty.clone(),
            |mut a, b| {
                a.merge(&b)?;
                Ok(a)
            },
        )?;
    model.ensure_trained()?;
    Ok(model)
}

/// In-memory variant of [`train_histogram`].
pub fn train_histogram_from_pairs<'a>(
    pairs: impl IntoIterator<Item = (&'a Image, &'a LabelMask)>,
    bins: u32,
) -> Result<HistogramModel> {
    let mut h = HistogramModel::new(bins)?;
    for (img, mask) in pairs {
        h.accumulate(img, mask)?;
    }
    h.ensure_trained()?;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pixel_model() -> HistogramModel {
        let img = Image::new(2, 1, vec![[255, 0, 0], [0, 255, 0]]).unwrap();
        let mask = LabelMask::new(2, 1, vec![Label::Skin, Label::NonSkin]).unwrap();
        train_histogram_from_pairs([(&img, &mask)], 2).unwrap()
    }

    #[test]
    fn hand_accumulation() {
        let m = two_pixel_model();
        // bins = 2: index = r_bit * 4 + g_bit * 2 + b_bit
        assert_eq!(m.index([255, 0, 0]), 4);
        assert_eq!(m.index([0, 255, 0]), 2);
        assert_eq!(m.skin_counts()[4], 1);
        assert_eq!(m.nonskin_counts()[2], 1);
        assert_eq!(m.skin_total(), 1);
        assert_eq!(m.nonskin_total(), 1);
        assert_eq!(m.skin_prior(), 0.5);
    }

    #[test]
    fn index_formula() {
        let m = HistogramModel::new(32).unwrap();
        let (r, g, b) = (200u8, 17u8, 99u8);
        assert_eq!(m.index([r, g, b]), (200 >> 3) * 1024 + (17 >> 3) * 32 + (99 >> 3));
    }

    #[test]
    fn all_dont_care_is_empty() {
        let img = Image::filled(3, 1, [1, 2, 3]).unwrap();
        let mask = LabelMask::filled(3, 1, Label::DontCare).unwrap();
        let err = train_histogram_from_pairs([(&img, &mask)], 32).unwrap_err();
        assert!(matches!(err, Error::EmptyTrainingSet(_)));
    }

    #[test]
    fn mismatched_mask_is_rejected() {
        let img = Image::filled(3, 1, [1, 2, 3]).unwrap();
        let mask = LabelMask::filled(2, 1, Label::Skin).unwrap();
        let err = train_histogram_from_pairs([(&img, &mask)], 32).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn rejects_bad_bin_counts() {
        assert!(HistogramModel::new(3).is_err());
        assert!(HistogramModel::new(512).is_err());
        assert!(HistogramModel::new(0).is_err());
    }

    fn counts_model(skin_bin: u64, nonskin_bin: u64, skin_total: u64, nonskin_total: u64) -> HistogramModel {
        // bins = 2; bin 7 carries the query, the rest of the mass sits in bin 0
        let mut skin = vec![0; 8];
        let mut nonskin = vec![0; 8];
        skin[7] = skin_bin;
        skin[0] = skin_total - skin_bin;
        nonskin[7] = nonskin_bin;
        nonskin[0] = nonskin_total - nonskin_bin;
        HistogramModel::from_counts(2, skin, nonskin).unwrap()
    }

    #[test]
    fn posterior_hand_evaluation() {
        let m = counts_model(100, 0, 100, 100);
        let p = m.bayes_posterior([255, 255, 255]);
        let expected = (101.0 / 108.0) / ((101.0 / 108.0) + (1.0 / 108.0));
        assert!((p - expected).abs() < 1e-12);
        assert!((p - 0.9902).abs() < 1e-4);
    }

    #[test]
    fn posterior_symmetry() {
        let m = counts_model(40, 40, 100, 100);
        assert_eq!(m.bayes_posterior([255, 255, 255]), 0.5);
        // untrained bin with equal priors is neutral
        let m = counts_model(0, 0, 100, 100);
        assert_eq!(m.bayes_posterior([255, 255, 255]), 0.5);
    }

    #[test]
    fn logratio_values() {
        // f_s / f_n = (3 + 1) / (0 + 1) with equal totals
        let m = counts_model(3, 0, 50, 50);
        assert!((m.spl_logratio([255, 255, 255]) - 2.0).abs() < 1e-12);
        let m = counts_model(5, 5, 50, 50);
        assert_eq!(m.spl_logratio([255, 255, 255]), 0.0);
        assert!(!spl_accepts(-2.5, -2.5));
        assert!(spl_accepts(-2.4999, -2.5));
    }

    #[test]
    fn luts_match_direct_evaluation() {
        let m = counts_model(13, 4, 70, 90);
        let post = m.posterior_lut().unwrap();
        let lr = m.logratio_lut().unwrap();
        for p in [[0u8, 0, 0], [255, 255, 255], [128, 0, 200]] {
            assert_eq!(post.get(p), m.bayes_posterior(p));
            assert!((lr.get(p) - m.spl_logratio(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicating_data_doubles_counts_keeps_posteriors() {
        let img = Image::new(3, 1, vec![[200, 120, 90], [20, 200, 30], [200, 120, 90]]).unwrap();
        let mask = LabelMask::new(3, 1, vec![Label::Skin, Label::NonSkin, Label::NonSkin]).unwrap();
        let once = train_histogram_from_pairs([(&img, &mask)], 32).unwrap();
        let twice = train_histogram_from_pairs([(&img, &mask), (&img, &mask)], 32).unwrap();
        for (a, b) in once.skin_counts().iter().zip(twice.skin_counts()) {
            assert_eq!(2 * a, *b);
        }
        let p = [200, 120, 90];
        // smoothing makes the posterior depend weakly on scale; only the
        // unsmoothed ratio is exactly invariant
        assert_eq!(once.skin_prior(), twice.skin_prior());
        assert!((once.bayes_posterior(p) - twice.bayes_posterior(p)).abs() < 1e-3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn training_is_permutation_invariant(
                pix in prop::collection::vec((any::<[u8; 3]>(), any::<bool>()), 2..40),
                rot in 0usize..40,
            ) {
                let mk = |v: &[([u8; 3], bool)]| {
                    let img = Image::new(v.len(), 1, v.iter().map(|p| p.0).collect()).unwrap();
                    let mask = LabelMask::from_bools(v.len(), 1, v.iter().map(|p| p.1)).unwrap();
                    (img, mask)
                };
                let mid = pix.len() / 2;
                let (a, b) = (mk(&pix[..mid]), mk(&pix[mid..]));
                let mut h1 = HistogramModel::new(8).unwrap();
                h1.accumulate(&a.0, &a.1).unwrap();
                h1.accumulate(&b.0, &b.1).unwrap();
                let mut rotated = pix.clone();
                rotated.rotate_left(rot % pix.len());
                let c = mk(&rotated);
                let mut h2 = HistogramModel::new(8).unwrap();
                h2.accumulate(&c.0, &c.1).unwrap();
                prop_assert_eq!(h1, h2);
            }

            #[test]
            fn posterior_and_logratio_agree(
                skin in prop::collection::vec(0u64..50, 8),
                nonskin in prop::collection::vec(0u64..50, 8),
                q: [u8; 3],
            ) {
                // equalize totals so the priors are equal
                let mut skin = skin;
                let mut nonskin = nonskin;
                let (ts, tn): (u64, u64) = (skin.iter().sum(), nonskin.iter().sum());
                if ts < tn { skin[0] += tn - ts } else { nonskin[0] += ts - tn }
                let m = HistogramModel::from_counts(2, skin, nonskin).unwrap();
                prop_assume!(m.skin_total() > 0);
                let p = m.bayes_posterior(q);
                let l = m.spl_logratio(q);
                prop_assert!(p > 0.0 && p < 1.0);
                prop_assert_eq!(l > 0.0, p > 0.5);
            }
        }
    }
}
