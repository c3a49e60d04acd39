//! Raster types shared by every detector, plus PNG/JPEG I/O and the mask
//! encoding used on disk.
//!
//! Masks are stored as 8-bit gray PNG files. The writer always emits the
//! canonical values 255 (skin), 0 (non-skin) and 128 (don't care); the
//! reader bands gray values so that loosely annotated ground truth still
//! maps to three classes: `>= 192` is skin, `<= 63` is non-skin and
//! anything in between is don't care.

use std::path::Path;

use image::{GrayImage, ImageReader, Luma};

use crate::error::{Error, Result};

/// An 8-bit RGB triple.
pub type Rgb = [u8; 3];

/// Lowest gray value read as [`Label::Skin`].
pub const MASK_SKIN_MIN: u8 = 192;
/// Highest gray value read as [`Label::NonSkin`].
pub const MASK_NONSKIN_MAX: u8 = 63;

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidRaster(format!(
            "zero-sized raster {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidRaster(format!(
            "{len} values do not fill a {width}x{height} raster"
        )));
    }
    Ok(())
}

/// Decoded row-major 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with a single color.
    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Writes the image as an RGB PNG.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions");
        write_image(path, &image::DynamicImage::ImageRgb8(buf))
    }
}

/// Per-pixel skin probability in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidRaster(format!(
                "probability {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a map from values already known to be valid probabilities.
    pub(crate) fn from_valid(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self {
            width,
            height,
            values,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Persists the map as 8-bit gray, `round(255 * p)`. Lossy.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let raw = self
            .values
            .iter()
            .map(|v| (v * 255.0).round() as u8)
            .collect();
        let buf = GrayImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions");
        write_image(path.as_ref(), &image::DynamicImage::ImageLuma8(buf))
    }

    /// Reads an 8-bit gray PNG as probabilities `gray / 255`.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let gray = decode(path.as_ref())?.to_luma8();
        let (w, h) = (gray.width() as usize, gray.height() as usize);
        let values = gray.pixels().map(|Luma([g])| f64::from(*g) / 255.0).collect();
        Ok(Self::from_valid(w, h, values))
    }
}

/// Per-pixel class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Skin,
    NonSkin,
    DontCare,
}

impl Label {
    /// Canonical gray encoding.
    pub fn gray(self) -> u8 {
        match self {
            Label::Skin => 255,
            Label::NonSkin => 0,
            Label::DontCare => 128,
        }
    }

    /// Banded decoding of a ground-truth gray value.
    pub fn from_gray(g: u8) -> Self {
        if g >= MASK_SKIN_MIN {
            Label::Skin
        } else if g <= MASK_NONSKIN_MAX {
            Label::NonSkin
        } else {
            Label::DontCare
        }
    }

    pub fn from_skin(is_skin: bool) -> Self {
        if is_skin {
            Label::Skin
        } else {
            Label::NonSkin
        }
    }

    pub fn is_skin(self) -> bool {
        self == Label::Skin
    }
}

/// Row-major label raster. Predictions only ever contain skin/non-skin;
/// ground truth may also carry [`Label::DontCare`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        check_dims(width, height, labels.len())?;
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: Label) -> Result<Self> {
        Self::new(width, height, vec![label; width * height])
    }

    /// Binary mask from per-pixel skin flags.
    pub fn from_bools(width: usize, height: usize, skin: impl IntoIterator<Item = bool>) -> Result<Self> {
        Self::new(width, height, skin.into_iter().map(Label::from_skin).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }

    pub fn skin_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_skin()).count()
    }

    /// Fraction of all pixels labeled skin.
    pub fn skin_fraction(&self) -> f64 {
        self.skin_count() as f64 / self.labels.len() as f64
    }

    pub fn has_dont_care(&self) -> bool {
        self.labels.contains(&Label::DontCare)
    }
}

/// Probability cutoff expressed on an 8-bit scale, `value / 255`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Threshold8(pub u8);

impl Threshold8 {
    pub fn value(self) -> u8 {
        self.0
    }

    /// The threshold as a probability.
    pub fn cutoff(self) -> f64 {
        f64::from(self.0) / 255.0
    }
}

impl From<u8> for Threshold8 {
    fn from(v: u8) -> Self {
        Threshold8(v)
    }
}

/// Labels skin every pixel whose probability is at least `tau / 255`.
pub fn threshold_map(map: &ProbabilityMap, tau: Threshold8) -> LabelMask {
    let cutoff = tau.cutoff();
    LabelMask {
        width: map.width,
        height: map.height,
        labels: map
            .values
            .iter()
            .map(|&v| Label::from_skin(v >= cutoff))
            .collect(),
    }
}

fn decode(path: &Path) -> Result<image::DynamicImage> {
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let reader = reader.with_guessed_format().map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

fn write_image(path: &Path, img: &image::DynamicImage) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::io(path, std::io::Error::other(other.to_string())),
        })
}

/// Loads a PNG or JPEG as RGB. Gray is replicated, alpha dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let rgb = decode(path.as_ref())?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let pixels = rgb.pixels().map(|p| p.0).collect();
    Image::new(w, h, pixels)
}

/// Loads a ground-truth or predicted mask using the banded gray rule.
pub fn load_mask(path: impl AsRef<Path>) -> Result<LabelMask> {
    let gray = decode(path.as_ref())?.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let labels = gray.pixels().map(|Luma([g])| Label::from_gray(*g)).collect();
    LabelMask::new(w, h, labels)
}

/// Writes a mask as 8-bit gray with the canonical 255/0/128 values.
pub fn save_mask(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    let raw = mask.labels.iter().map(|l| l.gray()).collect();
    let buf = GrayImage::from_raw(mask.width as u32, mask.height as u32, raw)
        .expect("buffer length matches dimensions");
    write_image(path.as_ref(), &image::DynamicImage::ImageLuma8(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_round_trip_through_png() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let img = Image::new(2, 1, vec![[255, 0, 0], [0, 0, 0]]).unwrap();
        img.save_png(&path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn gray_png_is_replicated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        GrayImage::from_raw(1, 1, vec![7]).unwrap().save(&path).unwrap();
        assert_eq!(load_image(&path).unwrap().pixels(), &[[7, 7, 7]]);
    }

    #[test]
    fn alpha_is_discarded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgba.png");
        image::RgbaImage::from_raw(1, 1, vec![10, 20, 30, 0])
            .unwrap()
            .save(&path)
            .unwrap();
        assert_eq!(load_image(&path).unwrap().pixels(), &[[10, 20, 30]]);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_image("/definitely/not/here.png").unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
        assert!(matches!(load_mask("/nope.png").unwrap_err(), Error::Io { .. }));
    }

    #[test]
    fn corrupt_file_is_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.png");
        std::fs::write(&path, b"\x89PNG\r\n\x1a\nthis is not a png").unwrap();
        assert!(matches!(load_image(&path).unwrap_err(), Error::Decode { .. }));
    }

    #[test]
    fn mask_banding() {
        assert_eq!(Label::from_gray(255), Label::Skin);
        assert_eq!(Label::from_gray(192), Label::Skin);
        assert_eq!(Label::from_gray(191), Label::DontCare);
        assert_eq!(Label::from_gray(128), Label::DontCare);
        assert_eq!(Label::from_gray(64), Label::DontCare);
        assert_eq!(Label::from_gray(63), Label::NonSkin);
        assert_eq!(Label::from_gray(0), Label::NonSkin);
    }

    #[test]
    fn mask_file_banding() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        GrayImage::from_raw(4, 1, vec![255, 128, 63, 64])
            .unwrap()
            .save(&path)
            .unwrap();
        let m = load_mask(&path).unwrap();
        assert_eq!(
            m.labels(),
            &[Label::Skin, Label::DontCare, Label::NonSkin, Label::DontCare]
        );
    }

    #[test]
    fn save_mask_encoding_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.png");
        let m = LabelMask::filled(1, 1, Label::Skin).unwrap();
        save_mask(&m, &path).unwrap();
        let raw = image::open(&path).unwrap().to_luma8();
        assert_eq!(raw.as_raw(), &vec![255]);

        let m = LabelMask::new(3, 1, vec![Label::Skin, Label::NonSkin, Label::DontCare]).unwrap();
        save_mask(&m, &path).unwrap();
        assert_eq!(load_mask(&path).unwrap(), m);
    }

    #[test]
    fn save_mask_to_missing_dir_fails() {
        let m = LabelMask::filled(1, 1, Label::Skin).unwrap();
        let err = save_mask(&m, "/no/such/dir/m.png").unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn threshold_rule() {
        let map = ProbabilityMap::new(3, 1, vec![0.5, 0.0, 110.0 / 255.0]).unwrap();
        let m = threshold_map(&map, Threshold8(110));
        assert_eq!(m.labels(), &[Label::Skin, Label::NonSkin, Label::Skin]);
        assert_eq!(threshold_map(&map, Threshold8(1)).get(1, 0), Label::NonSkin);
        // tau = 0 accepts everything
        assert_eq!(threshold_map(&map, Threshold8(0)).skin_count(), 3);
    }

    #[test]
    fn constructors_validate() {
        assert!(Image::new(0, 1, vec![]).is_err());
        assert!(Image::new(2, 2, vec![[0; 3]; 3]).is_err());
        assert!(ProbabilityMap::new(1, 1, vec![1.5]).is_err());
        assert!(ProbabilityMap::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn probability_png_is_quantized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.png");
        let map = ProbabilityMap::new(3, 1, vec![1.0, 0.5, 0.0]).unwrap();
        map.save_png(&path).unwrap();
        let back = ProbabilityMap::load_png(&path).unwrap();
        assert_eq!(back.values(), &[1.0, 128.0 / 255.0, 0.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn label() -> impl Strategy<Value = Label> {
            prop_oneof![Just(Label::Skin), Just(Label::NonSkin), Just(Label::DontCare)]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn mask_png_round_trip(w in 1usize..8, labels in prop::collection::vec(label(), 1..64)) {
                let h = labels.len().div_ceil(w);
                let mut labels = labels;
                labels.resize(w * h, Label::DontCare);
                let m = LabelMask::new(w, h, labels).unwrap();
                let dir = tempfile::tempdir().unwrap();
                let path = dir.path().join("m.png");
                save_mask(&m, &path).unwrap();
                prop_assert_eq!(load_mask(&path).unwrap(), m);
            }

            #[test]
            fn threshold_is_monotone(values in prop::collection::vec(0.0f64..=1.0, 1..64), a: u8, b: u8) {
                let (lo, hi) = (a.min(b), a.max(b));
                let map = ProbabilityMap::new(values.len(), 1, values).unwrap();
                let m_lo = threshold_map(&map, Threshold8(lo));
                let m_hi = threshold_map(&map, Threshold8(hi));
                for (l, h) in m_lo.labels().iter().zip(m_hi.labels()) {
                    prop_assert!(!(h.is_skin() && !l.is_skin()));
                }
            }
        }
    }
}
