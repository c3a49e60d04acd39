use rayon::prelude::*;

use crate::color::chen_transform;
use crate::error::{Error, Result};
use crate::raster::{Image, Label, LabelMask};

/// Open intervals on the three channel differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChenBounds {
    pub lo_r: i16,
    pub hi_r: i16,
    pub lo_g: i16,
    pub hi_g: i16,
    pub lo_b: i16,
    pub hi_b: i16,
    /// Negate the differences before testing. The published ranges put skin
    /// at `R < G`; flipping tests the opposite orientation.
    pub sign_flip: bool,
}

impl Default for ChenBounds {
    fn default() -> Self {
        Self {
            lo_r: -142,
            hi_r: 18,
            lo_g: -48,
            hi_g: 92,
            lo_b: -32,
            hi_b: 192,
            sign_flip: false,
        }
    }
}

impl ChenBounds {
    pub fn validate(&self) -> Result<()> {
        for (name, lo, hi) in [
            ("sR", self.lo_r, self.hi_r),
            ("sG", self.lo_g, self.hi_g),
            ("sB", self.lo_b, self.hi_b),
        ] {
            if lo >= hi {
                return Err(Error::InvalidParameter(format!(
                    "Chen bounds for {name}: {lo} must be below {hi}"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn accepts(&self, p: [u8; 3]) -> bool {
        let c = chen_transform(p);
        let (r, g, b) = if self.sign_flip {
            (-c.s_r, -c.s_g, -c.s_b)
        } else {
            (c.s_r, c.s_g, c.s_b)
        };
        self.lo_r < r && r < self.hi_r && self.lo_g < g && g < self.hi_g && self.lo_b < b && b < self.hi_b
    }
}

/// Skin iff all three strict inequalities hold.
pub fn chen_detect(img: &Image, bounds: &ChenBounds) -> LabelMask {
    let labels = img
        .pixels()
        .par_iter()
        .map(|&p| Label::from_skin(bounds.accepts(p)))
        .collect();
    LabelMask::new(img.width(), img.height(), labels).expect("dimensions come from a valid image")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_bounds() {
        let b = ChenBounds::default();
        assert_eq!(
            (b.lo_r, b.hi_r, b.lo_g, b.hi_g, b.lo_b, b.hi_b),
            (-142, 18, -48, 92, -32, 192)
        );
        b.validate().unwrap();
    }

    #[test]
    fn examples() {
        let b = ChenBounds::default();
        assert!(b.accepts([100, 110, 120]));
        assert!(!b.accepts([200, 120, 80]));
        // sR = 18 exactly: (118, 100, 100) gives sR=18, sG=0, sB=18
        assert!(!b.accepts([118, 100, 100]));
        assert!(b.accepts([117, 100, 100]));
    }

    #[test]
    fn sign_flip_mirrors() {
        let flipped = ChenBounds { sign_flip: true, ..ChenBounds::default() };
        // (120, 110, 100): sR=10, sG=10, sB=20, negated -> -10, -10, -20
        assert!(flipped.accepts([120, 110, 100]));
        assert!(!flipped.accepts([100, 110, 20]));
    }

    #[test]
    fn detect_maps_every_pixel() {
        let img = Image::new(2, 1, vec![[100, 110, 120], [200, 120, 80]]).unwrap();
        let m = chen_detect(&img, &ChenBounds::default());
        assert_eq!(m.labels(), &[Label::Skin, Label::NonSkin]);
    }

    #[test]
    fn invalid_bounds() {
        let b = ChenBounds { lo_g: 92, ..ChenBounds::default() };
        assert!(b.validate().is_err());
    }
}
