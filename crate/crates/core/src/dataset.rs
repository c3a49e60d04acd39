//! Dataset manifests.
//!
//! One record per line, TAB-separated: `image_path`, `mask_path`, and an
//! optional `group_id`. Blank lines and lines starting with `#` are skipped.
//! A mask path of `-` marks an image without ground truth (the face/non-face
//! protocol only needs a per-image label, carried in the group column).
//! Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::raster::{load_image, load_mask, Image, LabelMask};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image: PathBuf,
    pub mask: Option<PathBuf>,
    pub group: Option<String>,
}

impl ManifestEntry {
    /// File stem of the image, used to name per-image outputs.
    pub fn id(&self) -> String {
        self.image
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    pub fn load_image(&self) -> Result<Image> {
        load_image(&self.image)
    }

    /// Loads the ground-truth mask, checking it matches `dims`.
    pub fn load_mask(&self, dims: (usize, usize)) -> Result<LabelMask> {
        let path = self.mask.as_ref().ok_or_else(|| {
            Error::InvalidParameter(format!("{} has no ground-truth mask", self.image.display()))
        })?;
        let mask = load_mask(path)?;
        if mask.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: mask.dims(),
            });
        }
        Ok(mask)
    }

    /// Loads the image together with its ground truth.
    pub fn load_pair(&self) -> Result<(Image, LabelMask)> {
        let img = self.load_image()?;
        let mask = self.load_mask(img.dims())?;
        Ok((img, mask))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |message: String| Error::Manifest {
                line: idx + 1,
                message,
            };
            if fields.len() < 2 || fields.len() > 3 {
                return Err(err(format!(
                    "expected 2 or 3 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let image = fields[0].trim();
            let mask = fields[1].trim();
            if image.is_empty() || mask.is_empty() {
                return Err(err("empty path field".into()));
            }
            let group = fields
                .get(2)
                .map(|g| g.trim())
                .filter(|g| !g.is_empty())
                .map(str::to_owned);
            entries.push(ManifestEntry {
                image: resolve(image),
                mask: (mask != "-").then(|| resolve(mask)),
                group,
            });
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ManifestEntry> {
        self.entries.iter()
    }
}

impl FromIterator<ManifestEntry> for Manifest {
    fn from_iter<T: IntoIterator<Item = ManifestEntry>>(iter: T) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}
