//! Versioned binary container for trained models.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SKND"
//! 4       2     format version (u16), currently 1
//! 6       1     model tag: 1 histogram, 2 gmm, 3 cheddad, 4 lda
//! 7       1     reserved, 0
//! 8       ..    payload
//! ```
//!
//! Payloads (all little-endian):
//!
//! * histogram: `u32 bins`, then `bins³` `u64` skin counts, then `bins³`
//!   `u64` non-skin counts.
//! * gmm: `f64 skin_prior`, then for skin and non-skin in turn: `u32 K`
//!   followed by `K` records of `f64 weight, f64 mean[3], f64 var[3]`.
//! * cheddad: `f64 e_lo, e_hi, e_mean, e_std`.
//! * lda: `u32 dim`, `dim` `f64` weights, `f64 offset, gain, separation`.
//!
//! Floats are stored as raw IEEE-754 bits, so a load/save round trip is
//! bit-exact. Trailing bytes are rejected.

use std::path::Path;

use crate::error::{Error, Result};
use crate::rules::CheddadModel;
use crate::spatial::LdaModel;

use super::gmm::{GmmModel, Mixture};
use super::histogram::HistogramModel;

pub const MAGIC: [u8; 4] = *b"SKND";
pub const FORMAT_VERSION: u16 = 1;

const TAG_HISTOGRAM: u8 = 1;
const TAG_GMM: u8 = 2;
const TAG_CHEDDAD: u8 = 3;
const TAG_LDA: u8 = 4;

/// Any model that can be persisted.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Histogram(HistogramModel),
    Gmm(GmmModel),
    Cheddad(CheddadModel),
    Lda(LdaModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Histogram(_) => "histogram",
            Model::Gmm(_) => "gmm",
            Model::Cheddad(_) => "cheddad",
            Model::Lda(_) => "lda",
        }
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn write_mixture(w: &mut Writer, m: &Mixture) {
    w.u32(m.len() as u32);
    for k in 0..m.len() {
        w.f64(m.weights[k]);
        m.means[k].iter().for_each(|&v| w.f64(v));
        m.variances[k].iter().for_each(|&v| w.f64(v));
    }
}

fn read_mixture(r: &mut Reader) -> Result<Mixture> {
    let k = r.u32()? as usize;
    // each component takes 56 bytes
    if k == 0 || k.saturating_mul(56) > r.buf.len() - r.pos {
        return Err(Error::Format(format!("implausible component count {k}")));
    }
    let mut m = Mixture {
        weights: Vec::with_capacity(k),
        means: Vec::with_capacity(k),
        variances: Vec::with_capacity(k),
    };
    for _ in 0..k {
        m.weights.push(r.f64()?);
        m.means.push([r.f64()?, r.f64()?, r.f64()?]);
        m.variances.push([r.f64()?, r.f64()?, r.f64()?]);
    }
    Ok(m)
}

pub fn save_model(model: &Model) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(&MAGIC);
    w.u16(FORMAT_VERSION);
    match model {
        Model::Histogram(h) => {
            w.u8(TAG_HISTOGRAM);
            w.u8(0);
            w.u32(h.bins());
            h.skin_counts().iter().for_each(|&c| w.u64(c));
            h.nonskin_counts().iter().for_each(|&c| w.u64(c));
        }
        Model::Gmm(g) => {
            w.u8(TAG_GMM);
            w.u8(0);
            w.f64(g.skin_prior);
            write_mixture(&mut w, &g.skin);
            write_mixture(&mut w, &g.nonskin);
        }
        Model::Cheddad(c) => {
            w.u8(TAG_CHEDDAD);
            w.u8(0);
            for v in [c.e_lo, c.e_hi, c.e_mean, c.e_std] {
                w.f64(v);
            }
        }
        Model::Lda(l) => {
            w.u8(TAG_LDA);
            w.u8(0);
            w.u32(l.weights.len() as u32);
            l.weights.iter().for_each(|&v| w.f64(v));
            w.f64(l.offset);
            w.f64(l.gain);
            w.f64(l.separation);
        }
    }
    w.0
}

pub fn load_model(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4).ok() != Some(&MAGIC[..]) {
        return Err(Error::Format("bad magic, not a model file".into()));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let tag = r.u8()?;
    let _reserved = r.u8()?;
    let model = match tag {
        TAG_HISTOGRAM => {
            let bins = r.u32()?;
            if !bins.is_power_of_two() || bins > 256 {
                return Err(Error::Format(format!("invalid bin count {bins}")));
            }
            let cells = (bins as usize).pow(3);
            let mut read_counts = || (0..cells).map(|_| r.u64()).collect::<Result<Vec<_>>>();
            let skin = read_counts()?;
            let nonskin = read_counts()?;
            Model::Histogram(HistogramModel::from_counts(bins, skin, nonskin)?)
        }
        TAG_GMM => {
            let skin_prior = r.f64()?;
            let skin = read_mixture(&mut r)?;
            let nonskin = read_mixture(&mut r)?;
            Model::Gmm(GmmModel {
                skin,
                nonskin,
                skin_prior,
            })
        }
        TAG_CHEDDAD => Model::Cheddad(CheddadModel {
            e_lo: r.f64()?,
            e_hi: r.f64()?,
            e_mean: r.f64()?,
            e_std: r.f64()?,
        }),
        TAG_LDA => {
            let dim = r.u32()? as usize;
            if dim == 0 || dim.saturating_mul(8) > bytes.len() {
                return Err(Error::Format(format!("implausible LDA dimension {dim}")));
            }
            let weights = (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            Model::Lda(LdaModel {
                weights,
                offset: r.f64()?,
                gain: r.f64()?,
                separation: r.f64()?,
            })
        }
        other => return Err(Error::Format(format!("unknown model tag {other}"))),
    };
    r.finish()?;
    Ok(model)
}

pub fn write_model_file(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, save_model(model)).map_err(|e| Error::io(path, e))
}

pub fn read_model_file(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::gmm::train_gmm;

    fn histogram() -> HistogramModel {
        let mut skin = vec![0u64; 8];
        let mut nonskin = vec![0u64; 8];
        skin[3] = 17;
        nonskin[5] = u64::MAX / 3;
        HistogramModel::from_counts(2, skin, nonskin).unwrap()
    }

    #[test]
    fn histogram_round_trip() {
        let m = Model::Histogram(histogram());
        assert_eq!(load_model(&save_model(&m)).unwrap(), m);
    }

    #[test]
    fn gmm_round_trip_is_bit_exact() {
        let skin: Vec<[u8; 3]> = (0..60u8).map(|i| [150 + i, 100 + i / 2, 90 + i / 3]).collect();
        let nonskin: Vec<[u8; 3]> = (0..60u8).map(|i| [i * 4, 200 - i, 30 + i]).collect();
        let g = train_gmm(&skin, &nonskin, 3, 1).unwrap();
        let bytes = save_model(&Model::Gmm(g.clone()));
        let Model::Gmm(back) = load_model(&bytes).unwrap() else {
            panic!("wrong kind")
        };
        let bits = |m: &Mixture| {
            m.weights
                .iter()
                .chain(m.means.iter().flatten())
                .chain(m.variances.iter().flatten())
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&back.skin), bits(&g.skin));
        assert_eq!(bits(&back.nonskin), bits(&g.nonskin));
        assert_eq!(back.skin_prior.to_bits(), g.skin_prior.to_bits());
    }

    #[test]
    fn cheddad_and_lda_round_trip() {
        let c = Model::Cheddad(CheddadModel {
            e_lo: 0.01,
            e_hi: 0.2,
            e_mean: 0.09,
            e_std: 0.04,
        });
        assert_eq!(load_model(&save_model(&c)).unwrap(), c);
        let l = Model::Lda(LdaModel {
            weights: vec![0.6, -0.8],
            offset: 0.25,
            gain: 9.19,
            separation: 0.5,
        });
        assert_eq!(load_model(&save_model(&l)).unwrap(), l);
    }

    #[test]
    fn header_layout() {
        let bytes = save_model(&Model::Histogram(histogram()));
        assert_eq!(&bytes[..4], b"SKND");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(bytes[6], TAG_HISTOGRAM);
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(bytes.len(), 12 + 2 * 8 * 8);
    }

    #[test]
    fn corrupt_magic_is_format_error() {
        let mut bytes = save_model(&Model::Histogram(histogram()));
        bytes[0] = b'X';
        assert!(matches!(load_model(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let mut bytes = save_model(&Model::Histogram(histogram()));
        bytes[4] = 2;
        assert!(matches!(
            load_model(&bytes),
            Err(Error::Version { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn truncation_and_trailing_bytes() {
        let bytes = save_model(&Model::Histogram(histogram()));
        assert!(matches!(load_model(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(load_model(&longer), Err(Error::Format(_))));
        assert!(matches!(load_model(&[]), Err(Error::Format(_))));
    }
}
