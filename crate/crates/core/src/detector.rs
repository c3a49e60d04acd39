//! A single entry point over every detector, used by the ensemble and the
//! command-line harness.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{GmmModel, LogRatioLut, PosteriorLut};
use crate::raster::{threshold_map, Image, LabelMask, ProbabilityMap, Threshold8};
use crate::rules::{cheddad_detect, chen_detect, dyc_detect, CheddadModel, ChenBounds, DycParams};
use crate::spatial::{sa1_detect, sa2_detect, sa3_detect, LdaModel};

/// Anything that turns an image into a skin probability map.
pub trait ProbabilitySource: Send + Sync {
    fn probability_map(&self, img: &Image) -> ProbabilityMap;
}

impl ProbabilitySource for PosteriorLut {
    fn probability_map(&self, img: &Image) -> ProbabilityMap {
        PosteriorLut::probability_map(self, img)
    }
}

impl ProbabilitySource for GmmModel {
    fn probability_map(&self, img: &Image) -> ProbabilityMap {
        GmmModel::probability_map(self, img)
    }
}

impl ProbabilitySource for CheddadModel {
    fn probability_map(&self, img: &Image) -> ProbabilityMap {
        cheddad_detect(img, self)
    }
}

/// The implemented detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Gmm,
    Bayes,
    Spl,
    Cheddad,
    Chen,
    Sa1,
    Sa2,
    Sa3,
    Dyc,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Gmm,
        Method::Bayes,
        Method::Spl,
        Method::Cheddad,
        Method::Chen,
        Method::Sa1,
        Method::Sa2,
        Method::Sa3,
        Method::Dyc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gmm => "gmm",
            Method::Bayes => "bayes",
            Method::Spl => "spl",
            Method::Cheddad => "cheddad",
            Method::Chen => "chen",
            Method::Sa1 => "sa1",
            Method::Sa2 => "sa2",
            Method::Sa3 => "sa3",
            Method::Dyc => "dyc",
        }
    }

    /// Default threshold; `None` for detectors without one.
    pub fn default_tau(self) -> Option<f64> {
        match self {
            Method::Gmm => Some(128.0),
            Method::Bayes => Some(110.0),
            Method::Spl => Some(-2.0),
            Method::Cheddad => Some(125.0),
            Method::Sa1 => Some(175.0),
            Method::Sa2 => Some(50.0),
            Method::Sa3 => Some(50.0),
            Method::Chen | Method::Dyc => None,
        }
    }

    /// Threshold grid swept when comparing methods.
    pub fn tau_grid(self) -> &'static [f64] {
        match self {
            Method::Bayes => &[50.0, 70.0, 90.0, 110.0, 140.0],
            Method::Spl => &[-2.5, -2.0, -1.5, -1.0, -0.5],
            Method::Sa1 => &[100.0, 150.0, 175.0, 200.0, 225.0],
            Method::Sa2 => &[30.0, 40.0, 50.0, 85.0, 120.0],
            Method::Sa3 => &[25.0, 50.0, 75.0, 100.0, 125.0],
            Method::Cheddad => &[125.0],
            Method::Gmm => &[128.0],
            Method::Chen | Method::Dyc => &[],
        }
    }

    /// Whether the threshold is on the 8-bit probability/distance scale.
    pub fn uses_threshold8(self) -> bool {
        !matches!(self, Method::Spl | Method::Chen | Method::Dyc)
    }

    /// Whether the detector produces a probability map before thresholding.
    pub fn has_probability_map(self) -> bool {
        matches!(self, Method::Gmm | Method::Bayes | Method::Cheddad)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

/// Converts a user-supplied threshold into the 8-bit form.
pub fn threshold8(tau: f64) -> Result<Threshold8> {
    if tau.fract() != 0.0 || !(0.0..=255.0).contains(&tau) {
        return Err(Error::InvalidParameter(format!(
            "threshold {tau} must be an integer in 0..=255"
        )));
    }
    Ok(Threshold8(tau as u8))
}

/// A configured detector: method, trained parameters and threshold.
#[derive(Clone)]
pub enum Detector {
    Gmm { model: GmmModel, tau: Threshold8 },
    Bayes { lut: PosteriorLut, tau: Threshold8 },
    Spl { lut: LogRatioLut, tau: f64 },
    Cheddad { model: CheddadModel, tau: Threshold8 },
    Chen(ChenBounds),
    Dyc(DycParams),
    Sa1 { base: Arc<dyn ProbabilitySource>, tau: Threshold8 },
    Sa2 { base: Arc<dyn ProbabilitySource>, lda: LdaModel, tau: Threshold8 },
    Sa3 { base: Arc<dyn ProbabilitySource>, tau: Threshold8 },
}

impl fmt::Debug for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Detector({}", self.method())?;
        if let Some(t) = self.tau() {
            write!(f, ", tau={t}")?;
        }
        write!(f, ")")
    }
}

impl Detector {
    pub fn method(&self) -> Method {
        match self {
            Detector::Gmm { .. } => Method::Gmm,
            Detector::Bayes { .. } => Method::Bayes,
            Detector::Spl { .. } => Method::Spl,
            Detector::Cheddad { .. } => Method::Cheddad,
            Detector::Chen(_) => Method::Chen,
            Detector::Dyc(_) => Method::Dyc,
            Detector::Sa1 { .. } => Method::Sa1,
            Detector::Sa2 { .. } => Method::Sa2,
            Detector::Sa3 { .. } => Method::Sa3,
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match self {
            Detector::Gmm { tau, .. }
            | Detector::Bayes { tau, .. }
            | Detector::Cheddad { tau, .. }
            | Detector::Sa1 { tau, .. }
            | Detector::Sa2 { tau, .. }
            | Detector::Sa3 { tau, .. } => Some(f64::from(tau.value())),
            Detector::Spl { tau, .. } => Some(*tau),
            Detector::Chen(_) | Detector::Dyc(_) => None,
        }
    }

    /// Probability map, for detectors that produce one.
    pub fn probability_map(&self, img: &Image) -> Option<ProbabilityMap> {
        match self {
            Detector::Gmm { model, .. } => Some(model.probability_map(img)),
            Detector::Bayes { lut, .. } => Some(lut.probability_map(img)),
            Detector::Cheddad { model, .. } => Some(cheddad_detect(img, model)),
            _ => None,
        }
    }

    pub fn detect(&self, img: &Image) -> Result<LabelMask> {
        match self {
            Detector::Gmm { model, tau } => Ok(threshold_map(&model.probability_map(img), *tau)),
            Detector::Bayes { lut, tau } => Ok(threshold_map(&lut.probability_map(img), *tau)),
            Detector::Spl { lut, tau } => Ok(lut.detect(img, *tau)),
            Detector::Cheddad { model, tau } => Ok(threshold_map(&cheddad_detect(img, model), *tau)),
            Detector::Chen(bounds) => Ok(chen_detect(img, bounds)),
            Detector::Dyc(params) => Ok(dyc_detect(img, params)),
            Detector::Sa1 { base, tau } => sa1_detect(img, base.as_ref(), *tau),
            Detector::Sa2 { base, lda, tau } => sa2_detect(img, base.as_ref(), lda, *tau),
            Detector::Sa3 { base, tau } => sa3_detect(img, base.as_ref(), *tau),
        }
    }
}

/// Trained parameters available to build detectors from.
#[derive(Clone, Default)]
pub struct ModelSet {
    pub histogram_posterior: Option<PosteriorLut>,
    pub histogram_logratio: Option<LogRatioLut>,
    pub gmm: Option<GmmModel>,
    pub cheddad: Option<CheddadModel>,
    pub lda: Option<LdaModel>,
    /// Base map for the SA family; falls back to the Bayes posterior.
    pub sa_base: Option<Arc<dyn ProbabilitySource>>,
    pub chen: ChenBounds,
    pub dyc: DycParams,
}

impl ModelSet {
    fn sa_base(&self) -> Option<Arc<dyn ProbabilitySource>> {
        self.sa_base.clone().or_else(|| {
            self.histogram_posterior
                .clone()
                .map(|lut| Arc::new(lut) as Arc<dyn ProbabilitySource>)
        })
    }

    /// Names of the models `method` needs that are missing from the set.
    pub fn missing_for(&self, method: Method) -> Vec<&'static str> {
        let mut missing = Vec::new();
        match method {
            Method::Gmm if self.gmm.is_none() => missing.push("gmm model"),
            Method::Bayes if self.histogram_posterior.is_none() => missing.push("bayes model"),
            Method::Spl if self.histogram_logratio.is_none() => missing.push("spl (histogram) model"),
            Method::Cheddad if self.cheddad.is_none() => missing.push("cheddad model"),
            Method::Sa1 | Method::Sa2 | Method::Sa3 if self.sa_base().is_none() => {
                missing.push("base (bayes) model")
            }
            _ => {}
        }
        if method == Method::Sa2 && self.lda.is_none() {
            missing.push("lda model");
        }
        missing
    }

    /// Builds a detector; `tau` falls back to the method default.
    pub fn detector(&self, method: Method, tau: Option<f64>) -> Result<Detector> {
        let missing = self.missing_for(method);
        if !missing.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{method} needs: {}",
                missing.join(", ")
            )));
        }
        let tau = tau.or(method.default_tau());
        let t8 = || threshold8(tau.expect("method has a threshold"));
        Ok(match method {
            Method::Gmm => Detector::Gmm {
                model: self.gmm.clone().expect("checked"),
                tau: t8()?,
            },
            Method::Bayes => Detector::Bayes {
                lut: self.histogram_posterior.clone().expect("checked"),
                tau: t8()?,
            },
            Method::Spl => Detector::Spl {
                lut: self.histogram_logratio.clone().expect("checked"),
                tau: tau.expect("method has a threshold"),
            },
            Method::Cheddad => Detector::Cheddad {
                model: self.cheddad.expect("checked"),
                tau: t8()?,
            },
            Method::Chen => {
                self.chen.validate()?;
                Detector::Chen(self.chen)
            }
            Method::Dyc => {
                self.dyc.validate()?;
                Detector::Dyc(self.dyc)
            }
            Method::Sa1 => Detector::Sa1 {
                base: self.sa_base().expect("checked"),
                tau: t8()?,
            },
            Method::Sa2 => Detector::Sa2 {
                base: self.sa_base().expect("checked"),
                lda: self.lda.clone().expect("checked"),
                tau: t8()?,
            },
            Method::Sa3 => Detector::Sa3 {
                base: self.sa_base().expect("checked"),
                tau: t8()?,
            },
        })
    }
}
