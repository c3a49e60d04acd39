//! Weighted-vote fusion of binary detector outputs.
//!
//! A pixel is skin iff the summed weight of the members voting skin is
//! strictly greater than `total weight / w_tau`. Members are either built-in
//! detectors or directories of externally produced probability maps
//! (`<dir>/<image id>.png`, gray / 255), which stand in for CNN detectors.
//!
//! Config file format, one directive per line, `#` starts a comment:
//!
//! ```text
//! wtau 1.5
//! member name=sa1 tau=175 weight=0.5
//! member name=dyc weight=0.5
//! member name=segnet tau=128 weight=5.5 map_dir=maps/segnet
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::detector::{threshold8, Detector, Method, ModelSet};
use crate::error::{Error, Result};
use crate::raster::{threshold_map, Image, Label, LabelMask, ProbabilityMap};

/// Threshold applied to external maps when a member gives none.
pub const DEFAULT_EXTERNAL_TAU: f64 = 128.0;

/// Where a member's mask comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MemberSource {
    Builtin(Method),
    /// Probability maps on disk; `None` until a directory is supplied.
    External(Option<PathBuf>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub name: String,
    pub source: MemberSource,
    pub tau: Option<f64>,
    pub weight: f64,
}

impl Member {
    pub fn builtin(method: Method, tau: Option<f64>, weight: f64) -> Self {
        Self {
            name: method.name().to_string(),
            source: MemberSource::Builtin(method),
            tau: tau.or(method.default_tau()),
            weight,
        }
    }

    pub fn external(name: &str, dir: Option<PathBuf>, tau: Option<f64>, weight: f64) -> Self {
        Self {
            name: name.to_string(),
            source: MemberSource::External(dir),
            tau: Some(tau.unwrap_or(DEFAULT_EXTERNAL_TAU)),
            weight,
        }
    }

    pub fn is_active(&self) -> bool {
        self.weight > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub members: Vec<Member>,
    pub w_tau: f64,
}

fn parse_number(key: &str, value: &str, line: usize) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config {
            line,
            message: format!("`{key}` must be a number, got `{value}`"),
        })
}

fn parse_member(fields: &[&str], line: usize, base: &Path) -> Result<Member> {
    let err = |message: String| Error::Config { line, message };
    let (mut name, mut tau, mut weight, mut dir) = (None, None, None, None);
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got `{field}`")))?;
        let slot_taken = match key {
            "name" => name.replace(value.to_string()).is_some(),
            "tau" => tau.replace(parse_number(key, value, line)?).is_some(),
            "weight" => weight.replace(parse_number(key, value, line)?).is_some(),
            "map_dir" => dir.replace(base.join(value)).is_some(),
            _ => return Err(err(format!("unknown member field `{key}`"))),
        };
        if slot_taken {
            return Err(err(format!("field `{key}` given twice")));
        }
    }
    let name = name.ok_or_else(|| err("member needs a name".into()))?;
    let weight = weight.ok_or_else(|| err(format!("member `{name}` needs a weight")))?;
    if weight < 0.0 {
        return Err(err(format!("member `{name}` has negative weight {weight}")));
    }
    let member = match (dir, Method::from_str(&name)) {
        (None, Ok(method)) => {
            if tau.is_some() && method.default_tau().is_none() {
                return Err(err(format!("{method} takes no threshold")));
            }
            Member::builtin(method, tau, weight)
        }
        (dir, _) => Member::external(&name, dir, tau, weight),
    };
    if let Some(t) = member.tau {
        if member.source != MemberSource::Builtin(Method::Spl) {
            threshold8(t).map_err(|e| err(e.to_string()))?;
        }
    }
    Ok(member)
}

impl EnsembleConfig {
    /// Parses a config; relative `map_dir` paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut members = Vec::new();
        let mut w_tau = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            let mut tokens = content.split_whitespace();
            match tokens.next() {
                None => continue,
                Some("wtau") => {
                    let rest: Vec<&str> = tokens.collect();
                    let [value] = rest[..] else {
                        return Err(Error::Config {
                            line,
                            message: "expected `wtau <number>`".into(),
                        });
                    };
                    if w_tau.is_some() {
                        return Err(Error::Config {
                            line,
                            message: "duplicate wtau line".into(),
                        });
                    }
                    let v = parse_number("wtau", value, line)?;
                    if v <= 1.0 {
                        return Err(Error::Config {
                            line,
                            message: format!("wtau must exceed 1, got {v}"),
                        });
                    }
                    w_tau = Some(v);
                }
                Some("member") => {
                    let fields: Vec<&str> = tokens.collect();
                    members.push(parse_member(&fields, line, base)?);
                }
                Some(other) => {
                    return Err(Error::Config {
                        line,
                        message: format!("unknown directive `{other}`"),
                    })
                }
            }
        }
        let w_tau = w_tau.ok_or_else(|| Error::Config {
            line: text.lines().count(),
            message: "missing wtau line".into(),
        })?;
        let cfg = Self { members, w_tau };
        if cfg.total_weight() <= 0.0 {
            return Err(Error::EmptyEnsemble);
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("wtau {}\n", self.w_tau);
        for m in &self.members {
            write!(out, "member name={}", m.name).unwrap();
            if let Some(t) = m.tau {
                write!(out, " tau={t}").unwrap();
            }
            write!(out, " weight={}", m.weight).unwrap();
            if let MemberSource::External(Some(dir)) = &m.source {
                write!(out, " map_dir={}", dir.display()).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.members.iter().map(|m| m.weight).sum()
    }

    pub fn active(&self) -> impl Iterator<Item = &Member> {
        self.members.iter().filter(|m| m.is_active())
    }

    /// Points every external member called `name` at `dir`.
    pub fn set_map_dir(&mut self, name: &str, dir: PathBuf) {
        for m in &mut self.members {
            if m.name == name {
                if let MemberSource::External(slot) = &mut m.source {
                    *slot = Some(dir.clone());
                }
            }
        }
    }

    /// Checks that every active member can run; the error names each
    /// member that cannot.
    pub fn validate(&self, models: &ModelSet) -> Result<()> {
        if !(self.w_tau > 1.0) {
            return Err(Error::InvalidParameter(format!("wtau must exceed 1, got {}", self.w_tau)));
        }
        if self.total_weight() <= 0.0 {
            return Err(Error::EmptyEnsemble);
        }
        let problems: Vec<String> = self
            .active()
            .filter_map(|m| match &m.source {
                MemberSource::External(None) => Some(format!("{} (no map_dir)", m.name)),
                MemberSource::External(Some(_)) => None,
                MemberSource::Builtin(method) => {
                    let missing = models.missing_for(*method);
                    (!missing.is_empty()).then(|| format!("{} ({})", m.name, missing.join(", ")))
                }
            })
            .collect();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "ensemble members cannot run: {}",
                problems.join("; ")
            )))
        }
    }
}

/// The published ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Vote1,
    Vote2,
    Vote3,
    Vote4,
}

/// Member order shared by every preset.
pub const PRESET_MEMBERS: [&str; 9] = ["sa1", "sa2", "sa3", "cheddad", "dyc", "bayes", "segnet", "unet", "deeplab"];

/// Candidate `w_tau` values.
pub const WTAU_GRID: [f64; 4] = [1.25, 1.5, 1.75, 2.0];

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Vote1, Preset::Vote2, Preset::Vote3, Preset::Vote4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Vote1 => "vote1",
            Preset::Vote2 => "vote2",
            Preset::Vote3 => "vote3",
            Preset::Vote4 => "vote4",
        }
    }

    pub fn weights(self) -> [f64; 9] {
        match self {
            Preset::Vote1 => [0.5, 1.5, 1.0, 1.5, 0.5, 1.0, 0.0, 0.0, 0.0],
            Preset::Vote2 => [0.5, 1.5, 1.0, 1.5, 0.0, 1.0, 5.5, 0.0, 0.0],
            Preset::Vote3 => [0.5, 1.5, 1.0, 1.5, 0.0, 1.0, 5.5, 2.75, 0.0],
            Preset::Vote4 => [0.25, 0.75, 0.5, 0.75, 0.0, 0.5, 2.75, 1.375, 5.5],
        }
    }

    pub fn default_wtau(self) -> f64 {
        match self {
            Preset::Vote1 => 1.5,
            _ => 1.75,
        }
    }

    pub fn config(self, w_tau: Option<f64>) -> EnsembleConfig {
        let members = PRESET_MEMBERS
            .iter()
            .zip(self.weights())
            .map(|(&name, weight)| match Method::from_str(name) {
                Ok(method) => Member::builtin(method, None, weight),
                Err(_) => Member::external(name, None, None, weight),
            })
            .collect();
        EnsembleConfig {
            members,
            w_tau: w_tau.unwrap_or(self.default_wtau()),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == lower)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown preset `{s}` (vote1..vote4)")))
    }
}

/// Fuses binary masks: skin iff the weight of skin votes exceeds
/// `Σw / w_tau`.
pub fn vote(masks: &[LabelMask], weights: &[f64], w_tau: f64) -> Result<LabelMask> {
    if masks.len() != weights.len() {
        return Err(Error::InvalidParameter(format!(
            "{} masks but {} weights",
            masks.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
    }
    if !(w_tau > 1.0) {
        return Err(Error::InvalidParameter(format!("wtau must exceed 1, got {w_tau}")));
    }
    let total: f64 = weights.iter().sum();
    let Some(first) = masks.first() else {
        return Err(Error::EmptyEnsemble);
    };
    if total <= 0.0 {
        return Err(Error::EmptyEnsemble);
    }
    let dims = first.dims();
    for m in masks {
        if m.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: m.dims(),
            });
        }
    }
    let threshold = total / w_tau;
    let labels = (0..first.labels().len())
        .map(|i| {
            let score: f64 = masks
                .iter()
                .zip(weights)
                .filter(|(m, _)| m.labels()[i] == Label::Skin)
                .map(|(_, w)| w)
                .sum();
            Label::from_skin(score > threshold)
        })
        .collect();
    LabelMask::new(dims.0, dims.1, labels)
}

/// Reads `<dir>/<image_id>.png` as a probability map.
pub fn ingest_external_map(dir: &Path, image_id: &str) -> Result<ProbabilityMap> {
    ProbabilityMap::load_png(dir.join(format!("{image_id}.png")))
}

enum Runner {
    Builtin(Detector),
    External { dir: PathBuf, tau: crate::raster::Threshold8 },
}

/// A validated config bound to trained models, ready to run on images.
pub struct Ensemble {
    runners: Vec<(String, Runner)>,
    weights: Vec<f64>,
    w_tau: f64,
}

impl Ensemble {
    /// Zero-weight members are dropped here and never run.
    pub fn prepare(cfg: &EnsembleConfig, models: &ModelSet) -> Result<Self> {
        cfg.validate(models)?;
        let mut runners = Vec::new();
        let mut weights = Vec::new();
        for m in cfg.active() {
            let runner = match &m.source {
                MemberSource::Builtin(method) => Runner::Builtin(models.detector(*method, m.tau)?),
                MemberSource::External(dir) => Runner::External {
                    dir: dir.clone().expect("validated"),
                    tau: threshold8(m.tau.unwrap_or(DEFAULT_EXTERNAL_TAU))?,
                },
            };
            runners.push((m.name.clone(), runner));
            weights.push(m.weight);
        }
        Ok(Self {
            runners,
            weights,
            w_tau: cfg.w_tau,
        })
    }

    pub fn member_names(&self) -> impl Iterator<Item = &str> {
        self.runners.iter().map(|(n, _)| n.as_str())
    }

    /// Masks of the active members, in config order.
    pub fn member_masks(&self, img: &Image, image_id: &str) -> Result<Vec<LabelMask>> {
        self.runners
            .par_iter()
            .map(|(_, runner)| match runner {
                Runner::Builtin(d) => d.detect(img),
                Runner::External { dir, tau } => {
                    let map = ingest_external_map(dir, image_id)?;
                    if map.dims() != img.dims() {
                        return Err(Error::DimensionMismatch {
                            expected: img.dims(),
                            found: map.dims(),
                        });
                    }
                    Ok(threshold_map(&map, *tau))
                }
            })
            .collect()
    }

    pub fn run(&self, img: &Image, image_id: &str) -> Result<LabelMask> {
        vote(&self.member_masks(img, image_id)?, &self.weights, self.w_tau)
    }
}

pub fn run_ensemble(cfg: &EnsembleConfig, img: &Image, image_id: &str, models: &ModelSet) -> Result<LabelMask> {
    Ensemble::prepare(cfg, models)?.run(img, image_id)
}
