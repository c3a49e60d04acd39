//! Input discovery and model loading shared by the commands.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use skinbench_core::models::{read_model_file, Model};
use skinbench_core::{Manifest, ManifestEntry, ModelSet, ProbabilitySource};

use crate::ModelArgs;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// A manifest file, or every image in a directory sorted by file name.
pub fn load_input(path: &Path) -> Result<Manifest> {
    let manifest = if path.is_dir() {
        let mut images: Vec<PathBuf> = std::fs::read_dir(path)
            .with_context(|| format!("cannot list {}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            })
            .collect();
        images.sort();
        images
            .into_iter()
            .map(|image| ManifestEntry {
                image,
                mask: None,
                group: None,
            })
            .collect()
    } else {
        Manifest::load(path)?
    };
    if manifest.is_empty() {
        bail!("{} lists no images", path.display());
    }
    Ok(manifest)
}

/// Output files are named by image stem, so stems must be unique.
pub fn check_unique_ids(manifest: &Manifest) -> Result<()> {
    let mut seen = HashSet::new();
    let dups: Vec<String> = manifest
        .iter()
        .map(|e| e.id())
        .filter(|id| !seen.insert(id.clone()))
        .collect();
    if !dups.is_empty() {
        bail!("image names collide, outputs would overwrite each other: {}", dups.join(", "));
    }
    Ok(())
}

pub fn probability_source(model: Model) -> Result<Arc<dyn ProbabilitySource>> {
    Ok(match model {
        Model::Histogram(h) => Arc::new(h.posterior_lut()?),
        Model::Gmm(g) => Arc::new(g),
        Model::Cheddad(c) => Arc::new(c),
        Model::Lda(_) => bail!("an LDA model does not produce a probability map from color"),
    })
}

pub fn load_models(args: &ModelArgs) -> Result<ModelSet> {
    let mut set = ModelSet::default();
    for path in &args.models {
        let model = read_model_file(path)?;
        let kind = model.kind();
        let duplicate = match model {
            Model::Histogram(h) => {
                let taken = set.histogram_posterior.is_some();
                set.histogram_posterior = Some(h.posterior_lut()?);
                set.histogram_logratio = Some(h.logratio_lut()?);
                taken
            }
            Model::Gmm(g) => set.gmm.replace(g).is_some(),
            Model::Cheddad(c) => set.cheddad.replace(c).is_some(),
            Model::Lda(l) => set.lda.replace(l).is_some(),
        };
        if duplicate {
            bail!("more than one {kind} model given ({})", path.display());
        }
    }
    if let Some(path) = &args.base_model {
        set.sa_base = Some(probability_source(read_model_file(path)?)?);
    }
    Ok(set)
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).with_context(|| format!("cannot create {}", path.display()))
}
