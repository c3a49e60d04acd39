use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use skinbench_core::detector::threshold8;
use skinbench_core::ensemble::{Ensemble, MemberSource};
use skinbench_core::eval::{aggregate_pixel_level, average_precision, confusion, group_average, rank_table, ConfusionCounts, ImageClass, Metrics};
use skinbench_core::models::{train_histogram, write_model_file, GmmConfig, Model};
use skinbench_core::rules::train_cheddad;
use skinbench_core::training::{train_gmm_on_manifest, train_lda_on_manifest};
use skinbench_core::{
    load_mask, save_mask, threshold_map, EnsembleConfig, Error, Image, LabelMask, Manifest, ManifestEntry, Method,
    Preset, ProbabilityMap,
};

use crate::inputs::{check_unique_ids, create_dir, load_input, load_models, probability_source};
use crate::report::{self, Row};
use crate::{CompareArgs, DetectArgs, EnsembleArgs, EvalArgs, PresetArgs, TrainArgs, TrainMethod};

pub fn train(a: TrainArgs) -> Result<()> {
    let start = Instant::now();
    let manifest = Manifest::load(&a.manifest)?;
    let (model, summary) = match a.method {
        TrainMethod::Bayes | TrainMethod::Spl => {
            let h = train_histogram(&manifest, a.bins)?;
            let s = format!(
                "{} skin / {} non-skin pixels, {} bins",
                h.skin_total(),
                h.nonskin_total(),
                a.bins
            );
            (Model::Histogram(h), s)
        }
        TrainMethod::Gmm => {
            let cfg = GmmConfig {
                components: a.components,
                seed: a.seed,
                ..GmmConfig::default()
            };
            let (g, trace) = train_gmm_on_manifest(&manifest, &cfg, a.samples)?;
            let s = format!(
                "K={}, {} + {} EM iterations, skin prior {:.4}",
                a.components,
                trace.skin.len(),
                trace.nonskin.len(),
                g.skin_prior
            );
            (Model::Gmm(g), s)
        }
        TrainMethod::Cheddad => {
            let c = train_cheddad(&manifest, a.mass)?;
            let s = format!("interval [{:.5}, {:.5}], mean {:.5}, std {:.5}", c.e_lo, c.e_hi, c.e_mean, c.e_std);
            (Model::Cheddad(c), s)
        }
        TrainMethod::Lda => {
            let Some(base) = &a.base_model else {
                bail!("train --method lda needs --base-model, the model whose probability map feeds the texture features");
            };
            let base = probability_source(skinbench_core::models::read_model_file(base)?)?;
            let l = train_lda_on_manifest(&manifest, base.as_ref())?;
            let s = format!("{} features, class separation {:.5}", l.dim(), l.separation);
            (Model::Lda(l), s)
        }
    };
    write_model_file(&model, &a.out)?;
    println!(
        "trained {} on {} images: {summary} [{:.2}s] -> {}",
        model.kind(),
        manifest.len(),
        start.elapsed().as_secs_f64(),
        a.out.display()
    );
    Ok(())
}

/// Runs `work` on every image in parallel, logs failures in manifest order
/// and fails if any image failed.
fn for_each_image<F>(manifest: &Manifest, out: &Path, work: F) -> Result<()>
where
    F: Fn(&ManifestEntry, &Image) -> Result<()> + Sync,
{
    let outcomes: Vec<Result<()>> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let img = e.load_image()?;
            work(e, &img)
        })
        .collect();
    let mut failed = 0;
    for (e, outcome) in manifest.iter().zip(outcomes) {
        if let Err(err) = outcome {
            failed += 1;
            log::error!("{}: {err:#}", e.image.display());
        }
    }
    let ok = manifest.len() - failed;
    println!("wrote {ok} masks to {}", out.display());
    if failed > 0 {
        bail!("{failed} of {} images failed", manifest.len());
    }
    Ok(())
}

fn mask_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.png"))
}

pub fn detect(a: DetectArgs) -> Result<()> {
    let method: Method = a.method.parse()?;
    let models = load_models(&a.models)?;
    let detector = models.detector(method, a.tau)?;
    if a.dump_prob.is_some() && !method.has_probability_map() {
        bail!("{method} produces no probability map to dump");
    }
    let manifest = load_input(&a.input)?;
    check_unique_ids(&manifest)?;
    create_dir(&a.out)?;
    if let Some(d) = &a.dump_prob {
        create_dir(d)?;
    }
    for_each_image(&manifest, &a.out, |e, img| {
        let id = e.id();
        save_mask(&detector.detect(img)?, mask_path(&a.out, &id))?;
        if let Some(dir) = &a.dump_prob {
            let map = detector.probability_map(img).expect("checked above");
            map.save_png(mask_path(dir, &id))?;
        }
        Ok(())
    })
}

pub fn ensemble(a: EnsembleArgs) -> Result<()> {
    let mut cfg = match (&a.config, &a.preset) {
        (Some(path), _) => EnsembleConfig::load(path)?,
        (None, Some(name)) => {
            let preset: Preset = name.parse()?;
            preset_config(preset, a.wtau)?
        }
        (None, None) => bail!("give --config or --preset"),
    };
    for spec in &a.map_dirs {
        let Some((name, dir)) = spec.split_once('=') else {
            bail!("--map-dir expects NAME=DIR, got `{spec}`");
        };
        let known = cfg
            .members
            .iter()
            .any(|m| m.name == name && matches!(m.source, MemberSource::External(_)));
        if !known {
            bail!("--map-dir: `{name}` is not an external member of this ensemble");
        }
        cfg.set_map_dir(name, PathBuf::from(dir));
    }
    let models = load_models(&a.models)?;
    let ens = Ensemble::prepare(&cfg, &models)?;
    log::info!("ensemble members: {}", ens.member_names().collect::<Vec<_>>().join(", "));
    let manifest = load_input(&a.input)?;
    check_unique_ids(&manifest)?;
    create_dir(&a.out)?;
    for_each_image(&manifest, &a.out, |e, img| {
        let id = e.id();
        save_mask(&ens.run(img, &id)?, mask_path(&a.out, &id))?;
        Ok(())
    })
}

fn preset_config(preset: Preset, wtau: Option<f64>) -> Result<EnsembleConfig> {
    if let Some(w) = wtau {
        if !(w > 1.0) {
            bail!("--wtau must exceed 1, got {w}");
        }
    }
    Ok(preset.config(wtau))
}

pub fn preset(a: PresetArgs) -> Result<()> {
    let text = preset_config(a.name.parse()?, a.wtau)?.to_text();
    match &a.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn image_class(e: &ManifestEntry) -> Result<ImageClass> {
    match e.group.as_deref().map(str::to_ascii_lowercase).as_deref() {
        Some("face") => Ok(ImageClass::Face),
        Some("nonface" | "non-face") => Ok(ImageClass::NonFace),
        other => bail!(
            "{}: --ap needs `face` or `nonface` in the group column, found {:?}",
            e.image.display(),
            other.unwrap_or("nothing")
        ),
    }
}

/// Metrics and AP of one prediction set.
fn score(
    manifest: &Manifest,
    preds: &[LabelMask],
    gts: Option<&[LabelMask]>,
    a: &EvalArgs,
) -> Result<(Option<Metrics>, Option<f64>)> {
    let metrics = match gts {
        None => None,
        Some(gts) => {
            let counts = preds
                .iter()
                .zip(gts)
                .map(|(p, g)| confusion(p, g))
                .collect::<skinbench_core::Result<Vec<ConfusionCounts>>>()?;
            Some(if a.group_average {
                group_average(manifest.iter().zip(&counts).map(|(e, c)| (e.group.as_deref(), c)))?
            } else {
                aggregate_pixel_level(&counts)
            })
        }
    };
    let ap = if a.ap {
        let samples = manifest
            .iter()
            .zip(preds)
            .map(|(e, p)| Ok((image_class(e)?, p.skin_fraction())))
            .collect::<Result<Vec<_>>>()?;
        Some(average_precision(&samples)?)
    } else {
        None
    };
    Ok((metrics, ap))
}

/// Loads `<dir>/<id>.png` for every entry, listing every missing file at once.
fn load_predictions<T: Send>(
    manifest: &Manifest,
    dir: &Path,
    load: impl Fn(&Path) -> skinbench_core::Result<T> + Sync,
) -> Result<Vec<T>> {
    let missing: Vec<String> = manifest
        .iter()
        .map(|e| e.id())
        .filter(|id| !mask_path(dir, id).is_file())
        .collect();
    if !missing.is_empty() {
        bail!("missing predictions in {}: {}", dir.display(), missing.join(", "));
    }
    Ok(manifest
        .entries
        .par_iter()
        .map(|e| load(&mask_path(dir, &e.id())))
        .collect::<skinbench_core::Result<Vec<T>>>()?)
}

fn check_dims(manifest: &Manifest, gts: &[LabelMask], dims: impl Iterator<Item = (usize, usize)>) -> Result<()> {
    for ((e, g), d) in manifest.iter().zip(gts).zip(dims) {
        if g.dims() != d {
            return Err(Error::DimensionMismatch {
                expected: g.dims(),
                found: d,
            })
            .with_context(|| format!("prediction for {}", e.image.display()));
        }
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let manifest = Manifest::load(&a.manifest)?;
    if manifest.is_empty() {
        bail!("{} lists no images", a.manifest.display());
    }
    check_unique_ids(&manifest)?;
    let has_truth = manifest.iter().all(|e| e.mask.is_some());
    if !has_truth && !a.ap {
        let without: Vec<String> = manifest.iter().filter(|e| e.mask.is_none()).map(|e| e.id()).collect();
        bail!("entries without ground truth: {}", without.join(", "));
    }
    let gts: Option<Vec<LabelMask>> = if has_truth {
        Some(
            manifest
                .entries
                .par_iter()
                .map(|e| load_mask(e.mask.as_ref().expect("checked")))
                .collect::<skinbench_core::Result<_>>()?,
        )
    } else {
        None
    };
    let method = a.method.clone().unwrap_or_else(|| {
        a.pred
            .as_ref()
            .or(a.prob.as_ref())
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let dataset = a.dataset.clone().unwrap_or_else(|| {
        a.manifest
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let row = |tau: Option<f64>, (metrics, ap): (Option<Metrics>, Option<f64>)| Row {
        method: method.clone(),
        dataset: dataset.clone(),
        tau,
        metrics,
        ap,
        rank: None,
    };

    let mut rows = Vec::new();
    if let (Some(taus), Some(dir)) = (&a.sweep, &a.prob) {
        let maps = load_predictions(&manifest, dir, |p| ProbabilityMap::load_png(p))?;
        if let Some(g) = &gts {
            check_dims(&manifest, g, maps.iter().map(|m| m.dims()))?;
        }
        for &tau in taus {
            let t = threshold8(tau)?;
            let preds: Vec<LabelMask> = maps.iter().map(|m| threshold_map(m, t)).collect();
            rows.push(row(Some(tau), score(&manifest, &preds, gts.as_deref(), &a)?));
        }
    } else {
        let dir = a.pred.as_ref().expect("clap requires --pred without --sweep");
        let preds = load_predictions(&manifest, dir, |p| load_mask(p))?;
        if let Some(g) = &gts {
            check_dims(&manifest, g, preds.iter().map(|m| m.dims()))?;
        }
        rows.push(row(a.tau, score(&manifest, &preds, gts.as_deref(), &a)?));
    }
    report::write(&a.report, &rows)?;
    for r in &rows {
        let f1 = r.metrics.map(|m| format!(" F1={:.4}", m.f1)).unwrap_or_default();
        let ap = r.ap.map(|v| format!(" AP={v:.2}")).unwrap_or_default();
        let tau = r.tau.map(|t| format!(" tau={t}")).unwrap_or_default();
        println!("{method} on {dataset}:{tau}{f1}{ap}");
    }
    Ok(())
}

pub fn compare(a: CompareArgs) -> Result<()> {
    // best score per (method, dataset); AP when a row has it, else F1
    let mut methods: Vec<String> = Vec::new();
    let mut best: HashMap<(String, String), f64> = HashMap::new();
    for path in &a.reports {
        for s in report::read(path)? {
            let Some(v) = s.ap.or(s.f1) else { continue };
            if !methods.contains(&s.method) {
                methods.push(s.method.clone());
            }
            let slot = best.entry((s.method, s.dataset)).or_insert(f64::NEG_INFINITY);
            *slot = slot.max(v);
        }
    }
    if methods.is_empty() {
        bail!("no scored rows in the given reports");
    }
    let datasets: BTreeSet<&String> = best.keys().map(|(_, d)| d).collect();
    let mut missing = Vec::new();
    for m in &methods {
        for d in &datasets {
            if !best.contains_key(&(m.clone(), (*d).clone())) {
                missing.push(format!("{m} on {d}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteMatrix(format!("no score for {}", missing.join(", "))).into());
    }
    let matrix: Vec<Vec<f64>> = methods
        .iter()
        .map(|m| datasets.iter().map(|d| best[&(m.clone(), (*d).clone())]).collect())
        .collect();
    let table = rank_table(&matrix)?;

    let mut w = csv::Writer::from_path(&a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    let mut header = vec!["method".to_string()];
    header.extend(datasets.iter().map(|d| d.to_string()));
    header.extend(["average_rank".into(), "rank".into()]);
    w.write_record(&header)?;
    for (i, m) in methods.iter().enumerate() {
        let mut rec = vec![m.clone()];
        rec.extend(matrix[i].iter().map(|v| v.to_string()));
        rec.push(table.average[i].to_string());
        rec.push(table.final_rank[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    println!(
        "ranked {} methods over {} datasets -> {}",
        methods.len(),
        datasets.len(),
        a.out.display()
    );
    Ok(())
}
