//! Directory-level stages: generate scene manifests, render them, train a
//! correction forest, apply it, and evaluate the result.
//!
//! Directory contents:
//! * scene dir: `scene_%06d.json` manifests and `dataset.json`;
//! * frames dir: `<scene>.tfim` / `<scene>.tfmk` frame sets, a copy of each
//!   scene manifest as `<scene>.json`, and `frames.json`;
//! * next to a model `m.tforest`: the split manifest `m.split.json`;
//! * corrected dir: single-channel `<scene>.tfim` corrected depth and
//!   `correction.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::features::{extract, FeatureConfig, FEATURE_LAYOUT_VERSION};
use crate::forest::{train, FeatureMatrix, ForestConfig, RegressionForest};
use crate::ply::{back_project, write_ply, CloudKind};
use crate::raster::{Raster, SampleType, TfImage, TFIM_VERSION};
use crate::rng::{derive_seed, PortableRng};
use crate::scene::{
    sample_challenging_scene, sample_simple_scene, CornerKind, CornerScene, Resolution,
    DEFAULT_RESOLUTION,
};
use crate::tofsim::{render, FrameSet, ToFConfig};

pub const SCENE_FORMAT_VERSION: u32 = 1;
pub const DATASET_MANIFEST: &str = "dataset.json";
pub const FRAMES_MANIFEST: &str = "frames.json";
pub const CORRECTION_MANIFEST: &str = "correction.json";
/// Number of ranked importances copied into evaluation reports.
pub const REPORT_IMPORTANCES: usize = 12;

const SPLIT_STREAM: u64 = 0x5350_4c49_5400_0000;
const PIXEL_STREAM: u64 = 0x5049_5845_4c00_0000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Simple,
    Challenging2,
    Challenging3,
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(DatasetKind::Simple),
            "challenging2" => Ok(DatasetKind::Challenging2),
            "challenging3" => Ok(DatasetKind::Challenging3),
            _ => Err(Error::InvalidConfig(format!(
                "unknown dataset {s:?} (expected simple, challenging2 or challenging3)"
            ))),
        }
    }
}

impl DatasetKind {
    pub fn sample(self, seed: u64) -> CornerScene {
        match self {
            DatasetKind::Simple => sample_simple_scene(seed),
            DatasetKind::Challenging2 => sample_challenging_scene(seed, CornerKind::TwoPlane),
            DatasetKind::Challenging3 => sample_challenging_scene(seed, CornerKind::ThreePlane),
        }
    }
}

/// Named bundle of dataset and training sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub count: usize,
    pub resolution: usize,
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub train_images: usize,
    pub test_images: Option<usize>,
}

/// `paper` (full size) or `desk` (small enough for a laptop in minutes).
pub fn profile(name: &str) -> Result<Profile> {
    match name {
        "paper" => Ok(Profile {
            count: 1000,
            resolution: DEFAULT_RESOLUTION,
            n_trees: 150,
            max_depth: 15,
            min_samples_split: 10_000,
            train_images: 300,
            test_images: Some(19),
        }),
        "desk" => Ok(Profile {
            count: 60,
            resolution: 100,
            n_trees: 30,
            max_depth: 12,
            min_samples_split: 200,
            train_images: 48,
            test_images: Some(12),
        }),
        _ => Err(Error::InvalidConfig(format!(
            "unknown profile {name:?} (expected paper or desk)"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub kind: DatasetKind,
    pub seed: u64,
    pub count: usize,
    pub resolution: Resolution,
    pub scene_format_version: u32,
    pub frame_format_version: u32,
    pub feature_layout_version: u32,
    pub scenes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub scene: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramesManifest {
    pub tof: ToFConfig,
    pub rendered: Vec<String>,
    pub skipped: Vec<Skipped>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub features: FeatureConfig,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionManifest {
    pub features: FeatureConfig,
    pub train: Vec<String>,
    pub corrected: Vec<String>,
    pub importances: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenOptions {
    pub kind: DatasetKind,
    pub count: usize,
    pub seed: u64,
    pub resolution: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub forest: ForestConfig,
    pub train_images: usize,
    /// Held-out images recorded in the split; `None` keeps all the rest.
    pub test_images: Option<usize>,
    /// Share of valid pixels drawn from each training image.
    pub pixel_fraction: f64,
    pub features: FeatureConfig,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            forest: ForestConfig::default(),
            train_images: 300,
            test_images: None,
            pixel_fraction: 1.0,
            features: FeatureConfig::default(),
        }
    }
}

impl TrainOptions {
    pub fn from_profile(p: &Profile, seed: u64) -> Self {
        TrainOptions {
            forest: ForestConfig {
                n_trees: p.n_trees,
                max_depth: p.max_depth,
                min_samples_split: p.min_samples_split,
                seed,
                ..ForestConfig::default()
            },
            train_images: p.train_images,
            test_images: p.test_images,
            ..TrainOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    pub rows: usize,
    pub split: SplitManifest,
    pub importances: Vec<(String, f64)>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// `<dir>/<stem>.split.json` for a model at `<dir>/<stem>.<ext>`.
pub fn split_manifest_path(model: &Path) -> PathBuf {
    let stem = model.file_stem().unwrap_or_default().to_string_lossy();
    model.with_file_name(format!("{stem}.split.json"))
}

pub fn cmd_gen(opts: &GenOptions, out_dir: &Path) -> Result<DatasetManifest> {
    if opts.count == 0 {
        return Err(Error::InvalidCount("count must be at least 1".into()));
    }
    if opts.resolution < 8 {
        return Err(Error::InvalidConfig(format!(
            "resolution must be at least 8, got {}",
            opts.resolution
        )));
    }
    create_dir(out_dir)?;
    let resolution = Resolution::square(opts.resolution);
    let mut scenes = Vec::with_capacity(opts.count);
    for i in 0..opts.count {
        let name = format!("scene_{i:06}");
        let scene = opts
            .kind
            .sample(derive_seed(opts.seed, i as u64))
            .with_resolution(resolution);
        write_json(&out_dir.join(format!("{name}.json")), &scene)?;
        scenes.push(name);
    }
    let manifest = DatasetManifest {
        kind: opts.kind,
        seed: opts.seed,
        count: opts.count,
        resolution,
        scene_format_version: SCENE_FORMAT_VERSION,
        frame_format_version: TFIM_VERSION,
        feature_layout_version: FEATURE_LAYOUT_VERSION,
        scenes,
    };
    write_json(&out_dir.join(DATASET_MANIFEST), &manifest)?;
    info!(
        "wrote {} {:?} scenes to {}",
        opts.count,
        opts.kind,
        out_dir.display()
    );
    Ok(manifest)
}

fn scene_names(scene_dir: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(scene_dir).map_err(|e| Error::io(scene_dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(scene_dir, e))?;
        let file = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = file.strip_suffix(".json") {
            if stem.starts_with("scene_") {
                names.push(stem.to_string());
            }
        }
    }
    names.sort();
    Ok(names)
}

pub fn cmd_render(scene_dir: &Path, out_dir: &Path, cfg: &ToFConfig) -> Result<FramesManifest> {
    cfg.validate()?;
    let names = scene_names(scene_dir)?;
    if names.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no scene manifests in {}",
            scene_dir.display()
        )));
    }
    create_dir(out_dir)?;
    let mut rendered = Vec::new();
    let mut skipped = Vec::new();
    let start = Instant::now();
    for (i, name) in names.iter().enumerate() {
        let src = scene_dir.join(format!("{name}.json"));
        let scene: CornerScene = read_json(&src)?;
        let t = Instant::now();
        match render(&scene, cfg) {
            Ok(frames) => {
                frames.save(&out_dir.join(name))?;
                write_json(&out_dir.join(format!("{name}.json")), &scene)?;
                rendered.push(name.clone());
                info!(
                    "rendered {name} ({}/{}) in {:.2}s",
                    i + 1,
                    names.len(),
                    t.elapsed().as_secs_f64()
                );
            }
            Err(Error::DegenerateScene(reason)) => {
                warn!("skipping {name}: {reason}");
                skipped.push(Skipped {
                    scene: name.clone(),
                    reason,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let manifest = FramesManifest {
        tof: cfg.clone(),
        rendered,
        skipped,
    };
    write_json(&out_dir.join(FRAMES_MANIFEST), &manifest)?;
    info!(
        "rendered {} scenes in {:.1}s ({} skipped)",
        manifest.rendered.len(),
        start.elapsed().as_secs_f64(),
        manifest.skipped.len()
    );
    Ok(manifest)
}

pub fn read_frames_manifest(frames_dir: &Path) -> Result<FramesManifest> {
    read_json(&frames_dir.join(FRAMES_MANIFEST))
}

pub fn load_frames(frames_dir: &Path, name: &str) -> Result<FrameSet> {
    FrameSet::load(&frames_dir.join(name))
}

pub fn load_scene(frames_dir: &Path, name: &str) -> Result<CornerScene> {
    read_json(&frames_dir.join(format!("{name}.json")))
}

/// Splits `names` into disjoint sorted train and test lists.
pub fn split_images(
    names: &[String],
    train_images: usize,
    test_images: Option<usize>,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>)> {
    let test_count = test_images.unwrap_or(names.len().saturating_sub(train_images));
    if train_images == 0 {
        return Err(Error::InvalidCount(
            "train_images must be at least 1".into(),
        ));
    }
    if train_images + test_count > names.len() {
        return Err(Error::InsufficientData(format!(
            "{} rendered images, need {train_images} for training and {test_count} for testing",
            names.len()
        )));
    }
    let mut order = names.to_vec();
    PortableRng::new(derive_seed(seed, SPLIT_STREAM)).shuffle(&mut order);
    let mut train = order[..train_images].to_vec();
    let mut test = order[train_images..train_images + test_count].to_vec();
    train.sort();
    test.sort();
    Ok((train, test))
}

/// Feature rows and targets `D_GT − D` of the valid pixels of `frames`,
/// optionally thinned to `fraction` of them.
pub fn training_rows(
    frames: &FrameSet,
    features: &FeatureConfig,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<f32>, Vec<f64>)> {
    let tensor = extract(frames, features)?;
    let mut rng = PortableRng::new(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, &valid) in frames.valid.bits.iter().enumerate() {
        if !valid {
            continue;
        }
        if fraction < 1.0 && rng.next_f64() >= fraction {
            continue;
        }
        x.extend_from_slice(tensor.pixel(i));
        y.push(frames.ground_truth.as_slice()[i] - frames.depth.as_slice()[i]);
    }
    Ok((x, y))
}

pub fn cmd_train(frames_dir: &Path, model_out: &Path, opts: &TrainOptions) -> Result<TrainSummary> {
    opts.forest.validate()?;
    if !(opts.pixel_fraction > 0.0 && opts.pixel_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "pixel_fraction must lie in (0, 1], got {}",
            opts.pixel_fraction
        )));
    }
    let manifest = read_frames_manifest(frames_dir)?;
    let seed = opts.forest.seed;
    let (train_names, test_names) = split_images(
        &manifest.rendered,
        opts.train_images,
        opts.test_images,
        seed,
    )?;

    let start = Instant::now();
    let layout = opts.features.set.layout();
    let mut data = Vec::new();
    let mut y = Vec::new();
    let batch = 2 * rayon::current_num_threads().max(1);
    for (b, chunk) in train_names.chunks(batch).enumerate() {
        let parts = chunk
            .par_iter()
            .enumerate()
            .map(|(j, name)| {
                let frames = load_frames(frames_dir, name)?;
                let index = (b * batch + j) as u64;
                training_rows(
                    &frames,
                    &opts.features,
                    opts.pixel_fraction,
                    derive_seed(seed ^ PIXEL_STREAM, index),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        for (px, py) in parts {
            data.extend_from_slice(&px);
            y.extend_from_slice(&py);
        }
    }
    let rows = y.len();
    if rows == 0 {
        return Err(Error::InsufficientData(
            "training images contain no valid pixels".into(),
        ));
    }
    info!(
        "extracted {rows} rows x {} features from {} images in {:.1}s",
        layout.len(),
        train_names.len(),
        start.elapsed().as_secs_f64()
    );
    let x = FeatureMatrix::with_layout(rows, data, layout)?;

    let t = Instant::now();
    let forest = train(&x, &y, &opts.forest)?;
    info!(
        "trained {} trees in {:.1}s",
        forest.trees.len(),
        t.elapsed().as_secs_f64()
    );
    drop(x);

    if let Some(parent) = model_out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    forest.save(model_out)?;
    let split = SplitManifest {
        seed,
        features: opts.features,
        train: train_names,
        test: test_names,
    };
    write_json(&split_manifest_path(model_out), &split)?;
    Ok(TrainSummary {
        rows,
        split,
        importances: forest.ranked_importances(),
    })
}

/// `D + forest(features)` on valid pixels, `D` elsewhere.
pub fn correct_frames(
    frames: &FrameSet,
    forest: &RegressionForest,
    features: &FeatureConfig,
) -> Result<Raster> {
    let tensor = extract(frames, features)?;
    forest
        .check_layout(&tensor.layout)
        .map_err(|e| Error::LayoutMismatch(e.to_string()))?;
    let pred = forest.predict_rows(&tensor.data);
    let mut out = frames.depth.clone();
    for (i, v) in out.as_mut_slice().iter_mut().enumerate() {
        if frames.valid.bits[i] {
            *v += pred[i];
        }
    }
    Ok(out)
}

pub fn cmd_correct(frames_dir: &Path, model: &Path, out_dir: &Path) -> Result<CorrectionManifest> {
    let forest = RegressionForest::load(model)?;
    let split_path = split_manifest_path(model);
    let (features, train_names, targets) = if split_path.exists() {
        let split: SplitManifest = read_json(&split_path)?;
        (split.features, split.train, split.test)
    } else {
        let all = read_frames_manifest(frames_dir)?.rendered;
        (FeatureConfig::default(), Vec::new(), all)
    };
    let expected = features.set.layout();
    if forest.layout != expected {
        return Err(Error::LayoutMismatch(format!(
            "model has {} features, extractor produces {}",
            forest.layout.len(),
            expected.len()
        )));
    }
    create_dir(out_dir)?;
    let start = Instant::now();
    targets
        .par_iter()
        .map(|name| {
            let frames = load_frames(frames_dir, name)?;
            let corrected = correct_frames(&frames, &forest, &features)?;
            TfImage::from_rasters(&[&corrected], SampleType::F64)?
                .write(&out_dir.join(format!("{name}.tfim")))
        })
        .collect::<Result<Vec<()>>>()?;
    info!(
        "corrected {} images in {:.1}s",
        targets.len(),
        start.elapsed().as_secs_f64()
    );
    let manifest = CorrectionManifest {
        features,
        train: train_names,
        corrected: targets,
        importances: forest.ranked_importances(),
    };
    write_json(&out_dir.join(CORRECTION_MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn load_corrected(corrected_dir: &Path, name: &str) -> Result<Raster> {
    let img = TfImage::read(&corrected_dir.join(format!("{name}.tfim")))?;
    if img.channels != 1 {
        return Err(Error::DimensionMismatch(format!(
            "corrected depth for {name} has {} channels",
            img.channels
        )));
    }
    Ok(img.channel(0))
}

/// Evaluates every image listed in the correction manifest and writes the
/// JSON report plus a histogram CSV beside it.
pub fn cmd_eval(frames_dir: &Path, corrected_dir: &Path, report_out: &Path) -> Result<EvalReport> {
    let manifest: CorrectionManifest = read_json(&corrected_dir.join(CORRECTION_MANIFEST))?;
    if let Some(name) = manifest
        .corrected
        .iter()
        .find(|n| manifest.train.contains(n))
    {
        return Err(Error::TrainTestOverlap(name.clone()));
    }
    let mut frames = Vec::with_capacity(manifest.corrected.len());
    let mut corrected = Vec::with_capacity(manifest.corrected.len());
    for name in &manifest.corrected {
        let fs = load_frames(frames_dir, name)?;
        let dc = load_corrected(corrected_dir, name)?;
        if dc.dims() != fs.depth.dims() {
            return Err(Error::LayoutMismatch(format!(
                "{name}: corrected depth is {:?}, frames are {:?}",
                dc.dims(),
                fs.depth.dims()
            )));
        }
        frames.push(fs);
        corrected.push(dc);
    }
    let mut report = evaluate(&frames, &corrected)?;
    for (stats, name) in report.per_scene.iter_mut().zip(&manifest.corrected) {
        stats.scene = name.clone();
    }
    report.importances_top = manifest
        .importances
        .iter()
        .take(REPORT_IMPORTANCES)
        .cloned()
        .collect();
    if let Some(parent) = report_out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    report.write(report_out, Some(&report_out.with_extension("csv")))?;
    info!(
        "mean RPE {:.4} -> {:.4}, variance {:.5} -> {:.5} over {} pixels",
        report.mean_rpe_before,
        report.mean_rpe_after,
        report.var_rpe_before,
        report.var_rpe_after,
        report.n_pixels
    );
    Ok(report)
}

/// Writes the measured, ground-truth and (if `corrected_dir` is given)
/// corrected point clouds of one scene.
pub fn cmd_export_ply(
    frames_dir: &Path,
    name: &str,
    corrected_dir: Option<&Path>,
    out: &Path,
) -> Result<usize> {
    let scene = load_scene(frames_dir, name)?;
    let frames = load_frames(frames_dir, name)?;
    let mut clouds = vec![
        (
            CloudKind::Measured,
            back_project(&scene, &frames.depth, &frames.valid)?,
        ),
        (
            CloudKind::GroundTruth,
            back_project(&scene, &frames.ground_truth, &frames.valid)?,
        ),
    ];
    if let Some(dir) = corrected_dir {
        let dc = load_corrected(dir, name)?;
        clouds.push((
            CloudKind::Corrected,
            back_project(&scene, &dc, &frames.valid)?,
        ));
    }
    let refs: Vec<_> = clouds.iter().map(|(k, p)| (*k, p.as_slice())).collect();
    let mut buf = Vec::new();
    write_ply(&mut buf, &refs).map_err(|e| Error::io(out, e))?;
    fs::write(out, buf).map_err(|e| Error::io(out, e))?;
    Ok(refs.iter().map(|(_, p)| p.len()).sum())
}

/// Paths used by [`run_all`] inside its work directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunLayout {
    pub scenes: PathBuf,
    pub frames: PathBuf,
    pub model: PathBuf,
    pub corrected: PathBuf,
    pub report: PathBuf,
}

impl RunLayout {
    pub fn new(work_dir: &Path) -> Self {
        RunLayout {
            scenes: work_dir.join("scenes"),
            frames: work_dir.join("frames"),
            model: work_dir.join("model.tforest"),
            corrected: work_dir.join("corrected"),
            report: work_dir.join("report.json"),
        }
    }
}

/// gen → render → train → correct → eval inside `work_dir`.
pub fn run_all(
    work_dir: &Path,
    gen: &GenOptions,
    tof: &ToFConfig,
    train_opts: &TrainOptions,
) -> Result<EvalReport> {
    let layout = RunLayout::new(work_dir);
    cmd_gen(gen, &layout.scenes)?;
    cmd_render(&layout.scenes, &layout.frames, tof)?;
    cmd_train(&layout.frames, &layout.model, train_opts)?;
    cmd_correct(&layout.frames, &layout.model, &layout.corrected)?;
    cmd_eval(&layout.frames, &layout.corrected, &layout.report)
}
