//! Relative per-pixel error and before/after correction statistics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::tofsim::FrameSet;

pub const HISTOGRAM_BINS: usize = 100;

/// `|d_gt − d| / |d_gt|`.
pub fn rpe(d_gt: f64, d: f64) -> Result<f64> {
    if d_gt == 0.0 {
        return Err(Error::DivisionByZeroGroundTruth);
    }
    Ok((d_gt - d).abs() / d_gt.abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneStats {
    pub scene: String,
    pub n_pixels: usize,
    pub mean_rpe_before: f64,
    pub var_rpe_before: f64,
    pub mean_rpe_after: f64,
    pub var_rpe_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_pixels: usize,
    pub mean_rpe_before: f64,
    pub mean_rpe_after: f64,
    /// Population variance.
    pub var_rpe_before: f64,
    pub var_rpe_after: f64,
    /// Equal-width bins over `[0, 1]`; larger errors land in the last bin.
    pub histogram_before: Vec<u64>,
    pub histogram_after: Vec<u64>,
    pub per_scene: Vec<SceneStats>,
    pub importances_top: Vec<(String, f64)>,
}

/// Neumaier-compensated sum.
fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = s + v;
        c += if s.abs() >= v.abs() {
            (s - t) + v
        } else {
            (v - t) + s
        };
        s = t;
    }
    s + c
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = sum(values.iter().copied()) / n;
    let var = sum(values.iter().map(|v| (v - mean) * (v - mean))) / n;
    (mean, var)
}

fn histogram(values: &[f64]) -> Vec<u64> {
    let mut h = vec![0u64; HISTOGRAM_BINS];
    for &v in values {
        let bin = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        h[bin] += 1;
    }
    h
}

/// Compares each frame's measured depth and the matching corrected depth
/// against ground truth over the frame's valid pixels.
pub fn evaluate(frames: &[FrameSet], corrected: &[Raster]) -> Result<EvalReport> {
    if frames.len() != corrected.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} frame sets but {} corrected rasters",
            frames.len(),
            corrected.len()
        )));
    }
    let mut before = Vec::new();
    let mut after = Vec::new();
    let mut per_scene = Vec::with_capacity(frames.len());
    for (i, (fs, dc)) in frames.iter().zip(corrected).enumerate() {
        if dc.dims() != fs.depth.dims() {
            return Err(Error::DimensionMismatch(format!(
                "scene {i}: corrected raster is {:?}, frames are {:?}",
                dc.dims(),
                fs.depth.dims()
            )));
        }
        let start = before.len();
        for (p, &valid) in fs.valid.bits.iter().enumerate() {
            if !valid {
                continue;
            }
            let gt = fs.ground_truth.as_slice()[p];
            before.push(rpe(gt, fs.depth.as_slice()[p])?);
            after.push(rpe(gt, dc.as_slice()[p])?);
        }
        let (mb, vb) = mean_var(&before[start..]);
        let (ma, va) = mean_var(&after[start..]);
        per_scene.push(SceneStats {
            scene: i.to_string(),
            n_pixels: before.len() - start,
            mean_rpe_before: mb,
            var_rpe_before: vb,
            mean_rpe_after: ma,
            var_rpe_after: va,
        });
    }
    if before.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mean_rpe_before, var_rpe_before) = mean_var(&before);
    let (mean_rpe_after, var_rpe_after) = mean_var(&after);
    Ok(EvalReport {
        n_pixels: before.len(),
        mean_rpe_before,
        mean_rpe_after,
        var_rpe_before,
        var_rpe_after,
        histogram_before: histogram(&before),
        histogram_after: histogram(&after),
        per_scene,
        importances_top: Vec::new(),
    })
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// `bin_low,bin_high,before,after` rows.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,before,after\n");
        let n = self.histogram_before.len();
        for i in 0..n {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                i as f64 / n as f64,
                (i + 1) as f64 / n as f64,
                self.histogram_before[i],
                self.histogram_after[i]
            );
        }
        out
    }

    pub fn write(&self, json_path: &Path, csv_path: Option<&Path>) -> Result<()> {
        fs::write(json_path, self.to_json()?).map_err(|e| Error::io(json_path, e))?;
        if let Some(csv) = csv_path {
            fs::write(csv, self.histogram_csv()).map_err(|e| Error::io(csv, e))?;
        }
        Ok(())
    }
}
