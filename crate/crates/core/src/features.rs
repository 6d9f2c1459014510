//! Per-pixel feature tensor assembled from a [`FrameSet`].
//!
//! The channel layout is frozen (see [`FEATURE_LAYOUT`]) and versioned by
//! [`FEATURE_LAYOUT_VERSION`]. Nothing here looks at image-wide statistics:
//! every channel is a function of the pixel and its filter neighbourhood.

use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{canny, gabor_bank, gradients, laplacian, lbp};
use crate::raster::{Raster, SampleType, TfImage};
use crate::tofsim::FrameSet;

pub const FEATURE_LAYOUT_VERSION: u32 = 1;

pub const FEATURE_COUNT: usize = 39;

/// Canonical channel order.
pub const FEATURE_LAYOUT: [&str; FEATURE_COUNT] = [
    "intensity",
    "depth",
    "amplitude",
    "radial_distance",
    "confidence",
    "laplacian3_intensity",
    "laplacian5_intensity",
    "laplacian7_intensity",
    "laplacian3_depth",
    "laplacian5_depth",
    "laplacian7_depth",
    "canny3_intensity",
    "canny5_intensity",
    "canny7_intensity",
    "canny3_depth",
    "canny5_depth",
    "canny7_depth",
    "gabor0_intensity",
    "gabor45_intensity",
    "gabor90_intensity",
    "gabor135_intensity",
    "gabor0_depth",
    "gabor45_depth",
    "gabor90_depth",
    "gabor135_depth",
    "grad_x_intensity",
    "grad_y_intensity",
    "grad_xy_intensity",
    "grad_magnitude_intensity",
    "grad_angle_intensity",
    "grad_x_depth",
    "grad_y_depth",
    "grad_xy_depth",
    "grad_magnitude_depth",
    "grad_angle_depth",
    "lbp_intensity",
    "lbp_depth",
    "norm_x",
    "norm_y",
];

/// Index of the confidence channel.
pub const CONFIDENCE_CHANNEL: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceMode {
    /// `exp(−(D cos(−π/4) + D sin(−π/4))²)`, which is identically 1.
    #[default]
    Literal,
    /// `exp(−(A cos(−π/4) + D sin(−π/4))²)` mixing amplitude and depth.
    AmplitudeDepth,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// All 39 channels.
    #[default]
    Full,
    /// Drops the last channel (`norm_y`), leaving 38.
    Reduced,
}

impl FeatureSet {
    pub fn channels(self) -> usize {
        match self {
            FeatureSet::Full => FEATURE_COUNT,
            FeatureSet::Reduced => FEATURE_COUNT - 1,
        }
    }

    pub fn layout(self) -> Vec<String> {
        FEATURE_LAYOUT[..self.channels()]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub confidence: ConfidenceMode,
    pub set: FeatureSet,
}

/// Confidence of a single pixel under the literal formula.
pub fn confidence(depth: f64) -> f64 {
    let t = depth * (-FRAC_PI_4).cos() + depth * (-FRAC_PI_4).sin();
    (-(t * t)).exp()
}

fn confidence_amplitude_depth(amplitude: f64, depth: f64) -> f64 {
    let t = amplitude * (-FRAC_PI_4).cos() + depth * (-FRAC_PI_4).sin();
    (-(t * t)).exp()
}

/// `H × W × C` feature values, channels contiguous per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor {
    pub width: usize,
    pub height: usize,
    pub layout: Vec<String>,
    pub data: Vec<f32>,
}

impl FeatureTensor {
    pub fn channels(&self) -> usize {
        self.layout.len()
    }

    pub fn pixel(&self, index: usize) -> &[f32] {
        let c = self.channels();
        &self.data[index * c..(index + 1) * c]
    }

    pub fn channel(&self, c: usize) -> Raster {
        let n = self.channels();
        let data = self.data.chunks_exact(n).map(|p| p[c] as f64).collect();
        Raster::from_vec(self.width, self.height, data).expect("tensor dims")
    }

    /// Writes `<stem>.tfim` and the layout sidecar `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let img = TfImage {
            width: self.width,
            height: self.height,
            channels: self.channels(),
            sample: SampleType::F32,
            data: self.data.iter().map(|&v| v as f64).collect(),
        };
        img.write(&stem.with_extension("tfim"))?;
        let sidecar = LayoutSidecar {
            format_version: FEATURE_LAYOUT_VERSION,
            width: self.width,
            height: self.height,
            layout: self.layout.clone(),
        };
        let path = stem.with_extension("json");
        fs::write(&path, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let path = stem.with_extension("json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let sidecar: LayoutSidecar = serde_json::from_str(&text)?;
        if sidecar.format_version != FEATURE_LAYOUT_VERSION {
            return Err(Error::VersionMismatch {
                expected: FEATURE_LAYOUT_VERSION,
                found: sidecar.format_version,
            });
        }
        let img = TfImage::read(&stem.with_extension("tfim"))?;
        if img.channels != sidecar.layout.len()
            || img.width != sidecar.width
            || img.height != sidecar.height
        {
            return Err(Error::DimensionMismatch(
                "feature image disagrees with its layout sidecar".into(),
            ));
        }
        Ok(FeatureTensor {
            width: img.width,
            height: img.height,
            layout: sidecar.layout,
            data: img.data.iter().map(|&v| v as f32).collect(),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LayoutSidecar {
    format_version: u32,
    width: usize,
    height: usize,
    layout: Vec<String>,
}

/// Spatial channels of one source image, in layout order.
fn spatial_channels(img: &Raster) -> Result<Vec<Raster>> {
    let mut lap = Vec::with_capacity(3);
    let mut edges = Vec::with_capacity(3);
    for k in [3, 5, 7] {
        lap.push(laplacian(img, k)?);
        edges.push(canny(img, k)?);
    }
    let gabor = gabor_bank(img);
    let g = gradients(img);
    Ok([
        lap,
        edges,
        gabor.into(),
        vec![g.grad_x, g.grad_y, g.grad_xy, g.magnitude, g.angle],
        vec![lbp(img)],
    ]
    .concat())
}

pub fn extract(frames: &FrameSet, cfg: &FeatureConfig) -> Result<FeatureTensor> {
    frames.check_dims()?;
    let (w, h) = (frames.width(), frames.height());
    let (by_intensity, by_depth) = rayon::join(
        || spatial_channels(&frames.intensity),
        || spatial_channels(&frames.depth),
    );
    let (by_intensity, by_depth) = (by_intensity?, by_depth?);
    // Both lists are ordered laplacian, canny, gabor, gradients, lbp.
    let groups: [(usize, usize); 5] = [(0, 3), (3, 6), (6, 10), (10, 15), (15, 16)];

    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let radial = Raster::from_fn(w, h, |x, y| (x as f64 - cx).hypot(y as f64 - cy));
    let conf = match cfg.confidence {
        ConfidenceMode::Literal => frames.depth.map(confidence),
        ConfidenceMode::AmplitudeDepth => Raster::from_fn(w, h, |x, y| {
            confidence_amplitude_depth(frames.amplitude.get(x, y), frames.depth.get(x, y))
        }),
    };
    let norm_x = Raster::from_fn(w, h, |x, _| x as f64 / w as f64);
    let norm_y = Raster::from_fn(w, h, |_, y| y as f64 / h as f64);

    let mut channels: Vec<&Raster> = vec![
        &frames.intensity,
        &frames.depth,
        &frames.amplitude,
        &radial,
        &conf,
    ];
    for (a, b) in groups {
        channels.extend(&by_intensity[a..b]);
        channels.extend(&by_depth[a..b]);
    }
    channels.push(&norm_x);
    channels.push(&norm_y);
    debug_assert_eq!(channels.len(), FEATURE_COUNT);
    channels.truncate(cfg.set.channels());

    let c = channels.len();
    let mut data = Vec::with_capacity(w * h * c);
    for i in 0..w * h {
        for ch in &channels {
            data.push(ch.as_slice()[i] as f32);
        }
    }
    Ok(FeatureTensor {
        width: w,
        height: h,
        layout: cfg.set.layout(),
        data,
    })
}
