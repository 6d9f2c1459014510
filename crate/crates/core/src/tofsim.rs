//! Continuous-wave ToF rendering of corner scenes with one-bounce multipath.
//!
//! A point source co-located with the camera emits radiant intensity
//! [`SOURCE_INTENSITY`]. Each pixel receives the direct return from its first
//! hit `p` plus, when multipath is enabled, returns along
//! `camera → q → p → camera` for a fixed per-scene set of stratified points `q`
//! on every other plane. The returns are summed as phasors at the modulation
//! frequency and the measured depth is read back from the phase of the sum.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brdf::{eval_brdf_with, WardNormalization};
use crate::error::{Error, Result};
use crate::raster::{Mask, Raster, SampleType, TfImage};
use crate::rng::{derive_seed, PortableRng};
use crate::scene::{scene_geometry, CornerScene, Hit, SceneGeometry, Vec3, WardMaterial};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const SOURCE_INTENSITY: f64 = 1.0;

/// Lower bound on the `q`–`p` distance of a bounce sample, so that a sample
/// landing next to the shaded point cannot dominate the pixel.
pub const MIN_BOUNCE_DISTANCE: f64 = 0.1;

const BOUNCE_STREAM: u64 = 0x6d75_6c74_6970_6174;
const NOISE_STREAM: u64 = 0x6e6f_6973_655f_7374;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToFConfig {
    /// Modulation frequency in Hz.
    pub modulation_frequency: f64,
    /// Secondary samples per bouncing plane.
    pub bounce_samples: usize,
    pub multipath_enabled: bool,
    /// Standard deviation of additive Gaussian depth noise, in meters.
    pub noise_stddev: f64,
    pub brdf: WardNormalization,
}

impl Default for ToFConfig {
    fn default() -> Self {
        ToFConfig {
            modulation_frequency: 2.0e7,
            bounce_samples: 64,
            multipath_enabled: true,
            noise_stddev: 0.0,
            brdf: WardNormalization::Classic,
        }
    }
}

impl ToFConfig {
    /// `c / (2 f_m)`.
    pub fn unambiguous_range(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.modulation_frequency)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.modulation_frequency.is_finite() || self.modulation_frequency <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "modulation frequency must be positive, got {}",
                self.modulation_frequency
            )));
        }
        if self.bounce_samples == 0 {
            return Err(Error::InvalidConfig(
                "bounce_samples must be at least 1".into(),
            ));
        }
        if self.noise_stddev.is_nan() || self.noise_stddev < 0.0 {
            return Err(Error::InvalidConfig(
                "noise_stddev must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One light return: its strength and its one-way equivalent path length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasorReturn {
    pub amplitude: f64,
    /// Half the round-trip path length, in meters.
    pub distance: f64,
}

impl PhasorReturn {
    pub fn new(amplitude: f64, distance: f64) -> Self {
        PhasorReturn {
            amplitude,
            distance,
        }
    }
}

/// Sums the returns as phasors and decodes `(depth, amplitude)`.
///
/// Depth is wrapped into `[0, unambiguous_range)`.
pub fn combine_phasors(returns: &[PhasorReturn], cfg: &ToFConfig) -> Result<(f64, f64)> {
    let range = cfg.unambiguous_range();
    let mut z = Complex64::new(0.0, 0.0);
    let mut total = 0.0;
    for r in returns {
        if r.amplitude.is_nan() || r.amplitude < 0.0 || !r.distance.is_finite() {
            return Err(Error::NonFiniteData("phasor return"));
        }
        // Reduce modulo the range before scaling to keep the phase accurate.
        let phase = 2.0 * PI * (r.distance / range).rem_euclid(1.0);
        z += Complex64::from_polar(r.amplitude, phase);
        total += r.amplitude;
    }
    if total == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let mut depth = z.arg() / (2.0 * PI) * range;
    if depth < 0.0 {
        depth += range;
    }
    if depth >= range {
        depth = 0.0;
    }
    Ok((depth, z.norm()))
}

/// (depth, amplitude, intensity, ground_truth, valid)
type PixelSample = (f64, f64, f64, f64, bool);

/// Measured and ground-truth rasters of one scene.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSet {
    pub depth: Raster,
    pub amplitude: Raster,
    pub intensity: Raster,
    pub ground_truth: Raster,
    /// Pixels where a plane was hit and a signal came back.
    pub valid: Mask,
}

impl FrameSet {
    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    pub fn check_dims(&self) -> Result<()> {
        let d = self.depth.dims();
        if self.amplitude.dims() != d
            || self.intensity.dims() != d
            || self.ground_truth.dims() != d
            || (self.valid.width, self.valid.height) != d
        {
            return Err(Error::DimensionMismatch(
                "frame set rasters differ in size".into(),
            ));
        }
        Ok(())
    }

    /// Writes `<stem>.tfim` (depth, amplitude, intensity, ground truth) and
    /// `<stem>.tfmk`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let img = TfImage::from_rasters(
            &[
                &self.depth,
                &self.amplitude,
                &self.intensity,
                &self.ground_truth,
            ],
            SampleType::F64,
        )?;
        img.write(&stem.with_extension("tfim"))?;
        self.valid.write(&stem.with_extension("tfmk"))
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let img = TfImage::read(&stem.with_extension("tfim"))?;
        if img.channels != 4 {
            return Err(Error::DimensionMismatch(format!(
                "frame set file has {} channels, expected 4",
                img.channels
            )));
        }
        let valid = Mask::read(&stem.with_extension("tfmk"))?;
        let fs = FrameSet {
            depth: img.channel(0),
            amplitude: img.channel(1),
            intensity: img.channel(2),
            ground_truth: img.channel(3),
            valid,
        };
        fs.check_dims()?;
        Ok(fs)
    }
}

/// A bounce sample point with its area weight.
#[derive(Clone, Copy, Debug)]
struct BounceSample {
    point: Vec3,
    weight: f64,
}

/// Latin-hypercube samples over the polar parameters `(r, β)` of each plane,
/// drawn from the scene seed. Density is uniform in `(r, β)`, so a sample at
/// radius `r` stands for area `r · radius · span / n`.
fn bounce_samples(geometry: &SceneGeometry, n: usize, seed: u64) -> Vec<Vec<BounceSample>> {
    geometry
        .planes
        .iter()
        .enumerate()
        .map(|(index, plane)| {
            let mut rng = PortableRng::new(derive_seed(seed ^ BOUNCE_STREAM, index as u64));
            let mut strata: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut strata);
            strata
                .into_iter()
                .enumerate()
                .map(|(i, rs)| {
                    let r = plane.radius * (rs as f64 + rng.next_f64()) / n as f64;
                    let beta = plane.span * (i as f64 + rng.next_f64()) / n as f64;
                    BounceSample {
                        point: plane.at(r, beta),
                        weight: r * plane.radius * plane.span / n as f64,
                    }
                })
                .collect()
        })
        .collect()
}

struct Renderer<'a> {
    geometry: SceneGeometry,
    materials: &'a [WardMaterial],
    samples: Vec<Vec<BounceSample>>,
    cfg: &'a ToFConfig,
}

impl Renderer<'_> {
    fn brdf(&self, plane: usize, incoming: &Vec3, outgoing: &Vec3) -> f64 {
        // Below-horizon configurations carry no light.
        eval_brdf_with(
            &self.materials[plane],
            &self.geometry.planes[plane].normal,
            incoming,
            outgoing,
            self.cfg.brdf,
        )
        .unwrap_or(0.0)
    }

    fn returns(&self, hit: &Hit) -> Vec<PhasorReturn> {
        let cam = self.geometry.camera.origin;
        let p = hit.point;
        let n_p = self.geometry.planes[hit.plane].normal;
        let r = hit.distance;
        let to_cam = (cam - p) / r;
        let cos_p = n_p.dot(&to_cam);
        let direct = SOURCE_INTENSITY * self.brdf(hit.plane, &to_cam, &to_cam) * cos_p / (r * r);

        let mut out = vec![PhasorReturn::new(direct, r)];
        if !self.cfg.multipath_enabled {
            return out;
        }
        for (plane, samples) in self.samples.iter().enumerate() {
            if plane == hit.plane {
                continue;
            }
            let n_q = self.geometry.planes[plane].normal;
            for s in samples {
                let q = s.point;
                let cq = cam - q;
                let dist_cq = cq.norm();
                let q_to_cam = cq / dist_cq;
                let pq = q - p;
                let dist_pq = pq.norm();
                if dist_pq == 0.0 {
                    continue;
                }
                let p_to_q = pq / dist_pq;
                let cos_q_src = n_q.dot(&q_to_cam);
                let cos_q_out = -n_q.dot(&p_to_q);
                let cos_p_in = n_p.dot(&p_to_q);
                if cos_q_src <= 0.0 || cos_q_out <= 0.0 || cos_p_in <= 0.0 {
                    continue;
                }
                let irradiance_q = SOURCE_INTENSITY * cos_q_src / (dist_cq * dist_cq);
                let transfer = cos_q_out * cos_p_in / dist_pq.max(MIN_BOUNCE_DISTANCE).powi(2);
                let a = irradiance_q
                    * self.brdf(plane, &q_to_cam, &(-p_to_q))
                    * transfer
                    * self.brdf(hit.plane, &p_to_q, &to_cam)
                    * s.weight;
                if a > 0.0 {
                    out.push(PhasorReturn::new(a, 0.5 * (dist_cq + dist_pq + r)));
                }
            }
        }
        out
    }
}

/// Per-pixel return sets of a scene; `None` where the ray misses every plane.
/// Exposed for inspecting the multipath structure behind [`render`].
pub fn pixel_returns(
    scene: &CornerScene,
    cfg: &ToFConfig,
) -> Result<Vec<Option<Vec<PhasorReturn>>>> {
    cfg.validate()?;
    let geometry = scene_geometry(scene)?;
    let renderer = Renderer {
        samples: bounce_samples(&geometry, cfg.bounce_samples, scene.seed),
        geometry,
        materials: &scene.materials,
        cfg,
    };
    let cam = &renderer.geometry.camera;
    Ok((0..cam.height)
        .flat_map(|row| (0..cam.width).map(move |col| (col, row)))
        .map(|(col, row)| {
            renderer
                .geometry
                .trace(&cam.pixel_direction(col, row))
                .map(|hit| renderer.returns(&hit))
        })
        .collect())
}

/// Renders measured depth, amplitude, intensity and ground truth.
pub fn render(scene: &CornerScene, cfg: &ToFConfig) -> Result<FrameSet> {
    cfg.validate()?;
    let geometry = scene_geometry(scene)?;
    let renderer = Renderer {
        samples: bounce_samples(&geometry, cfg.bounce_samples, scene.seed),
        geometry,
        materials: &scene.materials,
        cfg,
    };
    let (w, h) = (scene.resolution.width, scene.resolution.height);
    let range = cfg.unambiguous_range();
    let noise = if cfg.noise_stddev > 0.0 {
        Some(Normal::new(0.0, cfg.noise_stddev).map_err(|e| Error::InvalidConfig(e.to_string()))?)
    } else {
        None
    };

    let rows: Vec<Vec<PixelSample>> = (0..h)
        .into_par_iter()
        .map(|row| {
            let mut rng = PortableRng::new(derive_seed(scene.seed ^ NOISE_STREAM, row as u64));
            (0..w)
                .map(|col| {
                    let dir = renderer.geometry.camera.pixel_direction(col, row);
                    let Some(hit) = renderer.geometry.trace(&dir) else {
                        return (0.0, 0.0, 0.0, 0.0, false);
                    };
                    let returns = renderer.returns(&hit);
                    match combine_phasors(&returns, cfg) {
                        Ok((mut depth, amplitude)) => {
                            if let Some(normal) = &noise {
                                depth = (depth + normal.sample(rng.inner_mut())).rem_euclid(range);
                                if depth >= range {
                                    depth = 0.0;
                                }
                            }
                            let intensity = returns.iter().map(|r| r.amplitude).sum();
                            (depth, amplitude, intensity, hit.distance, true)
                        }
                        Err(_) => (0.0, 0.0, 0.0, hit.distance, false),
                    }
                })
                .collect()
        })
        .collect();

    let mut depth = Vec::with_capacity(w * h);
    let mut amplitude = Vec::with_capacity(w * h);
    let mut intensity = Vec::with_capacity(w * h);
    let mut ground_truth = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for (d, a, i, g, v) in rows.into_iter().flatten() {
        depth.push(d);
        amplitude.push(a);
        intensity.push(i);
        ground_truth.push(g);
        valid.push(v);
    }
    Ok(FrameSet {
        depth: Raster::from_vec(w, h, depth)?,
        amplitude: Raster::from_vec(w, h, amplitude)?,
        intensity: Raster::from_vec(w, h, intensity)?,
        ground_truth: Raster::from_vec(w, h, ground_truth)?,
        valid: Mask::new(w, h, valid)?,
    })
}
