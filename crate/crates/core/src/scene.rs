//! Parametric corner scenes and the samplers for the simple and challenging
//! datasets.
//!
//! # Coordinate conventions
//!
//! The corner lives in a fixed world frame. The intersection edge of the two
//! main planes is the x axis and the look-at centre is the origin.
//!
//! * plane 0 (floor) spans `+y` from the edge, inward normal `+z`;
//! * plane 1 (wall) spans `(0, cos α, sin α)` from the edge, so the dihedral
//!   angle between floor and wall is `α`;
//! * plane 2 (three-plane corners only) is `x = 0`, inward normal `+x`, closing
//!   the wedge. Floor and wall are then restricted to `x ≥ 0`.
//!
//! Each plane is a circular patch (half disk, quarter disk or sector) of
//! radius [`PLANE_RADIUS`] centred at the origin.
//!
//! The camera orientation is the intrinsic Z-Y-Z Euler rotation
//! `R = Rz(φ) · Ry(θ) · Rz(γ)` applied to a reference camera that sits at
//! `camera_distance · ẑ` looking down `-ẑ` with image right `+x` and image up
//! `+y`. The camera position is therefore
//! `camera_distance · (sin θ cos φ, sin θ sin φ, cos θ)`, always looking at the
//! origin, and `γ` is the roll about the viewing axis. With `φ = π/2` and
//! `θ = (π − α)/2` the camera sits on the bisector plane of the corner.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::PortableRng;

pub type Vec3 = Vector3<f64>;

/// Radius of every plane patch, in scene length units.
pub const PLANE_RADIUS: f64 = 4.0;

/// Distance from the camera to the corner centre in both datasets.
pub const DATASET_CAMERA_DISTANCE: f64 = 3.0;

pub const DEFAULT_RESOLUTION: usize = 200;

/// Horizontal field of view: 60 degrees.
pub const DEFAULT_FOV: f64 = PI / 3.0;

/// Minimum distance from the camera to any plane accepted by the
/// challenging-dataset sampler.
const MIN_PLANE_CLEARANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WardMaterial {
    pub sigma: f64,
    pub mu: f64,
    pub kd: f64,
    pub ks: f64,
}

impl WardMaterial {
    pub fn new(sigma: f64, mu: f64, kd: f64, ks: f64) -> Self {
        WardMaterial { sigma, mu, kd, ks }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma", self.sigma),
            ("mu", self.mu),
            ("kd", self.kd),
            ("ks", self.ks),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidScene(format!(
                    "material {name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// The six tabulated materials, in fixed order.
pub fn builtin_materials() -> [(&'static str, WardMaterial); 6] {
    [
        (
            "Concrete",
            WardMaterial::new(0.600672, 0.668533, 0.994044, 1.0),
        ),
        ("Wood", WardMaterial::new(0.598438, 0.132031, 0.965061, 1.0)),
        (
            "Rough Plastic",
            WardMaterial::new(0.278057, 0.480943, 0.969021, 1.0),
        ),
        (
            "Limestone",
            WardMaterial::new(0.413544, 0.292841, 0.972684, 1.0),
        ),
        (
            "Rough Paper",
            WardMaterial::new(0.311376, 0.644926, 0.937665, 1.0),
        ),
        ("Foil", WardMaterial::new(0.252702, 0.581514, 0.891302, 1.0)),
    ]
}

/// Looks up a builtin material by name, ignoring case.
pub fn builtin_material(name: &str) -> Option<WardMaterial> {
    builtin_materials()
        .into_iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, m)| m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerKind {
    TwoPlane,
    ThreePlane,
}

impl CornerKind {
    pub fn plane_count(self) -> usize {
        match self {
            CornerKind::TwoPlane => 2,
            CornerKind::ThreePlane => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub width: usize,
    pub height: usize,
}

impl Resolution {
    pub fn square(n: usize) -> Self {
        Resolution {
            width: n,
            height: n,
        }
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution::square(DEFAULT_RESOLUTION)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerScene {
    pub kind: CornerKind,
    /// Dihedral angle between floor and wall.
    pub alpha: f64,
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
    pub camera_distance: f64,
    pub materials: Vec<WardMaterial>,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default = "default_fov")]
    pub fov: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_fov() -> f64 {
    DEFAULT_FOV
}

impl CornerScene {
    pub fn with_resolution(mut self, resolution: Resolution) -> Self {
        self.resolution = resolution;
        self
    }

    /// Checks every field invariant except the dihedral-angle range, which is
    /// reported as [`Error::DegenerateScene`] by [`scene_geometry`].
    pub fn validate(&self) -> Result<()> {
        if self.materials.len() != self.kind.plane_count() {
            return Err(Error::InvalidScene(format!(
                "{:?} corner needs {} materials, got {}",
                self.kind,
                self.kind.plane_count(),
                self.materials.len()
            )));
        }
        for m in &self.materials {
            m.validate()?;
        }
        if !self.camera_distance.is_finite() || self.camera_distance <= 0.0 {
            return Err(Error::InvalidScene(format!(
                "camera_distance must be positive, got {}",
                self.camera_distance
            )));
        }
        if self.resolution.width < 8 || self.resolution.height < 8 {
            return Err(Error::InvalidScene(format!(
                "resolution must be at least 8x8, got {}x{}",
                self.resolution.width, self.resolution.height
            )));
        }
        if !(self.fov > 0.0 && self.fov < PI) {
            return Err(Error::InvalidScene(format!(
                "fov must lie in (0, pi), got {}",
                self.fov
            )));
        }
        for (name, v) in [
            ("theta", self.theta),
            ("phi", self.phi),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidScene(format!("{name} is not finite")));
            }
        }
        Ok(())
    }
}

/// Draws a corner of the simple dataset.
///
/// Draw order from `PortableRng::new(seed)`: material index, `α`, `φ`.
pub fn sample_simple_scene(seed: u64) -> CornerScene {
    let mut rng = PortableRng::new(seed);
    let materials = builtin_materials();
    let (_, material) = materials[rng.below(materials.len() as u64) as usize];
    let alpha = rng.uniform(PI / 6.0, 2.0 * PI / 3.0);
    let phi = rng.uniform(PI / 6.0, 2.0 * PI / 3.0);
    CornerScene {
        kind: CornerKind::TwoPlane,
        alpha,
        theta: (PI - alpha) / 2.0,
        phi,
        gamma: 0.0,
        camera_distance: DATASET_CAMERA_DISTANCE,
        materials: vec![material, material],
        resolution: Resolution::default(),
        fov: DEFAULT_FOV,
        seed,
    }
}

/// Draws a corner of the challenging dataset.
///
/// Materials are drawn first (σ, μ, kd per plane), then `(α, θ, φ, γ)` are
/// redrawn until the camera lies in front of every plane with some clearance.
pub fn sample_challenging_scene(seed: u64, kind: CornerKind) -> CornerScene {
    let mut rng = PortableRng::new(seed);
    let materials = (0..kind.plane_count())
        .map(|_| {
            let sigma = rng.next_f64();
            let mu = rng.next_f64();
            let kd = rng.next_f64();
            WardMaterial::new(sigma, mu, kd, 1.0)
        })
        .collect();
    let mut scene = CornerScene {
        kind,
        alpha: 0.0,
        theta: 0.0,
        phi: 0.0,
        gamma: 0.0,
        camera_distance: DATASET_CAMERA_DISTANCE,
        materials,
        resolution: Resolution::default(),
        fov: DEFAULT_FOV,
        seed,
    };
    loop {
        scene.alpha = rng.uniform(0.0, PI);
        scene.theta = rng.uniform(0.0, PI);
        scene.phi = rng.uniform(0.0, 2.0 * PI);
        scene.gamma = rng.uniform(0.0, 2.0 * PI);
        if scene.alpha <= 0.0 {
            continue;
        }
        if let Ok(geometry) = scene_geometry(&scene) {
            let clear = geometry
                .planes
                .iter()
                .all(|p| p.signed_distance(&geometry.camera.origin) > MIN_PLANE_CLEARANCE);
            if clear {
                return scene;
            }
        }
    }
}

/// A planar circular patch `{ r (cos β e1 + sin β e2) : 0 ≤ r ≤ radius, 0 ≤ β ≤ span }`
/// around the corner centre (the world origin).
#[derive(Clone, Debug, PartialEq)]
pub struct PlanePatch {
    /// Point on the plane; always the corner centre.
    pub point: Vec3,
    /// Unit normal pointing into the corner.
    pub normal: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    /// Angular extent of the patch, measured from `e1` towards `e2`.
    pub span: f64,
    pub radius: f64,
}

impl PlanePatch {
    pub fn signed_distance(&self, x: &Vec3) -> f64 {
        self.normal.dot(&(x - self.point))
    }

    /// Point at polar coordinates `(r, beta)` on the patch.
    pub fn at(&self, r: f64, beta: f64) -> Vec3 {
        self.point + (self.e1 * beta.cos() + self.e2 * beta.sin()) * r
    }

    /// Whether a point already known to lie on the plane is inside the patch.
    pub fn contains(&self, x: &Vec3) -> bool {
        let d = x - self.point;
        let a = d.dot(&self.e1);
        let b = d.dot(&self.e2);
        let r = a.hypot(b);
        if r > self.radius {
            return false;
        }
        if r == 0.0 {
            return true;
        }
        let beta = b.atan2(a);
        // Points on the bounding edges come back as tiny negative angles.
        let tol = 1e-12;
        beta >= -tol && beta <= self.span + tol
    }

    pub fn area(&self) -> f64 {
        0.5 * self.span * self.radius * self.radius
    }
}

/// Pinhole camera with square pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub origin: Vec3,
    /// Unit viewing direction.
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub fov: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    /// Unit ray direction through continuous image coordinates `(u, v)`, with
    /// `(0, 0)` the top-left image corner and pixel `(i, j)` centred at
    /// `(i + 0.5, j + 0.5)`.
    pub fn ray_direction(&self, u: f64, v: f64) -> Vec3 {
        let w = self.width as f64;
        let h = self.height as f64;
        let tan_half = (0.5 * self.fov).tan();
        let x = (2.0 * u / w - 1.0) * tan_half;
        let y = (1.0 - 2.0 * v / h) * tan_half * h / w;
        (self.forward + self.right * x + self.up * y).normalize()
    }

    pub fn pixel_direction(&self, col: usize, row: usize) -> Vec3 {
        self.ray_direction(col as f64 + 0.5, row as f64 + 0.5)
    }

    /// Direction through the exact image centre.
    pub fn central_direction(&self) -> Vec3 {
        self.ray_direction(0.5 * self.width as f64, 0.5 * self.height as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub plane: usize,
    pub point: Vec3,
    /// Radial distance from the camera.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneGeometry {
    pub planes: Vec<PlanePatch>,
    pub camera: Camera,
    /// Look-at point: the centre of the plane intersection.
    pub center: Vec3,
    /// Unit direction of the floor/wall intersection line.
    pub edge_direction: Vec3,
}

impl SceneGeometry {
    /// Nearest front-facing patch hit along `dir` from the camera.
    pub fn trace(&self, dir: &Vec3) -> Option<Hit> {
        let origin = self.camera.origin;
        let mut best: Option<Hit> = None;
        for (index, plane) in self.planes.iter().enumerate() {
            let denom = plane.normal.dot(dir);
            if denom >= 0.0 {
                continue;
            }
            let t = plane.normal.dot(&(plane.point - origin)) / denom;
            if t <= 0.0 || best.is_some_and(|b| t >= b.distance) {
                continue;
            }
            let point = origin + dir * t;
            if plane.contains(&point) {
                best = Some(Hit {
                    plane: index,
                    point,
                    distance: t,
                });
            }
        }
        best
    }
}

/// Explicit world-space planes and camera pose of a scene.
pub fn scene_geometry(scene: &CornerScene) -> Result<SceneGeometry> {
    if !(scene.alpha > 0.0 && scene.alpha < PI) {
        return Err(Error::DegenerateScene(format!(
            "dihedral angle {} outside (0, pi)",
            scene.alpha
        )));
    }
    scene.validate()?;

    let (sa, ca) = scene.alpha.sin_cos();
    let x = Vec3::x();
    let y = Vec3::y();
    let z = Vec3::z();
    let wall_dir = Vec3::new(0.0, ca, sa);
    let wall_normal = Vec3::new(0.0, sa, -ca);
    let origin = Vec3::zeros();

    let planes = match scene.kind {
        CornerKind::TwoPlane => vec![
            PlanePatch {
                point: origin,
                normal: z,
                e1: x,
                e2: y,
                span: PI,
                radius: PLANE_RADIUS,
            },
            PlanePatch {
                point: origin,
                normal: wall_normal,
                e1: x,
                e2: wall_dir,
                span: PI,
                radius: PLANE_RADIUS,
            },
        ],
        CornerKind::ThreePlane => vec![
            PlanePatch {
                point: origin,
                normal: z,
                e1: x,
                e2: y,
                span: FRAC_PI_2,
                radius: PLANE_RADIUS,
            },
            PlanePatch {
                point: origin,
                normal: wall_normal,
                e1: x,
                e2: wall_dir,
                span: FRAC_PI_2,
                radius: PLANE_RADIUS,
            },
            PlanePatch {
                point: origin,
                normal: x,
                e1: y,
                e2: z,
                span: scene.alpha,
                radius: PLANE_RADIUS,
            },
        ],
    };

    let rotation = Rotation3::from_axis_angle(&Unit::new_unchecked(z), scene.phi)
        * Rotation3::from_axis_angle(&Unit::new_unchecked(y), scene.theta)
        * Rotation3::from_axis_angle(&Unit::new_unchecked(z), scene.gamma);
    let back = rotation * z;
    let camera = Camera {
        origin: origin + back * scene.camera_distance,
        forward: -back,
        right: rotation * x,
        up: rotation * y,
        fov: scene.fov,
        width: scene.resolution.width,
        height: scene.resolution.height,
    };

    Ok(SceneGeometry {
        planes,
        camera,
        center: origin,
        edge_direction: x,
    })
}
