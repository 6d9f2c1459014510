//! ASCII PLY export of depth maps back-projected into scene coordinates.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::raster::{Mask, Raster};
use crate::scene::{scene_geometry, CornerScene, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudKind {
    Measured,
    GroundTruth,
    Corrected,
}

impl CloudKind {
    pub fn tag(self) -> u8 {
        match self {
            CloudKind::Measured => 0,
            CloudKind::GroundTruth => 1,
            CloudKind::Corrected => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CloudKind::Measured => "measured",
            CloudKind::GroundTruth => "ground_truth",
            CloudKind::Corrected => "corrected",
        }
    }

    pub fn color(self) -> [u8; 3] {
        match self {
            CloudKind::Measured => [220, 60, 50],
            CloudKind::GroundTruth => [60, 180, 75],
            CloudKind::Corrected => [40, 110, 220],
        }
    }
}

/// Places each valid pixel at `depth` along its viewing ray.
pub fn back_project(scene: &CornerScene, depth: &Raster, valid: &Mask) -> Result<Vec<Vec3>> {
    let res = scene.resolution;
    if depth.dims() != (res.width, res.height) || (valid.width, valid.height) != depth.dims() {
        return Err(Error::DimensionMismatch(format!(
            "scene is {}x{}, depth {:?}, mask {}x{}",
            res.width,
            res.height,
            depth.dims(),
            valid.width,
            valid.height
        )));
    }
    let camera = scene_geometry(scene)?.camera;
    let mut points = Vec::with_capacity(valid.count());
    for row in 0..res.height {
        for col in 0..res.width {
            if valid.bits[row * res.width + col] {
                let dir = camera.pixel_direction(col, row);
                points.push(camera.origin + dir * depth.get(col, row));
            }
        }
    }
    Ok(points)
}

pub fn write_ply<W: Write>(out: &mut W, clouds: &[(CloudKind, &[Vec3])]) -> io::Result<()> {
    let total: usize = clouds.iter().map(|(_, p)| p.len()).sum();
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    for (kind, _) in clouds {
        writeln!(out, "comment kind {} {}", kind.tag(), kind.name())?;
    }
    writeln!(out, "element vertex {total}")?;
    for p in ["x", "y", "z"] {
        writeln!(out, "property float {p}")?;
    }
    for p in ["red", "green", "blue", "kind"] {
        writeln!(out, "property uchar {p}")?;
    }
    writeln!(out, "end_header")?;
    for (kind, points) in clouds {
        let [r, g, b] = kind.color();
        for p in points.iter() {
            writeln!(
                out,
                "{} {} {} {r} {g} {b} {}",
                p.x as f32,
                p.y as f32,
                p.z as f32,
                kind.tag()
            )?;
        }
    }
    Ok(())
}
