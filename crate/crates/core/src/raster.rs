//! Single-channel rasters and the `TFIM` / `TFMK` binary file formats.
//!
//! `TFIM`: magic `TFIM`, then little-endian `u32` version (1), width, height,
//! channels and sample width in bits (32 or 64), followed by
//! `width · height · channels` little-endian IEEE floats, row-major with
//! channels interleaved per pixel.
//!
//! `TFMK`: magic `TFMK`, little-endian `u32` width and height, then the mask
//! bits packed row-major, least significant bit first, padded with zero bits to
//! a whole byte.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const TFIM_MAGIC: [u8; 4] = *b"TFIM";
pub const TFMK_MAGIC: [u8; 4] = *b"TFMK";
pub const TFIM_VERSION: u32 = 1;

/// Row-major `height × width` image of `f64` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Raster::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height} raster",
                data.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with edge replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleType {
    F32,
    F64,
}

impl SampleType {
    fn bits(self) -> u32 {
        match self {
            SampleType::F32 => 32,
            SampleType::F64 => 64,
        }
    }
}

/// Multi-channel image as stored in a `TFIM` file.
#[derive(Clone, Debug, PartialEq)]
pub struct TfImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// On-disk sample width; `data` is rounded to it when written.
    pub sample: SampleType,
    /// Interleaved samples, `(y · width + x) · channels + c`.
    pub data: Vec<f64>,
}

impl TfImage {
    pub fn from_rasters(rasters: &[&Raster], sample: SampleType) -> Result<Self> {
        let first = rasters.first().ok_or(Error::EmptyInput)?;
        let (w, h) = first.dims();
        if rasters.iter().any(|r| r.dims() != (w, h)) {
            return Err(Error::DimensionMismatch(
                "channel rasters differ in size".into(),
            ));
        }
        let channels = rasters.len();
        let mut data = Vec::with_capacity(w * h * channels);
        for i in 0..w * h {
            for r in rasters {
                data.push(r.as_slice()[i]);
            }
        }
        Ok(TfImage {
            width: w,
            height: h,
            channels,
            sample,
            data,
        })
    }

    pub fn channel(&self, c: usize) -> Raster {
        assert!(c < self.channels);
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px[c])
            .collect();
        Raster {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let bits = self.sample.bits();
        let mut out = Vec::with_capacity(24 + bits as usize / 8 * self.data.len());
        out.extend_from_slice(&TFIM_MAGIC);
        for v in [
            TFIM_VERSION,
            self.width as u32,
            self.height as u32,
            self.channels as u32,
            bits,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &v in &self.data {
            match self.sample {
                SampleType::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                SampleType::F64 => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.magic(TFIM_MAGIC)?;
        let version = r.u32()?;
        if version != TFIM_VERSION {
            return Err(Error::VersionMismatch {
                expected: TFIM_VERSION,
                found: version,
            });
        }
        let width = r.u32()? as usize;
        let height = r.u32()? as usize;
        let channels = r.u32()? as usize;
        let sample = match r.u32()? {
            32 => SampleType::F32,
            64 => SampleType::F64,
            other => return Err(Error::Corrupt(format!("unsupported sample width {other}"))),
        };
        let n = width
            .checked_mul(height)
            .and_then(|p| p.checked_mul(channels))
            .ok_or_else(|| Error::Corrupt("image size overflows".into()))?;
        if r.remaining() < n.saturating_mul(sample.bits() as usize / 8) {
            return Err(Error::TruncatedFile);
        }
        let data = match sample {
            SampleType::F32 => (0..n)
                .map(|_| r.f32().map(f64::from))
                .collect::<Result<Vec<_>>>()?,
            SampleType::F64 => (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?,
        };
        r.finish()?;
        Ok(TfImage {
            width,
            height,
            channels,
            sample,
            data,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        TfImage::from_bytes(&bytes)
    }
}

/// Boolean per-pixel mask, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} mask bits for a {width}x{height} image",
                bits.len()
            )));
        }
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.bits.len().div_ceil(8));
        out.extend_from_slice(&TFMK_MAGIC);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for chunk in self.bits.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i));
            out.push(byte);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.magic(TFMK_MAGIC)?;
        let width = r.u32()? as usize;
        let height = r.u32()? as usize;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::Corrupt("mask size overflows".into()))?;
        let packed = r.take(n.div_ceil(8))?;
        let bits = (0..n).map(|i| packed[i / 8] >> (i % 8) & 1 == 1).collect();
        r.finish()?;
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Mask::from_bytes(&bytes)
    }
}

/// Little-endian cursor shared by the binary readers.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::TruncatedFile);
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let found: [u8; 4] = self.take(4)?.try_into().unwrap();
        if found != expected {
            return Err(Error::BadMagic { expected, found });
        }
        Ok(())
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes",
                self.remaining()
            )));
        }
        Ok(())
    }
}
