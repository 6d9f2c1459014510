use std::f64::consts::PI;

use super::convolve::{correlate2d, Kernel2d};
use crate::raster::Raster;

pub const GABOR_SIZE: usize = 13;
/// Orientations of the bank, in degrees.
pub const GABOR_ORIENTATIONS: [f64; 4] = [0.0, 45.0, 90.0, 135.0];

pub const GABOR_WAVELENGTH: f64 = 8.0;
pub const GABOR_SIGMA: f64 = 4.0;
pub const GABOR_ASPECT: f64 = 0.5;
pub const GABOR_PHASE: f64 = 0.0;

/// Real Gabor kernel at `orientation_deg`, with its mean subtracted so it
/// has no DC response.
///
/// `g(x, y) = exp(−(x'² + γ² y'²) / 2σ²) · cos(2π x'/λ + ψ)` with
/// `x' = x cos θ + y sin θ`, `y' = −x sin θ + y cos θ`, and `x`, `y` the tap
/// offsets from the kernel centre (y pointing down the image).
pub fn gabor_kernel(orientation_deg: f64) -> Kernel2d {
    let n = GABOR_SIZE;
    let r = (n / 2) as f64;
    let (s, c) = orientation_deg.to_radians().sin_cos();
    let mut data = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = i as f64 - r;
            let y = j as f64 - r;
            let xr = x * c + y * s;
            let yr = -x * s + y * c;
            let envelope = (-(xr * xr + GABOR_ASPECT * GABOR_ASPECT * yr * yr)
                / (2.0 * GABOR_SIGMA * GABOR_SIGMA))
                .exp();
            data.push(envelope * (2.0 * PI * xr / GABOR_WAVELENGTH + GABOR_PHASE).cos());
        }
    }
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    data.iter_mut().for_each(|v| *v -= mean);
    Kernel2d::new(n, data)
}

/// Responses at 0°, 45°, 90° and 135°.
pub fn gabor_bank(img: &Raster) -> [Raster; 4] {
    GABOR_ORIENTATIONS.map(|deg| correlate2d(img, &gabor_kernel(deg)))
}
