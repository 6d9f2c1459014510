//! Kernel bank over single-channel rasters: Laplacian, Canny, Gabor, Sobel
//! gradients and local binary patterns.
//!
//! Every filter replicates edge pixels for out-of-range taps and returns a
//! raster of the input's dimensions. Kernels are applied as correlations,
//! `out(x, y) = Σ k(i, j) · img(x + i − r, y + j − r)`.

mod canny;
mod convolve;
mod gabor;
mod lbp;

pub use canny::canny;
pub use convolve::{binomial, correlate2d, correlate_separable, sobel_kernels, Kernel2d};
pub use gabor::{gabor_bank, gabor_kernel, GABOR_ORIENTATIONS, GABOR_SIZE};
pub use lbp::lbp;

use crate::error::{Error, Result};
use crate::raster::Raster;

pub(crate) fn check_aperture(size: usize) -> Result<()> {
    match size {
        3 | 5 | 7 => Ok(()),
        other => Err(Error::BadKernelSize(other)),
    }
}

/// Laplacian at aperture 3, 5 or 7.
///
/// Aperture 3 is the 4-neighbour kernel `[[0,1,0],[1,-4,1],[0,1,0]]`. Larger
/// apertures sum the second-order Sobel kernels in x and y.
pub fn laplacian(img: &Raster, kernel_size: usize) -> Result<Raster> {
    check_aperture(kernel_size)?;
    if kernel_size == 3 {
        let d2 = [1.0, -2.0, 1.0];
        let id = [0.0, 1.0, 0.0];
        let mut out = correlate_separable(img, &d2, &id);
        let yy = correlate_separable(img, &id, &d2);
        add_assign(&mut out, &yy);
        return Ok(out);
    }
    let (d2, smooth) = sobel_kernels(2, kernel_size);
    let mut out = correlate_separable(img, &d2, &smooth);
    let yy = correlate_separable(img, &smooth, &d2);
    add_assign(&mut out, &yy);
    Ok(out)
}

/// The 2-D kernel applied by [`laplacian`].
pub fn laplacian_kernel(kernel_size: usize) -> Result<Kernel2d> {
    check_aperture(kernel_size)?;
    if kernel_size == 3 {
        return Ok(Kernel2d::new(
            3,
            vec![0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0],
        ));
    }
    let (d2, smooth) = sobel_kernels(2, kernel_size);
    let n = kernel_size;
    let mut k = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            k[j * n + i] = d2[i] * smooth[j] + smooth[i] * d2[j];
        }
    }
    Ok(Kernel2d::new(n, k))
}

/// Sobel responses of [`gradients`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub grad_x: Raster,
    pub grad_y: Raster,
    /// Sobel-x followed by Sobel-y.
    pub grad_xy: Raster,
    pub magnitude: Raster,
    /// `atan2(gy, gx)` in `(−π, π]`, with `0` where both derivatives vanish.
    pub angle: Raster,
}

pub fn gradients(img: &Raster) -> Gradients {
    let (d, s) = sobel_kernels(1, 3);
    let grad_x = correlate_separable(img, &d, &s);
    let grad_y = correlate_separable(img, &s, &d);
    let grad_xy = correlate_separable(&grad_x, &s, &d);
    let (w, h) = img.dims();
    let mut magnitude = Raster::new(w, h);
    let mut angle = Raster::new(w, h);
    for i in 0..img.len() {
        let gx = grad_x.as_slice()[i];
        let gy = grad_y.as_slice()[i];
        magnitude.as_mut_slice()[i] = gx.hypot(gy);
        angle.as_mut_slice()[i] = gradient_angle(gx, gy);
    }
    Gradients {
        grad_x,
        grad_y,
        grad_xy,
        magnitude,
        angle,
    }
}

pub(crate) fn gradient_angle(gx: f64, gy: f64) -> f64 {
    if gx == 0.0 && gy == 0.0 {
        return 0.0;
    }
    let a = gy.atan2(gx);
    if a == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

fn add_assign(a: &mut Raster, b: &Raster) {
    for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *x += y;
    }
}
