use std::collections::VecDeque;

use super::convolve::{correlate_separable, sobel_kernels};
use super::{check_aperture, gradient_angle};
use crate::error::Result;
use crate::raster::Raster;

/// Percentiles of the gradient magnitude used as hysteresis thresholds.
pub const LOW_PERCENTILE: f64 = 0.70;
pub const HIGH_PERCENTILE: f64 = 0.90;

/// Canny edge map in `{0, 1}` using Sobel gradients at `aperture`.
///
/// Thresholds are the 70th and 90th percentiles (nearest rank) of the
/// gradient magnitude of this image; pixels with zero magnitude are never
/// edges.
pub fn canny(img: &Raster, aperture: usize) -> Result<Raster> {
    check_aperture(aperture)?;
    let (w, h) = img.dims();
    let (d, s) = sobel_kernels(1, aperture);
    let gx = correlate_separable(img, &d, &s);
    let gy = correlate_separable(img, &s, &d);
    let mag: Vec<f64> = gx
        .as_slice()
        .iter()
        .zip(gy.as_slice())
        .map(|(a, b)| a.hypot(*b))
        .collect();

    let mut sorted = mag.clone();
    sorted.sort_by(f64::total_cmp);
    let rank = |p: f64| sorted[(p * (sorted.len() - 1) as f64).floor() as usize];
    let low = rank(LOW_PERCENTILE);
    let high = rank(HIGH_PERCENTILE);

    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    // Non-maximum suppression along the quantised gradient direction. Ties
    // keep the pixel on the negative side of the direction.
    let mut thin = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let deg = gradient_angle(gx.as_slice()[i], gy.as_slice()[i]).to_degrees();
            let deg = if deg < 0.0 { deg + 180.0 } else { deg };
            let (dx, dy) = if !(22.5..157.5).contains(&deg) {
                (1, 0)
            } else if deg < 67.5 {
                (1, 1)
            } else if deg < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let before = at(xi - dx, yi - dy);
            let after = at(xi + dx, yi + dy);
            if m > before && m >= after {
                thin[i] = m;
            }
        }
    }

    let mut out = vec![0.0; w * h];
    let mut queue = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m > 0.0 && m >= high {
            out[i] = 1.0;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if out[j] == 0.0 && thin[j] > 0.0 && thin[j] >= low {
                    out[j] = 1.0;
                    queue.push_back(j);
                }
            }
        }
    }
    Raster::from_vec(w, h, out)
}
