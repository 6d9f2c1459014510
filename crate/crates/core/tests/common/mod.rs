//! Reference implementations used to check the library: written directly
//! from the definitions, favouring clarity over speed.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use tofcorr::raster::Raster;
use tofcorr::rng::PortableRng;

pub fn random_raster(rng: &mut PortableRng, w: usize, h: usize) -> Raster {
    Raster::from_fn(w, h, |_, _| rng.uniform(0.0, 255.0))
}

/// Direct 2-D correlation with replicated borders; `kernel[j][i]` is the tap
/// at column offset `i − r`, row offset `j − r`.
pub fn naive_correlate(img: &Raster, kernel: &[Vec<f64>]) -> Raster {
    let r = (kernel.len() / 2) as isize;
    let (w, h) = img.dims();
    Raster::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for (j, row) in kernel.iter().enumerate() {
            for (i, k) in row.iter().enumerate() {
                let sx = (x as isize + i as isize - r).clamp(0, w as isize - 1) as usize;
                let sy = (y as isize + j as isize - r).clamp(0, h as isize - 1) as usize;
                acc += k * img.get(sx, sy);
            }
        }
        acc
    })
}

/// Coefficients (ascending powers) of a product of polynomials.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(base: &[f64], n: usize) -> Vec<f64> {
    (0..n).fold(vec![1.0], |acc, _| poly_mul(&acc, base))
}

/// Sobel taps of aperture `k`: derivative of `order` is `(x − 1)^order ·
/// (1 + x)^(k − 1 − order)`, smoothing is `(1 + x)^(k − 1)`.
pub fn sobel_taps(order: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let d = poly_mul(
        &poly_pow(&[-1.0, 1.0], order),
        &poly_pow(&[1.0, 1.0], k - 1 - order),
    );
    (d, poly_pow(&[1.0, 1.0], k - 1))
}

/// `kernel[j][i] = col[j] · row[i]`.
pub fn outer(col: &[f64], row: &[f64]) -> Vec<Vec<f64>> {
    col.iter()
        .map(|c| row.iter().map(|r| c * r).collect())
        .collect()
}

pub fn laplacian_oracle(img: &Raster, k: usize) -> Raster {
    let kernel = if k == 3 {
        vec![
            vec![0.0, 1.0, 0.0],
            vec![1.0, -4.0, 1.0],
            vec![0.0, 1.0, 0.0],
        ]
    } else {
        let (d2, s) = sobel_taps(2, k);
        let a = outer(&s, &d2);
        let b = outer(&d2, &s);
        a.iter()
            .zip(&b)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(p, q)| p + q).collect())
            .collect()
    };
    naive_correlate(img, &kernel)
}

pub struct GradientOracle {
    pub gx: Raster,
    pub gy: Raster,
    pub gxy: Raster,
    pub magnitude: Raster,
    pub angle: Raster,
}

pub fn gradient_oracle(img: &Raster) -> GradientOracle {
    let (d, s) = sobel_taps(1, 3);
    let kx = outer(&s, &d);
    let ky = outer(&d, &s);
    let gx = naive_correlate(img, &kx);
    let gy = naive_correlate(img, &ky);
    let gxy = naive_correlate(&gx, &ky);
    let (w, h) = img.dims();
    let magnitude = Raster::from_fn(w, h, |x, y| {
        (gx.get(x, y).powi(2) + gy.get(x, y).powi(2)).sqrt()
    });
    let angle = Raster::from_fn(w, h, |x, y| {
        let (a, b) = (gx.get(x, y), gy.get(x, y));
        if a == 0.0 && b == 0.0 {
            0.0
        } else {
            let t = b.atan2(a);
            if t <= -PI {
                t + 2.0 * PI
            } else {
                t
            }
        }
    });
    GradientOracle {
        gx,
        gy,
        gxy,
        magnitude,
        angle,
    }
}

/// 13×13 Gabor taps, wavelength 8, σ 4, aspect 0.5, zero phase, then made
/// zero-mean.
pub fn gabor_taps(deg: f64) -> Vec<Vec<f64>> {
    let theta = deg * PI / 180.0;
    let mut k: Vec<Vec<f64>> = (-6..=6)
        .map(|y: i32| {
            (-6..=6)
                .map(|x: i32| {
                    let (x, y) = (x as f64, y as f64);
                    let xr = x * theta.cos() + y * theta.sin();
                    let yr = -x * theta.sin() + y * theta.cos();
                    (-(xr * xr + 0.25 * yr * yr) / 32.0).exp() * (2.0 * PI * xr / 8.0).cos()
                })
                .collect()
        })
        .collect();
    let mean: f64 = k.iter().flatten().sum::<f64>() / 169.0;
    k.iter_mut().flatten().for_each(|v| *v -= mean);
    k
}

/// Local binary pattern: bit 0 east, bit 1 south-east, bit 2 south, ...,
/// bit 7 north-east, set when the neighbour is at least the centre.
pub fn lbp_oracle(img: &Raster) -> Raster {
    let (w, h) = img.dims();
    let px = |x: i64, y: i64| {
        img.get(
            x.clamp(0, w as i64 - 1) as usize,
            y.clamp(0, h as i64 - 1) as usize,
        )
    };
    Raster::from_fn(w, h, |x, y| {
        let (x, y) = (x as i64, y as i64);
        let c = px(x, y);
        let ring = [
            px(x + 1, y),
            px(x + 1, y + 1),
            px(x, y + 1),
            px(x - 1, y + 1),
            px(x - 1, y),
            px(x - 1, y - 1),
            px(x, y - 1),
            px(x + 1, y - 1),
        ];
        let mut code = 0.0;
        for (bit, v) in ring.iter().enumerate() {
            if *v >= c {
                code += 2f64.powi(bit as i32);
            }
        }
        code
    })
}

/// Decoded depth of a set of `(amplitude, distance)` returns at modulation
/// frequency `fm`, straight from the complex sum `Σ a·exp(i·4π·fm·d/c)`.
pub fn phasor_oracle(returns: &[(f64, f64)], fm: f64) -> (f64, f64) {
    let c = 299_792_458.0;
    let z: Complex64 = returns
        .iter()
        .map(|&(a, d)| a * Complex64::new(0.0, 4.0 * PI * fm * d / c).exp())
        .sum();
    let range = c / (2.0 * fm);
    let mut phase = z.arg();
    if phase < 0.0 {
        phase += 2.0 * PI;
    }
    (phase / (2.0 * PI) * range, z.norm())
}

/// Distance between two depths on the circle of circumference `range`.
pub fn circular_diff(a: f64, b: f64, range: f64) -> f64 {
    let d = (a - b).rem_euclid(range);
    d.min(range - d)
}

#[derive(Debug, Clone)]
pub enum OracleNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<OracleNode>,
        right: Box<OracleNode>,
    },
}

impl OracleNode {
    pub fn predict(&self, row: &[f32]) -> f64 {
        match self {
            OracleNode::Leaf(v) => *v,
            OracleNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] as f64 <= *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }
}

fn sse(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// Exhaustive CART: tries every midpoint of every feature and recomputes
/// both children's squared error from scratch. Splits must gain more than
/// `1e-10 ·` the parent's squared error over the best split so far, so the
/// first (lowest feature, lowest threshold) candidate wins near-ties.
#[allow(clippy::needless_range_loop)]
pub fn cart_oracle(
    x: &[Vec<f32>],
    y: &[f64],
    rows: &[usize],
    depth: usize,
    max_depth: usize,
    min_split: usize,
) -> OracleNode {
    let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if depth >= max_depth || rows.len() < min_split || hi - lo <= 1e-12 {
        return OracleNode::Leaf(mean);
    }
    let parent = sse(&ys);
    let tol = 1e-10 * parent;
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x[0].len() {
        let mut values: Vec<f32> = rows.iter().map(|&r| x[r][f]).collect();
        values.sort_by(f32::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let t = (pair[0] as f64 + pair[1] as f64) / 2.0;
            let left: Vec<f64> = rows
                .iter()
                .filter(|&&r| x[r][f] as f64 <= t)
                .map(|&r| y[r])
                .collect();
            let right: Vec<f64> = rows
                .iter()
                .filter(|&&r| x[r][f] as f64 > t)
                .map(|&r| y[r])
                .collect();
            let gain = parent - sse(&left) - sse(&right);
            if best.is_none_or(|(_, _, g)| gain > g + tol) {
                best = Some((f, t, gain));
            }
        }
    }
    match best {
        Some((feature, threshold, gain)) if gain > tol => {
            let (l, r): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| x[r][feature] as f64 <= threshold);
            OracleNode::Split {
                feature,
                threshold,
                left: Box::new(cart_oracle(x, y, &l, depth + 1, max_depth, min_split)),
                right: Box::new(cart_oracle(x, y, &r, depth + 1, max_depth, min_split)),
            }
        }
        _ => OracleNode::Leaf(mean),
    }
}

/// Flattens in pre-order as `(feature, threshold)` or `(usize::MAX, value)`.
pub fn preorder(node: &OracleNode, out: &mut Vec<(usize, f64)>) {
    match node {
        OracleNode::Leaf(v) => out.push((usize::MAX, *v)),
        OracleNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push((*feature, *threshold));
            preorder(left, out);
            preorder(right, out);
        }
    }
}

/// Kolmogorov-Smirnov statistic of `samples` against the uniform law on
/// `[lo, hi)`.
pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, v)| {
            let f = (v - lo) / (hi - lo);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
