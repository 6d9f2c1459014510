use crate::raster::Raster;

/// Square kernel, row-major, indexed `data[j * size + i]` for tap `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2d {
    pub size: usize,
    pub data: Vec<f64>,
}

impl Kernel2d {
    pub fn new(size: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), size * size);
        assert!(size % 2 == 1, "kernel size must be odd");
        Kernel2d { size, data }
    }
}

/// Row `n − 1` of Pascal's triangle (length `n`).
pub fn binomial(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 1..n {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

fn convolve1d(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Separable Sobel kernels `(derivative, smoothing)` of the given order (1 or
/// 2) and odd aperture, matching the usual Sobel construction: the smoothing
/// kernel is binomial and the derivative kernel is a binomial convolved with
/// `[-1, 0, 1]` or `[1, -2, 1]`.
pub fn sobel_kernels(order: usize, size: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(size >= 3 && size % 2 == 1);
    let base: &[f64] = match order {
        1 => &[-1.0, 0.0, 1.0],
        2 => &[1.0, -2.0, 1.0],
        _ => panic!("unsupported derivative order {order}"),
    };
    (convolve1d(&binomial(size - 2), base), binomial(size))
}

/// Correlates rows with `kx`, then columns with `ky`. Equivalent to a 2-D
/// correlation with the outer product kernel `ky ⊗ kx` under edge replication.
pub fn correlate_separable(img: &Raster, kx: &[f64], ky: &[f64]) -> Raster {
    let (w, h) = img.dims();
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let mut tmp = Raster::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kx.iter().enumerate() {
                acc += k * img.get_clamped(x as isize + i as isize - rx, y as isize);
            }
            tmp.set(x, y, acc);
        }
    }
    let mut out = Raster::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, k) in ky.iter().enumerate() {
                acc += k * tmp.get_clamped(x as isize, y as isize + j as isize - ry);
            }
            out.set(x, y, acc);
        }
    }
    out
}

pub fn correlate2d(img: &Raster, kernel: &Kernel2d) -> Raster {
    let (w, h) = img.dims();
    let n = kernel.size;
    let r = (n / 2) as isize;
    let mut out = Raster::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for j in 0..n {
                let yy = y as isize + j as isize - r;
                for i in 0..n {
                    acc +=
                        kernel.data[j * n + i] * img.get_clamped(x as isize + i as isize - r, yy);
                }
            }
            out.set(x, y, acc);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sobel_coefficients() {
        assert_eq!(
            sobel_kernels(1, 3),
            (vec![-1.0, 0.0, 1.0], vec![1.0, 2.0, 1.0])
        );
        assert_eq!(
            sobel_kernels(1, 5),
            (
                vec![-1.0, -2.0, 0.0, 2.0, 1.0],
                vec![1.0, 4.0, 6.0, 4.0, 1.0]
            )
        );
        assert_eq!(sobel_kernels(2, 5).0, vec![1.0, 0.0, -2.0, 0.0, 1.0]);
        assert_eq!(
            sobel_kernels(2, 7).0,
            vec![1.0, 2.0, -1.0, -4.0, -1.0, 2.0, 1.0]
        );
        assert_eq!(binomial(7), vec![1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0]);
    }
}
