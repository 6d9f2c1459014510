use crate::raster::Raster;

/// Neighbour offsets in bit order: east first, then clockwise on screen
/// (image rows grow downwards).
const NEIGHBOURS: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// 8-neighbour radius-1 local binary pattern. Bit `k` is set when neighbour
/// `k` is greater than or equal to the centre.
pub fn lbp(img: &Raster) -> Raster {
    let (w, h) = img.dims();
    Raster::from_fn(w, h, |x, y| {
        let c = img.get(x, y);
        let mut code = 0u32;
        for (k, (dx, dy)) in NEIGHBOURS.iter().enumerate() {
            if img.get_clamped(x as isize + dx, y as isize + dy) >= c {
                code |= 1 << k;
            }
        }
        code as f64
    })
}
