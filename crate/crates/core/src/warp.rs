//! Backward warping `T(x) = S(x + u(x))` with bilinear sampling.

use crate::error::Result;
use crate::fields::{ScalarImage, VectorField2D};
use crate::par;

pub const DEFAULT_FILL: f64 = 0.0;

/// Bilinear sample of `image` at continuous pixel coordinates `(x, y)`.
///
/// Returns `fill` outside `[0, width − 1] × [0, height − 1]`.
pub fn sample_bilinear(image: &ScalarImage, x: f64, y: f64, fill: f64) -> f64 {
    let g = image.grid();
    let (xmax, ymax) = ((g.width - 1) as f64, (g.height - 1) as f64);
    if !(x >= 0.0 && x <= xmax && y >= 0.0 && y <= ymax) {
        return fill;
    }
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(g.width - 1), (y0 + 1).min(g.height - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let d = image.data();
    let (a, b) = (d[g.index(x0, y0)], d[g.index(x1, y0)]);
    let (c, e) = (d[g.index(x0, y1)], d[g.index(x1, y1)]);
    (1.0 - fy) * ((1.0 - fx) * a + fx * b) + fy * ((1.0 - fx) * c + fx * e)
}

/// Deform `source` by `field`; output is clamped to `[0, 1]`.
pub fn warp(source: &ScalarImage, field: &VectorField2D, fill: f64) -> Result<ScalarImage> {
    let g = *source.grid();
    g.require_same(field.grid())?;
    let data = par::map_range(g.len(), |i| {
        let (x, y) = g.coords(i);
        let u = field.at(i);
        sample_bilinear(source, x as f64 + u[0], y as f64 + u[1], fill).clamp(0.0, 1.0)
    });
    ScalarImage::new(g, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid2D;

    fn ramp(w: usize, h: usize) -> ScalarImage {
        let g = Grid2D::new(w, h).unwrap();
        ScalarImage::from_fn(g, |x, _| x as f64 / (w - 1) as f64)
    }

    #[test]
    fn integer_coordinates_are_exact() {
        let img = ScalarImage::synthetic_texture(Grid2D::new(9, 7).unwrap(), 3);
        for y in 0..7 {
            for x in 0..9 {
                assert_eq!(sample_bilinear(&img, x as f64, y as f64, -1.0), img.get(x, y));
            }
        }
    }

    #[test]
    fn patch_center_is_average() {
        let g = Grid2D::new(2, 2).unwrap();
        let img = ScalarImage::new(g, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(sample_bilinear(&img, 0.5, 0.5, 0.0), 0.5);
    }

    #[test]
    fn out_of_domain_is_fill() {
        let img = ramp(5, 5);
        assert_eq!(sample_bilinear(&img, -0.1, 3.0, 0.7), 0.7);
        assert_eq!(sample_bilinear(&img, 4.0001, 1.0, 0.7), 0.7);
        assert_eq!(sample_bilinear(&img, 1.0, f64::NAN, 0.7), 0.7);
        assert_eq!(sample_bilinear(&img, 4.0, 4.0, 0.7), 1.0);
    }

    #[test]
    fn zero_field_is_identity() {
        let img = ScalarImage::synthetic_texture(Grid2D::new(16, 12).unwrap(), 11);
        let out = warp(&img, &VectorField2D::zeros(*img.grid()), 0.0).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn integer_shift() {
        let img = ScalarImage::synthetic_texture(Grid2D::new(10, 6).unwrap(), 5);
        let out = warp(&img, &VectorField2D::constant(*img.grid(), [2.0, 0.0]), 0.0).unwrap();
        for y in 0..6 {
            for x in 0..10 {
                let want = if x + 2 < 10 { img.get(x + 2, y) } else { 0.0 };
                assert_eq!(out.get(x, y), want);
            }
        }
    }

    #[test]
    fn half_pixel_shift_on_ramp() {
        let img = ramp(11, 4);
        let out = warp(&img, &VectorField2D::constant(*img.grid(), [0.5, 0.0]), 0.0).unwrap();
        for y in 0..4 {
            for x in 0..10 {
                let mid = 0.5 * (img.get(x, y) + img.get(x + 1, y));
                assert!((out.get(x, y) - mid).abs() < 1e-15);
            }
            assert_eq!(out.get(10, y), 0.0);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let img = ramp(5, 5);
        let f = VectorField2D::zeros(Grid2D::new(5, 6).unwrap());
        assert!(warp(&img, &f, 0.0).is_err());
    }
}
