mod support;

use elastoprobe_core::ops::{divergence, grad_div, laplacian};
use elastoprobe_core::{Grid2D, VectorField2D};
use proptest::prelude::*;
use support::{naive_grad_div, naive_laplacian, random_field};

fn interior(g: &Grid2D) -> impl Iterator<Item = (usize, usize)> + '_ {
    (1..g.height - 1).flat_map(move |y| (1..g.width - 1).map(move |x| (x, y)))
}

#[test]
fn operators_match_direct_differencing_on_random_fields() {
    for (seed, (w, h, dx, dy)) in [(9, 7, 1.0, 1.0), (12, 12, 0.5, 2.0), (5, 11, 1.7, 0.3)]
        .into_iter()
        .enumerate()
    {
        let g = Grid2D::with_spacing(w, h, dx, dy).unwrap();
        let f = random_field(g, seed as u64);
        let lap = laplacian(&f).unwrap();
        let gd = grad_div(&f).unwrap();
        for (x, y) in interior(&g) {
            let (l, d) = (naive_laplacian(&f, x, y), naive_grad_div(&f, x, y));
            for c in 0..2 {
                assert!((lap.get(x, y)[c] - l[c]).abs() <= 1e-12);
                assert!((gd.get(x, y)[c] - d[c]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn affine_fields_are_annihilated() {
    let g = Grid2D::with_spacing(10, 8, 0.8, 1.25).unwrap();
    let f = VectorField2D::from_fn(g, |x, y| {
        let (x, y) = (x as f64 * g.dx, y as f64 * g.dy);
        [0.3 + 1.2 * x - 0.7 * y, -2.0 + 0.4 * x + 0.9 * y]
    });
    let lap = laplacian(&f).unwrap();
    let gd = grad_div(&f).unwrap();
    for i in 0..g.len() {
        for c in 0..2 {
            assert!(lap.at(i)[c].abs() <= 1e-12);
            assert!(gd.at(i)[c].abs() <= 1e-12);
        }
    }
}

#[test]
fn divergence_of_a_dilation_is_constant() {
    let g = Grid2D::square(9).unwrap();
    let f = VectorField2D::from_fn(g, |x, y| [0.5 * x as f64, 0.5 * y as f64]);
    let d = divergence(&f).unwrap();
    for (x, y) in interior(&g) {
        assert!((d[g.index(x, y)] - 1.0).abs() <= 1e-12);
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn operators_are_linear(s1 in 0u64..1000, s2 in 0u64..1000, a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let g = Grid2D::with_spacing(8, 7, 1.0, 0.6).unwrap();
        let (f, h) = (random_field(g, s1), random_field(g, s2 + 7919));
        let comb = f.lin_comb(a, &h, b).unwrap();
        for op in [laplacian, grad_div] {
            let (lf, lh, lc) = (op(&f).unwrap(), op(&h).unwrap(), op(&comb).unwrap());
            for i in 0..g.len() {
                for c in 0..2 {
                    prop_assert!(close(lc.at(i)[c], a * lf.at(i)[c] + b * lh.at(i)[c]));
                }
            }
        }
    }
}
