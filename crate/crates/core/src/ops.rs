//! Finite-difference operators on vector fields.
//!
//! The stencils here are the same ones the solver assembles: central second
//! differences along each axis and the four-point diagonal scheme for the
//! mixed derivative. Outputs are defined on the interior; the one-pixel outer
//! ring is written as zero and must be masked by the caller.

use crate::error::Result;
use crate::fields::{Grid2D, VectorField2D};

/// Smallest grid the operators accept.
pub const MIN_OPERATOR_GRID: usize = 3;

#[inline]
pub(crate) fn d2x(f: &[f64], g: &Grid2D, x: usize, y: usize) -> f64 {
    let i = g.index(x, y);
    (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (g.dx * g.dx)
}

#[inline]
pub(crate) fn d2y(f: &[f64], g: &Grid2D, x: usize, y: usize) -> f64 {
    let i = g.index(x, y);
    let w = g.width;
    (f[i + w] - 2.0 * f[i] + f[i - w]) / (g.dy * g.dy)
}

#[inline]
pub(crate) fn dxy(f: &[f64], g: &Grid2D, x: usize, y: usize) -> f64 {
    let i = g.index(x, y);
    let w = g.width;
    (f[i + w + 1] - f[i - w + 1] - f[i + w - 1] + f[i - w - 1]) / (4.0 * g.dx * g.dy)
}

#[inline]
pub(crate) fn dx(f: &[f64], g: &Grid2D, x: usize, y: usize) -> f64 {
    let i = g.index(x, y);
    (f[i + 1] - f[i - 1]) / (2.0 * g.dx)
}

#[inline]
pub(crate) fn dy(f: &[f64], g: &Grid2D, x: usize, y: usize) -> f64 {
    let i = g.index(x, y);
    (f[i + g.width] - f[i - g.width]) / (2.0 * g.dy)
}

#[inline]
pub(crate) fn is_interior(g: &Grid2D, x: usize, y: usize) -> bool {
    g.edge_distance(x, y) >= 1
}

fn interior_map(
    field: &VectorField2D,
    op: impl Fn(&[f64], &[f64], &Grid2D, usize, usize) -> [f64; 2] + Sync + Send,
) -> Result<VectorField2D> {
    let g = *field.grid();
    g.require_min(MIN_OPERATOR_GRID)?;
    let (ux, uy) = (field.ux(), field.uy());
    let vals = crate::par::map_range(g.len(), |i| {
        let (x, y) = g.coords(i);
        if is_interior(&g, x, y) {
            op(ux, uy, &g, x, y)
        } else {
            [0.0, 0.0]
        }
    });
    let (ox, oy) = vals.into_iter().map(|v| (v[0], v[1])).unzip();
    VectorField2D::from_components(g, ox, oy)
}

/// Component-wise Laplacian `(∂²/∂x² + ∂²/∂y²) u`.
pub fn laplacian(field: &VectorField2D) -> Result<VectorField2D> {
    interior_map(field, |ux, uy, g, x, y| {
        [
            d2x(ux, g, x, y) + d2y(ux, g, x, y),
            d2x(uy, g, x, y) + d2y(uy, g, x, y),
        ]
    })
}

/// Gradient of the divergence: `(∂²ux/∂x² + ∂²uy/∂x∂y, ∂²uy/∂y² + ∂²ux/∂x∂y)`.
pub fn grad_div(field: &VectorField2D) -> Result<VectorField2D> {
    interior_map(field, |ux, uy, g, x, y| {
        [
            d2x(ux, g, x, y) + dxy(uy, g, x, y),
            d2y(uy, g, x, y) + dxy(ux, g, x, y),
        ]
    })
}

/// Central-difference divergence on the interior, zero on the outer ring.
pub fn divergence(field: &VectorField2D) -> Result<Vec<f64>> {
    let g = *field.grid();
    g.require_min(MIN_OPERATOR_GRID)?;
    let (ux, uy) = (field.ux(), field.uy());
    Ok(crate::par::map_range(g.len(), |i| {
        let (x, y) = g.coords(i);
        if is_interior(&g, x, y) {
            dx(ux, &g, x, y) + dy(uy, &g, x, y)
        } else {
            0.0
        }
    }))
}

/// Central-difference scalar curl `∂uy/∂x − ∂ux/∂y`, zero on the outer ring.
pub fn curl(field: &VectorField2D) -> Result<Vec<f64>> {
    let g = *field.grid();
    g.require_min(MIN_OPERATOR_GRID)?;
    let (ux, uy) = (field.ux(), field.uy());
    Ok(crate::par::map_range(g.len(), |i| {
        let (x, y) = g.coords(i);
        if is_interior(&g, x, y) {
            dx(uy, &g, x, y) - dy(ux, &g, x, y)
        } else {
            0.0
        }
    }))
}
