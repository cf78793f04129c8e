//! Grid-aligned data types shared by every stage of the pipeline.
//!
//! All rasters are stored row-major with row 0 at the top. Pixel `(x, y)`
//! addresses column `x` and row `y`; `x` runs along the first spatial axis
//! (spacing `dx`) and `y` along the second (spacing `dy`). Vector fields keep
//! their two components in separate planes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest grid that admits the two-deep interior needed by the solver and
/// the estimator.
pub const MIN_STENCIL_GRID: usize = 5;

/// Width of the prescribed outer ring of every boundary-value problem.
pub const RING_WIDTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub width: usize,
    pub height: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Grid2D {
    /// Unit-spaced grid.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::with_spacing(width, height, 1.0, 1.0)
    }

    pub fn with_spacing(width: usize, height: usize, dx: f64, dy: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::GridTooSmall {
                width,
                height,
                min: 1,
            });
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::BadSpacing { dx, dy });
        }
        Ok(Self {
            width,
            height,
            dx,
            dy,
        })
    }

    /// Square unit-spaced grid of side `n`.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Distance (in pixels) from `(x, y)` to the nearest grid edge.
    #[inline]
    pub fn edge_distance(&self, x: usize, y: usize) -> usize {
        x.min(y)
            .min(self.width - 1 - x)
            .min(self.height - 1 - y)
    }

    pub fn require_min(&self, min: usize) -> Result<()> {
        if self.width < min || self.height < min {
            return Err(Error::GridTooSmall {
                width: self.width,
                height: self.height,
                min,
            });
        }
        Ok(())
    }

    pub fn require_same(&self, other: &Grid2D) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: other.dims(),
            });
        }
        Ok(())
    }
}

/// Per-pixel two-component displacement (pixels).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    grid: Grid2D,
    ux: Vec<f64>,
    uy: Vec<f64>,
}

impl VectorField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            ux: vec![0.0; grid.len()],
            uy: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid2D, v: [f64; 2]) -> Self {
        Self {
            grid,
            ux: vec![v[0]; grid.len()],
            uy: vec![v[1]; grid.len()],
        }
    }

    /// Build from the planar component arrays, checking length and finiteness.
    pub fn from_components(grid: Grid2D, ux: Vec<f64>, uy: Vec<f64>) -> Result<Self> {
        for (len, _) in [(ux.len(), 'x'), (uy.len(), 'y')] {
            if len != grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: grid.dims(),
                    got: (len, 1),
                });
            }
        }
        if let Some(i) = ux
            .iter()
            .zip(&uy)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            let (x, y) = grid.coords(i);
            return Err(Error::NonFinite { x, y });
        }
        Ok(Self { grid, ux, uy })
    }

    /// Build by evaluating `f(x, y)` at every pixel. Panics on non-finite output.
    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(usize, usize) -> [f64; 2]) -> Self {
        let mut field = Self::zeros(grid);
        for y in 0..grid.height {
            for x in 0..grid.width {
                let v = f(x, y);
                assert!(v[0].is_finite() && v[1].is_finite(), "non-finite at ({x}, {y})");
                field.set(x, y, v);
            }
        }
        field
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn ux(&self) -> &[f64] {
        &self.ux
    }

    #[inline]
    pub fn uy(&self) -> &[f64] {
        &self.uy
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        let i = self.grid.index(x, y);
        [self.ux[i], self.uy[i]]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 2] {
        [self.ux[idx], self.uy[idx]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: [f64; 2]) {
        let i = self.grid.index(x, y);
        self.ux[i] = v[0];
        self.uy[i] = v[1];
    }

    #[inline]
    pub fn magnitude(&self, idx: usize) -> f64 {
        self.ux[idx].hypot(self.uy[idx])
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.magnitude(i))
            .fold(0.0, f64::max)
    }

    pub fn into_components(self) -> (Grid2D, Vec<f64>, Vec<f64>) {
        (self.grid, self.ux, self.uy)
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &VectorField2D, b: f64) -> Result<Self> {
        self.grid.require_same(&other.grid)?;
        let ux = self.ux.iter().zip(&other.ux).map(|(p, q)| a * p + b * q).collect();
        let uy = self.uy.iter().zip(&other.uy).map(|(p, q)| a * p + b * q).collect();
        Ok(Self {
            grid: self.grid,
            ux,
            uy,
        })
    }

    /// Copy with every component rounded to `f32`, as stored on disk.
    pub fn quantized_f32(&self) -> Self {
        let q = |v: &Vec<f64>| v.iter().map(|x| *x as f32 as f64).collect();
        Self {
            grid: self.grid,
            ux: q(&self.ux),
            uy: q(&self.uy),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            ux: self.ux.iter().map(|v| v * c).collect(),
            uy: self.uy.iter().map(|v| v * c).collect(),
        }
    }
}

/// Grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarImage {
    grid: Grid2D,
    data: Vec<f64>,
}

impl ScalarImage {
    pub fn new(grid: Grid2D, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.dims(),
                got: (data.len(), 1),
            });
        }
        for (i, &v) in data.iter().enumerate() {
            let (x, y) = grid.coords(i);
            if !v.is_finite() {
                return Err(Error::NonFinite { x, y });
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::IntensityRange { x, y, value: v });
            }
        }
        Ok(Self { grid, data })
    }

    pub fn filled(grid: Grid2D, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    /// Build from `f(x, y)`; values are clamped into `[0, 1]`.
    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for y in 0..grid.height {
            for x in 0..grid.width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self { grid, data }
    }

    /// Smooth random texture used as a stand-in source image.
    ///
    /// A sum of randomly placed Gaussian blobs plus a weak sinusoidal
    /// pattern, normalised to `[0, 1]`.
    pub fn synthetic_texture(grid: Grid2D, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (grid.width as f64, grid.height as f64);
        let n_blobs = 12 + grid.len() / 256;
        let blobs: Vec<(f64, f64, f64, f64)> = (0..n_blobs)
            .map(|_| {
                (
                    rng.random_range(0.0..w),
                    rng.random_range(0.0..h),
                    rng.random_range(1.5..(w.min(h) / 6.0).max(2.0)),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let (fx, fy) = (rng.random_range(0.2..0.6), rng.random_range(0.2..0.6));
        let mut raw = Vec::with_capacity(grid.len());
        for y in 0..grid.height {
            for x in 0..grid.width {
                let (px, py) = (x as f64, y as f64);
                let mut v = 0.15 * (fx * px).sin() * (fy * py).cos();
                for &(cx, cy, s, a) in &blobs {
                    let r2 = (px - cx).powi(2) + (py - cy).powi(2);
                    v += a * (-r2 / (2.0 * s * s)).exp();
                }
                raw.push(v);
            }
        }
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let data = raw.into_iter().map(|v| (v - lo) / span).collect();
        Self { grid, data }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Copy rounded to 8-bit levels, as stored in a PGM.
    pub fn quantized_u8(&self) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|v| (v * 255.0).round() / 255.0).collect(),
        }
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[self.grid.index(x, y)]
    }
}

/// Dirichlet mask with prescribed displacements.
#[derive(Debug, Clone, PartialEq)]
pub struct BCMap {
    grid: Grid2D,
    dirichlet: Vec<bool>,
    prescribed: VectorField2D,
}

impl BCMap {
    /// Zero-displacement outer ring of width [`RING_WIDTH`], everything else free.
    pub fn fixed_ring(grid: Grid2D) -> Result<Self> {
        Self::ring_with_value(grid, [0.0, 0.0])
    }

    pub fn ring_with_value(grid: Grid2D, value: [f64; 2]) -> Result<Self> {
        grid.require_min(MIN_STENCIL_GRID)?;
        let mut dirichlet = vec![false; grid.len()];
        let mut prescribed = VectorField2D::zeros(grid);
        for y in 0..grid.height {
            for x in 0..grid.width {
                if grid.edge_distance(x, y) < RING_WIDTH {
                    dirichlet[grid.index(x, y)] = true;
                    prescribed.set(x, y, value);
                }
            }
        }
        Ok(Self {
            grid,
            dirichlet,
            prescribed,
        })
    }

    /// Build from raw parts, enforcing the ring and magnitude-cap invariants.
    pub fn from_parts(
        grid: Grid2D,
        dirichlet: Vec<bool>,
        prescribed: VectorField2D,
        cap: Option<f64>,
    ) -> Result<Self> {
        grid.require_min(MIN_STENCIL_GRID)?;
        grid.require_same(prescribed.grid())?;
        if dirichlet.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.dims(),
                got: (dirichlet.len(), 1),
            });
        }
        let bc = Self {
            grid,
            dirichlet,
            prescribed,
        };
        bc.validate(cap)?;
        Ok(bc)
    }

    pub fn validate(&self, cap: Option<f64>) -> Result<()> {
        for y in 0..self.grid.height {
            for x in 0..self.grid.width {
                let i = self.grid.index(x, y);
                if self.grid.edge_distance(x, y) < RING_WIDTH && !self.dirichlet[i] {
                    return Err(Error::RingNotDirichlet { x, y });
                }
                if let Some(cap) = cap {
                    let m = self.prescribed.magnitude(i);
                    if self.dirichlet[i] && m > cap {
                        return Err(Error::MagnitudeCap { magnitude: m, cap });
                    }
                }
            }
        }
        Ok(())
    }

    /// Prescribe `value` at `(x, y)` and mark it Dirichlet.
    pub fn prescribe(&mut self, x: usize, y: usize, value: [f64; 2]) -> Result<()> {
        if x >= self.grid.width || y >= self.grid.height {
            return Err(Error::HandleOutside { x, y });
        }
        if !(value[0].is_finite() && value[1].is_finite()) {
            return Err(Error::NonFinite { x, y });
        }
        let i = self.grid.index(x, y);
        self.dirichlet[i] = true;
        self.prescribed.set(x, y, value);
        Ok(())
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn is_dirichlet(&self, idx: usize) -> bool {
        self.dirichlet[idx]
    }

    pub fn dirichlet(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn prescribed(&self) -> &VectorField2D {
        &self.prescribed
    }

    pub fn free_count(&self) -> usize {
        self.dirichlet.iter().filter(|d| !**d).count()
    }

    pub fn max_prescribed_magnitude(&self) -> f64 {
        (0..self.grid.len())
            .filter(|&i| self.dirichlet[i])
            .map(|i| self.prescribed.magnitude(i))
            .fold(0.0, f64::max)
    }
}

/// Per-pixel Poisson's ratio estimate with validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NuMap {
    grid: Grid2D,
    nu: Vec<f64>,
    valid: Vec<bool>,
}

impl NuMap {
    /// Invalid pixels carry `0.0`.
    pub fn new(grid: Grid2D, nu: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if nu.len() != grid.len() || valid.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.dims(),
                got: (nu.len(), valid.len()),
            });
        }
        let nu = nu
            .into_iter()
            .zip(&valid)
            .map(|(v, &ok)| if ok && v.is_finite() { v } else { 0.0 })
            .collect();
        Ok(Self { grid, nu, valid })
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nu
            .iter()
            .zip(&self.valid)
            .filter_map(|(v, ok)| ok.then_some(*v))
    }
}
