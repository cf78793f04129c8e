//! Random boundary-value problems.
//!
//! Every problem fixes the outer two-pixel ring to a constant (zero by
//! default) and displaces a handful of interior "handle" pixels.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BCMap, Grid2D, MIN_STENCIL_GRID, RING_WIDTH};
use crate::solver;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Handle {
    pub x: usize,
    pub y: usize,
    pub u: [f64; 2],
}

impl Handle {
    pub fn magnitude(&self) -> f64 {
        self.u[0].hypot(self.u[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvpParams {
    pub min_handles: usize,
    pub max_handles: usize,
    pub min_magnitude: f64,
    pub max_magnitude: f64,
}

impl Default for BvpParams {
    fn default() -> Self {
        Self {
            min_handles: 1,
            max_handles: 4,
            min_magnitude: 2.0,
            max_magnitude: 10.0,
        }
    }
}

impl BvpParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_handles == 0 || self.min_handles > self.max_handles {
            return Err(Error::Config(format!(
                "handle count range {}..={} is empty or starts at zero",
                self.min_handles, self.max_handles
            )));
        }
        if !(self.min_magnitude > 0.0 && self.min_magnitude <= self.max_magnitude)
            || !self.max_magnitude.is_finite()
        {
            return Err(Error::Config(format!(
                "magnitude range [{}, {}] is invalid",
                self.min_magnitude, self.max_magnitude
            )));
        }
        Ok(())
    }
}

/// A boundary-value problem: ring value plus interior handles.
///
/// This is also the on-disk JSON form of a boundary condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvpSpec {
    #[serde(default)]
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    #[serde(default = "unit")]
    pub dx: f64,
    #[serde(default = "unit")]
    pub dy: f64,
    /// Ground-truth Poisson's ratio, when the problem was generated for one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Displacement prescribed on the whole outer ring.
    #[serde(default)]
    pub ring: [f64; 2],
    pub handles: Vec<Handle>,
    #[serde(default = "default_cap")]
    pub max_magnitude: f64,
}

fn unit() -> f64 {
    1.0
}

fn default_cap() -> f64 {
    BvpParams::default().max_magnitude
}

impl BvpSpec {
    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::with_spacing(self.width, self.height, self.dx, self.dy)
    }

    /// Rasterise into a [`BCMap`], checking the magnitude cap.
    pub fn bc_map(&self) -> Result<BCMap> {
        let grid = self.grid()?;
        let ring_mag = self.ring[0].hypot(self.ring[1]);
        if ring_mag > self.max_magnitude {
            return Err(Error::MagnitudeCap {
                magnitude: ring_mag,
                cap: self.max_magnitude,
            });
        }
        let mut bc = BCMap::ring_with_value(grid, self.ring)?;
        for h in &self.handles {
            if h.magnitude() > self.max_magnitude {
                return Err(Error::MagnitudeCap {
                    magnitude: h.magnitude(),
                    cap: self.max_magnitude,
                });
            }
            bc.prescribe(h.x, h.y, h.u)?;
        }
        Ok(bc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        crate::io::read_json(path.as_ref())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_json(self, path.as_ref())
    }
}

/// Single displaced centre pixel inside a fixed ring.
pub fn central_handle(grid: Grid2D, u: [f64; 2]) -> BvpSpec {
    BvpSpec {
        seed: 0,
        width: grid.width,
        height: grid.height,
        dx: grid.dx,
        dy: grid.dy,
        nu: None,
        ring: [0.0, 0.0],
        handles: vec![Handle {
            x: grid.width / 2,
            y: grid.height / 2,
            u,
        }],
        max_magnitude: u[0].hypot(u[1]).max(default_cap()),
    }
}

/// Draw a random problem: zero ring, `K ~ U{min..=max}` distinct interior
/// handles, each with a uniform direction and a magnitude uniform in
/// `[min_magnitude, max_magnitude]`. Deterministic in `seed`.
pub fn random_bvp(seed: u64, grid: Grid2D, nu: f64, params: &BvpParams) -> Result<(BvpSpec, BCMap)> {
    solver::check_nu(nu)?;
    params.validate()?;
    grid.require_min(MIN_STENCIL_GRID)?;
    let (iw, ih) = (grid.width - 2 * RING_WIDTH, grid.height - 2 * RING_WIDTH);
    // keep at least one pixel free
    if iw * ih <= params.max_handles {
        return Err(Error::GridTooSmall {
            width: grid.width,
            height: grid.height,
            min: MIN_STENCIL_GRID + 1,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(params.min_handles..=params.max_handles);
    let mut handles: Vec<Handle> = Vec::with_capacity(k);
    while handles.len() < k {
        let x = RING_WIDTH + rng.random_range(0..iw);
        let y = RING_WIDTH + rng.random_range(0..ih);
        if handles.iter().any(|h| h.x == x && h.y == y) {
            continue;
        }
        let angle = rng.random_range(0.0..TAU);
        let mag = if params.min_magnitude < params.max_magnitude {
            rng.random_range(params.min_magnitude..=params.max_magnitude)
        } else {
            params.max_magnitude
        };
        handles.push(Handle {
            x,
            y,
            u: [mag * angle.cos(), mag * angle.sin()],
        });
    }
    let spec = BvpSpec {
        seed,
        width: grid.width,
        height: grid.height,
        dx: grid.dx,
        dy: grid.dy,
        nu: Some(nu),
        ring: [0.0, 0.0],
        handles,
        max_magnitude: params.max_magnitude,
    };
    let bc = spec.bc_map()?;
    Ok((spec, bc))
}
