//! Finite-difference assembly and solution of the displacement-only
//! Lamé-Navier equations `(1 − 2ν) Δu + grad div u = 0`.
//!
//! Each free pixel contributes two equations:
//!
//! ```text
//! 2(1−ν) ∂²ux/∂x² + (1−2ν) ∂²ux/∂y² + ∂²uy/∂x∂y = 0
//! 2(1−ν) ∂²uy/∂y² + (1−2ν) ∂²uy/∂x² + ∂²ux/∂x∂y = 0
//! ```
//!
//! with central second differences and the four-point diagonal stencil for
//! the mixed term. The assembled rows are the negated equations, which makes
//! the matrix symmetric positive definite without further scaling; values at
//! Dirichlet neighbours are moved to the right-hand side.

mod cg;
mod sparse;

pub use cg::{conjugate_gradient, CgOutcome, Preconditioner};
pub use sparse::CsrMatrix;

use crate::error::{Error, Result};
use crate::fields::{BCMap, Grid2D, VectorField2D};
use crate::ops;

/// Poisson's ratios used throughout the pipeline.
pub const NU_VALUES: [f64; 3] = [0.0, 0.25, 0.49];

pub fn check_nu(nu: f64) -> Result<()> {
    if (0.0..0.5).contains(&nu) {
        Ok(())
    } else {
        Err(Error::PoissonRatio(nu))
    }
}

/// Stencil weights of one free-pixel equation pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilCoefficients {
    /// `2(1−ν)/Δx²`: weight of x-neighbours of `ux` in the x equation.
    pub xx_main: f64,
    /// `(1−2ν)/Δy²`: weight of y-neighbours of `ux` in the x equation.
    pub yy_shear: f64,
    /// `2(1−ν)/Δy²`: weight of y-neighbours of `uy` in the y equation.
    pub yy_main: f64,
    /// `(1−2ν)/Δx²`: weight of x-neighbours of `uy` in the y equation.
    pub xx_shear: f64,
    /// `1/(4ΔxΔy)`: weight of the diagonal cross term.
    pub cross: f64,
}

impl StencilCoefficients {
    pub fn new(nu: f64, grid: &Grid2D) -> Self {
        let (dx2, dy2) = (grid.dx * grid.dx, grid.dy * grid.dy);
        Self {
            xx_main: 2.0 * (1.0 - nu) / dx2,
            yy_shear: (1.0 - 2.0 * nu) / dy2,
            yy_main: 2.0 * (1.0 - nu) / dy2,
            xx_shear: (1.0 - 2.0 * nu) / dx2,
            cross: 1.0 / (4.0 * grid.dx * grid.dy),
        }
    }

    /// Stencil of the x equation (`comp = 0`) or y equation (`comp = 1`) as
    /// `(offset_x, offset_y, component, weight)` terms.
    pub fn terms(&self, comp: usize) -> [(isize, isize, usize, f64); 9] {
        let c = self.cross;
        let (along, across) = if comp == 0 {
            (self.xx_main, self.yy_shear)
        } else {
            (self.xx_shear, self.yy_main)
        };
        let other = 1 - comp;
        [
            (0, 0, comp, -2.0 * along - 2.0 * across),
            (1, 0, comp, along),
            (-1, 0, comp, along),
            (0, 1, comp, across),
            (0, -1, comp, across),
            (1, 1, other, c),
            (1, -1, other, -c),
            (-1, 1, other, -c),
            (-1, -1, other, c),
        ]
    }
}

/// Mapping between free pixels and unknown indices.
///
/// Unknowns are interleaved per pixel (`ux`, `uy`) in row-major pixel order:
/// free pixel `k` owns unknowns `2k` and `2k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    free_pixels: Vec<usize>,
    slot: Vec<Option<usize>>,
}

impl IndexMap {
    pub fn new(bc: &BCMap) -> Self {
        let mut slot = vec![None; bc.grid().len()];
        let mut free_pixels = Vec::new();
        for (i, s) in slot.iter_mut().enumerate() {
            if !bc.is_dirichlet(i) {
                *s = Some(free_pixels.len());
                free_pixels.push(i);
            }
        }
        Self { free_pixels, slot }
    }

    pub fn unknowns(&self) -> usize {
        2 * self.free_pixels.len()
    }

    /// Unknown index of `(pixel, component)`, or `None` for Dirichlet pixels.
    pub fn unknown(&self, pixel: usize, comp: usize) -> Option<usize> {
        self.slot[pixel].map(|k| 2 * k + comp)
    }

    /// `(pixel, component)` of unknown `u`.
    pub fn pixel_of(&self, u: usize) -> (usize, usize) {
        (self.free_pixels[u / 2], u % 2)
    }

    pub fn free_pixels(&self) -> &[usize] {
        &self.free_pixels
    }
}

/// Assembled linear system `A u = b` of one boundary-value problem.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub index_map: IndexMap,
    pub nu: f64,
    bc: BCMap,
}

impl SparseSystem {
    pub fn bc(&self) -> &BCMap {
        &self.bc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    /// `None` means ten times the number of unknowns.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == Some(0) {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Assemble the discrete system for `bc` at Poisson's ratio `nu`.
pub fn assemble(bc: &BCMap, nu: f64) -> Result<SparseSystem> {
    check_nu(nu)?;
    bc.validate(None)?;
    let grid = *bc.grid();
    let index_map = IndexMap::new(bc);
    let coeffs = StencilCoefficients::new(nu, &grid);
    let prescribed = bc.prescribed();
    let n = index_map.unknowns();
    let mut rows = Vec::with_capacity(n);
    let mut rhs = vec![0.0; n];
    for (k, &p) in index_map.free_pixels().iter().enumerate() {
        let (x, y) = grid.coords(p);
        for comp in 0..2 {
            let mut row = Vec::with_capacity(9);
            for (ox, oy, c, w) in coeffs.terms(comp) {
                let q = grid.index(
                    (x as isize + ox) as usize,
                    (y as isize + oy) as usize,
                );
                match index_map.unknown(q, c) {
                    Some(col) => row.push((col, -w)),
                    None => rhs[2 * k + comp] += w * prescribed.at(q)[c],
                }
            }
            rows.push(row);
        }
    }
    let matrix = CsrMatrix::from_rows(n, rows);
    debug_assert!(matrix.symmetry_defect() <= 1e-12);
    Ok(SparseSystem {
        matrix,
        rhs,
        index_map,
        nu,
        bc: bc.clone(),
    })
}

/// Solve an assembled system and scatter the result into a full field.
pub fn solve(system: &SparseSystem, cfg: &SolverConfig) -> Result<VectorField2D> {
    solve_with_stats(system, cfg).map(|(f, _)| f)
}

pub fn solve_with_stats(
    system: &SparseSystem,
    cfg: &SolverConfig,
) -> Result<(VectorField2D, CgOutcome)> {
    cfg.validate()?;
    if system.rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteRhs);
    }
    let n = system.index_map.unknowns();
    let max_iter = cfg.max_iter.unwrap_or(10 * n.max(1));
    let (u, outcome) =
        conjugate_gradient(&system.matrix, &system.rhs, cfg.tol, max_iter, cfg.preconditioner);
    if !outcome.converged {
        return Err(Error::NoConvergence {
            iterations: outcome.iterations,
            residual: outcome.relative_residual,
        });
    }
    let mut field = system.bc.prescribed().clone();
    for (k, &p) in system.index_map.free_pixels().iter().enumerate() {
        let (x, y) = system.bc.grid().coords(p);
        field.set(x, y, [u[2 * k], u[2 * k + 1]]);
    }
    Ok((field, outcome))
}

/// Assemble and solve in one step.
pub fn solve_bvp(bc: &BCMap, nu: f64, cfg: &SolverConfig) -> Result<VectorField2D> {
    solve(&assemble(bc, nu)?, cfg)
}

/// Maximum absolute stencil value over all free pixels.
pub fn residual(field: &VectorField2D, bc: &BCMap, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    bc.grid().require_same(field.grid())?;
    let grid = *field.grid();
    let lap = ops::laplacian(field)?;
    let gd = ops::grad_div(field)?;
    let shear = 1.0 - 2.0 * nu;
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        if bc.is_dirichlet(i) {
            continue;
        }
        let (l, g) = (lap.at(i), gd.at(i));
        worst = worst
            .max((shear * l[0] + g[0]).abs())
            .max((shear * l[1] + g[1]).abs());
    }
    Ok(worst)
}
