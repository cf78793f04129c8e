//! Independent reference computations for the integration tests.
//!
//! Nothing here calls into the library's stencil or solver code: the
//! operators are re-derived from the difference formulas, the system matrix
//! is built by evaluating the stencil equations on unit fields, and the dense
//! solvers are textbook Gaussian elimination and cyclic Jacobi rotations.

#![allow(dead_code, clippy::needless_range_loop)]

use elastoprobe_core::{BCMap, VectorField2D};

/// Field value by component, addressed as `(x, y)`.
fn comp(f: &VectorField2D, c: usize, x: usize, y: usize) -> f64 {
    f.get(x, y)[c]
}

/// Left-hand side of the discrete equilibrium equation `comp` at `(i, j)`,
/// written out term by term.
pub fn literal_stencil(
    f: &VectorField2D,
    nu: f64,
    i: usize,
    j: usize,
    which: usize,
) -> f64 {
    let g = f.grid();
    let (dx, dy) = (g.dx, g.dy);
    let ux = |a: usize, b: usize| comp(f, 0, a, b);
    let uy = |a: usize, b: usize| comp(f, 1, a, b);
    if which == 0 {
        2.0 * (1.0 - nu) * ((ux(i + 1, j) - 2.0 * ux(i, j) + ux(i - 1, j)) / (dx * dx))
            + (1.0 - 2.0 * nu) * ((ux(i, j + 1) - 2.0 * ux(i, j) + ux(i, j - 1)) / (dy * dy))
            + (uy(i + 1, j + 1) - uy(i + 1, j - 1) - uy(i - 1, j + 1) + uy(i - 1, j - 1))
                / (4.0 * dx * dy)
    } else {
        2.0 * (1.0 - nu) * ((uy(i, j + 1) - 2.0 * uy(i, j) + uy(i, j - 1)) / (dy * dy))
            + (1.0 - 2.0 * nu) * ((uy(i + 1, j) - 2.0 * uy(i, j) + uy(i - 1, j)) / (dx * dx))
            + (ux(i + 1, j + 1) - ux(i + 1, j - 1) - ux(i - 1, j + 1) + ux(i - 1, j - 1))
                / (4.0 * dx * dy)
    }
}

/// Dense `(A, b)` with unknowns interleaved per free pixel in row-major
/// order, rows negated so that `A` is positive definite.
pub fn dense_system(bc: &BCMap, nu: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let g = *bc.grid();
    let free: Vec<(usize, usize)> = (0..g.height)
        .flat_map(|y| (0..g.width).map(move |x| (x, y)))
        .filter(|&(x, y)| !bc.is_dirichlet(g.index(x, y)))
        .collect();
    let n = 2 * free.len();
    let mut known = bc.prescribed().clone();
    for &(x, y) in &free {
        known.set(x, y, [0.0, 0.0]);
    }
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for (k, &(x, y)) in free.iter().enumerate() {
        for c in 0..2 {
            b[2 * k + c] = literal_stencil(&known, nu, x, y, c);
        }
    }
    for (q, &(qx, qy)) in free.iter().enumerate() {
        for qc in 0..2 {
            let mut unit = VectorField2D::zeros(g);
            let mut v = [0.0, 0.0];
            v[qc] = 1.0;
            unit.set(qx, qy, v);
            for (k, &(x, y)) in free.iter().enumerate() {
                if x.abs_diff(qx) > 1 || y.abs_diff(qy) > 1 {
                    continue;
                }
                for c in 0..2 {
                    a[2 * k + c][2 * q + qc] = -literal_stencil(&unit, nu, x, y, c);
                }
            }
        }
    }
    (a, b)
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-300, "singular matrix");
        for r in col + 1..n {
            let f = a[r][col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Scatter a solution vector of `dense_system` back into a full field.
pub fn scatter(bc: &BCMap, u: &[f64]) -> VectorField2D {
    let g = *bc.grid();
    let mut f = bc.prescribed().clone();
    let mut k = 0;
    for y in 0..g.height {
        for x in 0..g.width {
            if !bc.is_dirichlet(g.index(x, y)) {
                f.set(x, y, [u[2 * k], u[2 * k + 1]]);
                k += 1;
            }
        }
    }
    f
}

/// Interior Laplacian recomputed from the difference formula.
pub fn naive_laplacian(f: &VectorField2D, x: usize, y: usize) -> [f64; 2] {
    let g = f.grid();
    let mut out = [0.0; 2];
    for (c, o) in out.iter_mut().enumerate() {
        let v = |a, b| comp(f, c, a, b);
        *o = (v(x + 1, y) - 2.0 * v(x, y) + v(x - 1, y)) / (g.dx * g.dx)
            + (v(x, y + 1) - 2.0 * v(x, y) + v(x, y - 1)) / (g.dy * g.dy);
    }
    out
}

/// Interior grad-div recomputed from the difference formulas.
pub fn naive_grad_div(f: &VectorField2D, x: usize, y: usize) -> [f64; 2] {
    let g = f.grid();
    let ux = |a, b| comp(f, 0, a, b);
    let uy = |a, b| comp(f, 1, a, b);
    let cross = |h: &dyn Fn(usize, usize) -> f64| {
        (h(x + 1, y + 1) - h(x + 1, y - 1) - h(x - 1, y + 1) + h(x - 1, y - 1)) / (4.0 * g.dx * g.dy)
    };
    [
        (ux(x + 1, y) - 2.0 * ux(x, y) + ux(x - 1, y)) / (g.dx * g.dx) + cross(&uy),
        (uy(x, y + 1) - 2.0 * uy(x, y) + uy(x, y - 1)) / (g.dy * g.dy) + cross(&ux),
    ]
}

/// Small deterministic generator for test data (xorshift64*).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        let v = self.0.wrapping_mul(0x2545_F491_4F6C_DD1D);
        (v >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[-1, 1)`.
    pub fn sym(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }
}

pub fn random_field(g: elastoprobe_core::Grid2D, seed: u64) -> VectorField2D {
    let mut r = TestRng::new(seed);
    VectorField2D::from_fn(g, |_, _| [r.sym(), r.sym()])
}
