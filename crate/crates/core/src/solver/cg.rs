use crate::par;

use super::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::chunked_sum(a.len(), |i| a[i] * b[i])
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// Stops when `‖b − A x‖ / ‖b‖ ≤ tol` (recursively updated residual, checked
/// against the true residual before returning) or after `max_iter` steps.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    precond: Preconditioner,
) -> (Vec<f64>, CgOutcome) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return (
            x,
            CgOutcome {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let inv_diag: Vec<f64> = match precond {
        Preconditioner::Jacobi => a
            .diagonal()
            .into_iter()
            .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
            .collect(),
        Preconditioner::None => vec![1.0; n],
    };
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    let mut it = 0;
    while it < max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        par::update_indexed(&mut x, |i, xi| *xi += alpha * p[i]);
        par::update_indexed(&mut r, |i, ri| *ri -= alpha * ap[i]);
        it += 1;
        rel = dot(&r, &r).sqrt() / b_norm;
        if rel <= tol {
            // guard against drift of the recursive residual
            let ax = a.mul_vec(&x);
            let true_rel = par::chunked_sum(n, |i| (b[i] - ax[i]).powi(2)).sqrt() / b_norm;
            if true_rel <= tol {
                rel = true_rel;
                break;
            }
            r = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        }
        par::fill_indexed(&mut z, |i| r[i] * inv_diag[i]);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        par::update_indexed(&mut p, |i, pi| *pi = z[i] + beta * *pi);
    }
    (
        x,
        CgOutcome {
            iterations: it,
            relative_residual: rel,
            converged: rel <= tol,
        },
    )
}
