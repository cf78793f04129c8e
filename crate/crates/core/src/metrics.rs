//! Error metrics between displacement fields.

use crate::error::{Error, Result};
use crate::fields::VectorField2D;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Root mean square over all pixels and both components of `a − b`.
pub fn rmse(a: &VectorField2D, b: &VectorField2D) -> Result<f64> {
    a.grid().require_same(b.grid())?;
    let n = 2 * a.grid().len();
    let sq: f64 = a
        .ux()
        .iter()
        .zip(b.ux())
        .chain(a.uy().iter().zip(b.uy()))
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    Ok((sq / n as f64).sqrt())
}

/// Population standard deviation (divides by `N`).
pub fn sd(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("standard deviation of an empty list"));
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Ok(var.sqrt())
}

/// Per-pixel Euclidean error `‖a − b‖`.
pub fn error_magnitudes(a: &VectorField2D, b: &VectorField2D) -> Result<Vec<f64>> {
    a.grid().require_same(b.grid())?;
    Ok((0..a.grid().len())
        .map(|i| {
            let (p, q) = (a.at(i), b.at(i));
            (p[0] - q[0]).hypot(p[1] - q[1])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid2D;
    use proptest::prelude::*;

    fn g() -> Grid2D {
        Grid2D::new(6, 5).unwrap()
    }

    #[test]
    fn rmse_closed_forms() {
        let a = VectorField2D::from_fn(g(), |x, y| [x as f64, y as f64 * 0.5]);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        let b = VectorField2D::from_fn(g(), |x, y| [x as f64 + 1.0, y as f64 * 0.5]);
        assert!((rmse(&a, &b).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sd_closed_forms() {
        assert_eq!(sd(&[3.0; 7]).unwrap(), 0.0);
        assert_eq!(sd(&[0.0, 1.0]).unwrap(), 0.5);
        assert!(sd(&[]).is_err());
    }

    #[test]
    fn rmse_dimension_mismatch() {
        let a = VectorField2D::zeros(g());
        let b = VectorField2D::zeros(Grid2D::new(5, 6).unwrap());
        assert!(rmse(&a, &b).is_err());
    }

    fn field(vals: Vec<f64>) -> VectorField2D {
        let (ux, uy) = vals.split_at(30);
        VectorField2D::from_components(g(), ux.to_vec(), uy.to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn rmse_is_a_metric(
            a in prop::collection::vec(-10.0f64..10.0, 60),
            b in prop::collection::vec(-10.0f64..10.0, 60),
            c in prop::collection::vec(-10.0f64..10.0, 60),
        ) {
            let (a, b, c) = (field(a), field(b), field(c));
            prop_assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
            prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
            prop_assert!(rmse(&a, &c).unwrap() <= rmse(&a, &b).unwrap() + rmse(&b, &c).unwrap() + 1e-12);
        }

        #[test]
        fn sd_translation_and_scale(
            v in prop::collection::vec(-100.0f64..100.0, 1..50),
            shift in -50.0f64..50.0,
            scale in -5.0f64..5.0,
        ) {
            let base = sd(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + shift).collect();
            let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
            prop_assert!((sd(&shifted).unwrap() - base).abs() <= 1e-9 * (1.0 + base));
            prop_assert!((sd(&scaled).unwrap() - scale.abs() * base).abs() <= 1e-9 * (1.0 + base));
        }
    }
}
