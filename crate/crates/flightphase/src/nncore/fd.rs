//! Central finite differences, the oracle every hand-derived backward pass
//! is checked against.

use super::matrix::{Matrix, NumericError};
use super::scalar::Scalar;

/// Default step for 64-bit checking.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Numerical gradient of a scalar-valued function: per entry,
/// `(f(x + h·e) − f(x − h·e)) / 2h`.
pub fn finite_difference_grad<T: Scalar>(
    mut f: impl FnMut(&Matrix<T>) -> T,
    at: &Matrix<T>,
    h: T,
) -> Result<Matrix<T>, NumericError> {
    let mut grad = at.zeros_like();
    let mut probe = at.clone();
    let two = T::from_f64(2.0);
    for i in 0..at.data().len() {
        let orig = at.data()[i];
        probe.data_mut()[i] = orig + h;
        let plus = f(&probe);
        probe.data_mut()[i] = orig - h;
        let minus = f(&probe);
        probe.data_mut()[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(NumericError::NonFinite {
                context: "finite_difference_grad",
            });
        }
        grad.data_mut()[i] = (plus - minus) / (two * h);
    }
    Ok(grad)
}

/// Relative disagreement between an analytic and a numerical gradient:
/// max over entries of `|a − b| / max(1e-8, |a| + |b|)`.
pub fn max_relative_error<T: Scalar>(analytic: &Matrix<T>, numeric: &Matrix<T>) -> f64 {
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &b)| {
            let a = a.as_f64();
            let b = b.as_f64();
            (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::ops::{cross_entropy, softmax, softmax_xent_backward};

    #[test]
    fn linear_function_has_unit_gradient() {
        let at = Matrix::from_vec(2, 3, vec![0.4, -1.0, 2.0, 0.0, 1.5, -0.3]);
        let grad =
            finite_difference_grad(|x: &Matrix<f64>| x.data().iter().sum(), &at, DEFAULT_STEP)
                .unwrap();
        for &g in grad.data() {
            assert!((g - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn quadratic_matches_analytic_derivative() {
        let at = Matrix::from_vec(1, 1, vec![3.0]);
        let grad = finite_difference_grad(
            |x: &Matrix<f64>| x.get(0, 0) * x.get(0, 0),
            &at,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!((grad.get(0, 0) - 6.0).abs() < 1e-7);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let at = Matrix::from_vec(1, 1, vec![0.0]);
        let r = finite_difference_grad(|_: &Matrix<f64>| f64::NAN, &at, DEFAULT_STEP);
        assert!(matches!(r, Err(NumericError::NonFinite { .. })));
    }

    #[test]
    fn relu_backward_matches_oracle() {
        use crate::nncore::ops::{relu, relu_backward};
        // Away from the kink at 0 the masked gradient must agree with
        // finite differences of sum(relu(x)).
        let at = Matrix::from_vec(2, 3, vec![0.4, -1.0, 2.0, -0.2, 1.5, -0.3]);
        let upstream = Matrix::from_vec(2, 3, vec![1.0; 6]);
        let analytic = relu_backward(&at, &upstream).unwrap();
        let numeric = finite_difference_grad(
            |x: &Matrix<f64>| relu(x).data().iter().sum(),
            &at,
            DEFAULT_STEP,
        )
        .unwrap();
        let err = max_relative_error(&analytic, &numeric);
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn softmax_xent_backward_matches_oracle() {
        let logits = Matrix::row_vector(&[0.2_f64, -1.1, 0.7, 0.05]);
        let target = 2;
        let probs = softmax(&logits).unwrap();
        let analytic = softmax_xent_backward(&probs, target).unwrap();
        let numeric = finite_difference_grad(
            |z: &Matrix<f64>| cross_entropy(&softmax(z).unwrap(), target).unwrap(),
            &logits,
            DEFAULT_STEP,
        )
        .unwrap();
        let err = max_relative_error(&analytic, &numeric);
        assert!(err < 1e-4, "relative error {err}");
    }
}
