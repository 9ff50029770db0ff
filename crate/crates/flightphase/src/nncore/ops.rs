//! Activations, loss, and weight initialization.

use super::matrix::{Matrix, NumericError};
use super::rng::Rng;
use super::scalar::Scalar;

/// Floor added inside the log so saturated outputs cannot produce `-inf`.
const LOG_FLOOR: f64 = 1e-12;

/// Elementwise `max(0, x)`.
pub fn relu<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    let mut out = x.clone();
    for v in out.data_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    out
}

/// Pass `upstream` where `x > 0`, zero elsewhere. The subgradient at 0 is 0.
pub fn relu_backward<T: Scalar>(
    x: &Matrix<T>,
    upstream: &Matrix<T>,
) -> Result<Matrix<T>, NumericError> {
    if x.shape() != upstream.shape() {
        return Err(NumericError::ShapeMismatch {
            op: "relu_backward",
            lhs: x.shape(),
            rhs: upstream.shape(),
        });
    }
    let mut out = upstream.clone();
    for (o, &xv) in out.data_mut().iter_mut().zip(x.data()) {
        if xv <= T::zero() {
            *o = T::zero();
        }
    }
    Ok(out)
}

/// Max-shifted softmax over a row vector.
pub fn softmax<T: Scalar>(z: &Matrix<T>) -> Result<Matrix<T>, NumericError> {
    z.check_finite("softmax input")?;
    let mut out = z.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(out)
}

/// Negative log-likelihood of the target class: `-ln(probs[target] + floor)`.
pub fn cross_entropy<T: Scalar>(probs: &Matrix<T>, target: usize) -> Result<T, NumericError> {
    let k = probs.cols();
    if target >= k {
        return Err(NumericError::TargetOutOfRange { target, len: k });
    }
    let p = probs.get(0, target);
    Ok(-(p + T::from_f64(LOG_FLOOR)).ln())
}

/// Combined gradient of cross-entropy composed with softmax, with respect to
/// the logits: `probs - onehot(target)`.
pub fn softmax_xent_backward<T: Scalar>(
    probs: &Matrix<T>,
    target: usize,
) -> Result<Matrix<T>, NumericError> {
    let k = probs.cols();
    if target >= k {
        return Err(NumericError::TargetOutOfRange { target, len: k });
    }
    let mut grad = probs.clone();
    let t = grad.get(0, target);
    grad.set(0, target, t - T::one());
    Ok(grad)
}

/// Glorot/Xavier uniform initialization: i.i.d. on `±sqrt(6 / (rows + cols))`.
/// Draws happen in f64 so f32 and f64 runs consume the generator identically.
pub fn glorot_uniform<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> Matrix<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| {
        T::from_f64(rng.next_range(-bound, bound))
    })
}
