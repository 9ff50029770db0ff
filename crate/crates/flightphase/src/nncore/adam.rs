//! Adam optimizer with bias correction.

use super::matrix::{Matrix, NumericError};
use super::scalar::Scalar;

/// Optimizer hyperparameters shared by every parameter tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper<T: Scalar> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> Default for AdamHyper<T> {
    fn default() -> Self {
        AdamHyper {
            lr: T::from_f64(1e-3),
            beta1: T::from_f64(0.9),
            beta2: T::from_f64(0.999),
            epsilon: T::from_f64(1e-8),
        }
    }
}

/// Per-parameter optimizer state: first/second moment accumulators plus the
/// step counter.
#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    m: Matrix<T>,
    v: Matrix<T>,
    t: u64,
    pub hyper: AdamHyper<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(rows: usize, cols: usize, hyper: AdamHyper<T>) -> Self {
        AdamState {
            m: Matrix::zeros(rows, cols),
            v: Matrix::zeros(rows, cols),
            t: 0,
            hyper,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update:
/// `m ← β₁m + (1−β₁)g`, `v ← β₂v + (1−β₂)g²`,
/// `θ ← θ − lr·m̂/(√v̂ + ε)` with `m̂ = m/(1−β₁ᵗ)`, `v̂ = v/(1−β₂ᵗ)`.
/// The step counter increments before the bias corrections are applied.
pub fn adam_step<T: Scalar>(
    param: &mut Matrix<T>,
    grad: &Matrix<T>,
    state: &mut AdamState<T>,
) -> Result<(), NumericError> {
    if param.shape() != grad.shape() || param.shape() != state.m.shape() {
        return Err(NumericError::ShapeMismatch {
            op: "adam_step",
            lhs: param.shape(),
            rhs: grad.shape(),
        });
    }
    state.t += 1;
    let h = state.hyper;
    let one = T::one();
    let bc1 = one - h.beta1.powi(state.t as i32);
    let bc2 = one - h.beta2.powi(state.t as i32);
    for i in 0..param.data().len() {
        let g = grad.data()[i];
        let m = h.beta1 * state.m.data()[i] + (one - h.beta1) * g;
        let v = h.beta2 * state.v.data()[i] + (one - h.beta2) * g * g;
        state.m.data_mut()[i] = m;
        state.v.data_mut()[i] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        param.data_mut()[i] = param.data()[i] - h.lr * m_hat / (v_hat.sqrt() + h.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_matches_hand_recurrence() {
        // One Adam step from θ=0 with g=0.5 and default hyperparameters:
        // m=0.05, v=0.00025, m̂=0.5, v̂=0.25, θ₁ = -lr·0.5/(0.5+ε).
        let mut theta = Matrix::row_vector(&[0.0_f64]);
        let grad = Matrix::row_vector(&[0.5_f64]);
        let mut state = AdamState::new(1, 1, AdamHyper::default());
        adam_step(&mut theta, &grad, &mut state).unwrap();
        let expected = -1e-3 * 0.5 / (0.5 + 1e-8);
        assert!(
            (theta.get(0, 0) - expected).abs() < 1e-15,
            "got {}, expected {expected}",
            theta.get(0, 0)
        );
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn zero_gradient_fresh_state_is_noop() {
        let mut theta = Matrix::row_vector(&[0.7_f64, -0.3]);
        let before = theta.clone();
        let grad = theta.zeros_like();
        let mut state = AdamState::new(1, 2, AdamHyper::default());
        for _ in 0..5 {
            adam_step(&mut theta, &grad, &mut state).unwrap();
        }
        assert_eq!(theta, before);
    }

    #[test]
    fn parameters_update_independently() {
        let hyper = AdamHyper::default();
        let ga = Matrix::row_vector(&[0.2_f64]);
        let gb = Matrix::row_vector(&[-0.4_f64]);

        // a then b
        let mut a1 = Matrix::row_vector(&[1.0_f64]);
        let mut b1 = Matrix::row_vector(&[2.0_f64]);
        let mut sa1 = AdamState::new(1, 1, hyper);
        let mut sb1 = AdamState::new(1, 1, hyper);
        adam_step(&mut a1, &ga, &mut sa1).unwrap();
        adam_step(&mut b1, &gb, &mut sb1).unwrap();

        // b then a
        let mut a2 = Matrix::row_vector(&[1.0_f64]);
        let mut b2 = Matrix::row_vector(&[2.0_f64]);
        let mut sa2 = AdamState::new(1, 1, hyper);
        let mut sb2 = AdamState::new(1, 1, hyper);
        adam_step(&mut b2, &gb, &mut sb2).unwrap();
        adam_step(&mut a2, &ga, &mut sa2).unwrap();

        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut theta = Matrix::<f64>::zeros(2, 2);
        let grad = Matrix::<f64>::zeros(2, 3);
        let mut state = AdamState::new(2, 2, AdamHyper::default());
        assert!(matches!(
            adam_step(&mut theta, &grad, &mut state),
            Err(NumericError::ShapeMismatch { .. })
        ));
    }
}
