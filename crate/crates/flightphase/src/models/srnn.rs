//! Simple recurrent network: `h_t = ReLU(h_{t-1}·W_hh + x_t·W_xh + b_h)`
//! over the non-PAD prefix, class logits read from the final hidden state.

use crate::nncore::{
    glorot_uniform, relu, relu_backward, softmax, softmax_xent_backward, Matrix, Rng, Scalar,
};
use crate::textproc::TokenSequence;

use super::{embedding_row, ModelConfig, ModelError};

/// All learnable tensors of the recurrent classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SrnnParams<T: Scalar> {
    /// V×d token embedding table.
    pub embedding: Matrix<T>,
    /// d×h input-to-hidden weights.
    pub w_xh: Matrix<T>,
    /// h×h hidden-to-hidden weights.
    pub w_hh: Matrix<T>,
    /// 1×h hidden bias.
    pub b_h: Matrix<T>,
    /// h×K hidden-to-output weights.
    pub w_hy: Matrix<T>,
    /// 1×K output bias.
    pub b_y: Matrix<T>,
}

/// Retained forward quantities: `hidden[t]` is the state after step `t`,
/// with `hidden[0]` the zero initial state.
#[derive(Debug, Clone)]
pub struct SrnnForward<T: Scalar> {
    pub hidden: Vec<Matrix<T>>,
    pub logits: Matrix<T>,
    pub probs: Matrix<T>,
}

impl<T: Scalar> SrnnParams<T> {
    pub fn zeros(config: &ModelConfig) -> SrnnParams<T> {
        let (v, d, h, k) = (
            config.vocab_size,
            config.embed_dim,
            config.hidden_dim,
            config.num_classes,
        );
        SrnnParams {
            embedding: Matrix::zeros(v, d),
            w_xh: Matrix::zeros(d, h),
            w_hh: Matrix::zeros(h, h),
            b_h: Matrix::zeros(1, h),
            w_hy: Matrix::zeros(h, k),
            b_y: Matrix::zeros(1, k),
        }
    }

    pub fn init(config: &ModelConfig, rng: &mut Rng) -> SrnnParams<T> {
        let (v, d, h, k) = (
            config.vocab_size,
            config.embed_dim,
            config.hidden_dim,
            config.num_classes,
        );
        SrnnParams {
            embedding: glorot_uniform(v, d, rng),
            w_xh: glorot_uniform(d, h, rng),
            w_hh: glorot_uniform(h, h, rng),
            b_h: Matrix::zeros(1, h),
            w_hy: glorot_uniform(h, k, rng),
            b_y: Matrix::zeros(1, k),
        }
    }

    /// Run the recurrence over the non-PAD prefix and read logits from the
    /// final hidden state.
    pub fn forward(&self, seq: &TokenSequence) -> Result<SrnnForward<T>, ModelError> {
        let steps = seq.active_len();
        if steps == 0 {
            return Err(ModelError::EmptySequence);
        }
        let h = self.w_hh.rows();
        let mut hidden = Vec::with_capacity(steps + 1);
        hidden.push(Matrix::zeros(1, h));
        for &id in seq.active_ids() {
            let x = embedding_row(&self.embedding, id)?;
            let pre = hidden
                .last()
                .unwrap()
                .matmul(&self.w_hh)?
                .add(&x.matmul(&self.w_xh)?)?
                .add(&self.b_h)?;
            hidden.push(relu(&pre));
        }
        let logits = hidden.last().unwrap().matmul(&self.w_hy)?.add(&self.b_y)?;
        let probs = softmax(&logits)?;
        Ok(SrnnForward {
            hidden,
            logits,
            probs,
        })
    }

    /// Backpropagation through time: exact cross-entropy gradients via
    /// reverse accumulation over every step, with the embedding gradient
    /// scatter-added per position.
    pub fn backward(
        &self,
        seq: &TokenSequence,
        fwd: &SrnnForward<T>,
        target: usize,
    ) -> Result<SrnnParams<T>, ModelError> {
        let steps = seq.active_len();
        let mut grads = SrnnParams {
            embedding: self.embedding.zeros_like(),
            w_xh: self.w_xh.zeros_like(),
            w_hh: self.w_hh.zeros_like(),
            b_h: self.b_h.zeros_like(),
            w_hy: self.w_hy.zeros_like(),
            b_y: self.b_y.zeros_like(),
        };

        let dlogits = softmax_xent_backward(&fwd.probs, target)?;
        let h_last = &fwd.hidden[steps];
        grads.w_hy = h_last.transpose().matmul(&dlogits)?;
        grads.b_y = dlogits.clone();

        let w_hy_t = self.w_hy.transpose();
        let w_hh_t = self.w_hh.transpose();
        let w_xh_t = self.w_xh.transpose();

        let mut dh = dlogits.matmul(&w_hy_t)?;
        for t in (0..steps).rev() {
            let h_t = &fwd.hidden[t + 1];
            let h_prev = &fwd.hidden[t];
            // h_t = relu(pre_t), so h_t > 0 exactly where pre_t > 0.
            let dpre = relu_backward(h_t, &dh)?;

            grads.b_h.add_assign(&dpre)?;
            let id = seq.active_ids()[t];
            let x = embedding_row(&self.embedding, id)?;
            grads.w_xh.add_assign(&x.transpose().matmul(&dpre)?)?;
            grads.w_hh.add_assign(&h_prev.transpose().matmul(&dpre)?)?;

            let dx = dpre.matmul(&w_xh_t)?;
            let row = grads.embedding.row_mut(id as usize);
            for (g, &v) in row.iter_mut().zip(dx.data()) {
                *g += v;
            }

            dh = dpre.matmul(&w_hh_t)?;
        }
        Ok(grads)
    }

    pub fn tensors(&self) -> Vec<(&'static str, &Matrix<T>)> {
        vec![
            ("embedding", &self.embedding),
            ("w_xh", &self.w_xh),
            ("w_hh", &self.w_hh),
            ("b_h", &self.b_h),
            ("w_hy", &self.w_hy),
            ("b_y", &self.b_y),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Matrix<T>)> {
        vec![
            ("embedding", &mut self.embedding),
            ("w_xh", &mut self.w_xh),
            ("w_hh", &mut self.w_hh),
            ("b_h", &mut self.b_h),
            ("w_hy", &mut self.w_hy),
            ("b_y", &mut self.b_y),
        ]
    }
}
