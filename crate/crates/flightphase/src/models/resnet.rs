//! Residual dense network: mean-pooled embeddings, an input projection, two
//! residual dense blocks of three skip units each (`u ← ReLU(u·W + b) + u`),
//! and a linear readout.

use crate::nncore::{
    glorot_uniform, relu, relu_backward, softmax, softmax_xent_backward, Matrix, Rng, Scalar,
};
use crate::textproc::TokenSequence;

use super::{embedding_row, ModelConfig, ModelError};

/// One residual dense block: three square skip units.
#[derive(Debug, Clone, PartialEq)]
pub struct RdbParams<T: Scalar> {
    /// Three (m×m weight, 1×m bias) units applied in order.
    pub units: Vec<(Matrix<T>, Matrix<T>)>,
}

impl<T: Scalar> RdbParams<T> {
    pub fn init(width: usize, rng: &mut Rng) -> RdbParams<T> {
        RdbParams {
            units: (0..3)
                .map(|_| (glorot_uniform(width, width, rng), Matrix::zeros(1, width)))
                .collect(),
        }
    }

    pub fn zeros(width: usize) -> RdbParams<T> {
        RdbParams {
            units: (0..3)
                .map(|_| (Matrix::zeros(width, width), Matrix::zeros(1, width)))
                .collect(),
        }
    }

    fn zeros_like(&self) -> RdbParams<T> {
        RdbParams {
            units: self
                .units
                .iter()
                .map(|(w, b)| (w.zeros_like(), b.zeros_like()))
                .collect(),
        }
    }
}

/// Per-unit values retained for the backward pass: the unit's input and its
/// ReLU output.
#[derive(Debug, Clone)]
pub struct RdbCache<T: Scalar> {
    inputs: Vec<Matrix<T>>,
    relu_outs: Vec<Matrix<T>>,
}

/// Forward through one block: `u ← ReLU(u·W_i + b_i) + u` for each unit.
pub fn rdb_forward<T: Scalar>(
    x: &Matrix<T>,
    block: &RdbParams<T>,
) -> Result<(Matrix<T>, RdbCache<T>), ModelError> {
    let mut u = x.clone();
    let mut cache = RdbCache {
        inputs: Vec::with_capacity(block.units.len()),
        relu_outs: Vec::with_capacity(block.units.len()),
    };
    for (w, b) in &block.units {
        let f = relu(&u.matmul(w)?.add(b)?);
        cache.inputs.push(u.clone());
        cache.relu_outs.push(f.clone());
        u = f.add(&u)?;
    }
    Ok((u, cache))
}

fn rdb_backward<T: Scalar>(
    block: &RdbParams<T>,
    cache: &RdbCache<T>,
    upstream: &Matrix<T>,
) -> Result<(RdbParams<T>, Matrix<T>), ModelError> {
    let mut grads = block.zeros_like();
    let mut du = upstream.clone();
    for i in (0..block.units.len()).rev() {
        let (w, _) = &block.units[i];
        // The skip adds an identity path, so du flows both through the unit
        // and straight past it.
        let da = relu_backward(&cache.relu_outs[i], &du)?;
        grads.units[i].0 = cache.inputs[i].transpose().matmul(&da)?;
        grads.units[i].1 = da.clone();
        du = da.matmul(&w.transpose())?.add(&du)?;
    }
    Ok((grads, du))
}

/// All learnable tensors of the residual classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ResnetParams<T: Scalar> {
    /// V×d token embedding table.
    pub embedding: Matrix<T>,
    /// d×m input projection.
    pub p_in: Matrix<T>,
    /// 1×m projection bias.
    pub b_in: Matrix<T>,
    pub block1: RdbParams<T>,
    pub block2: RdbParams<T>,
    /// m×K output weights.
    pub w_o: Matrix<T>,
    /// 1×K output bias.
    pub b_o: Matrix<T>,
}

/// Retained forward quantities.
#[derive(Debug, Clone)]
pub struct ResnetForward<T: Scalar> {
    pub pooled: Matrix<T>,
    projected: Matrix<T>,
    cache1: RdbCache<T>,
    cache2: RdbCache<T>,
    block2_out: Matrix<T>,
    pub logits: Matrix<T>,
    pub probs: Matrix<T>,
}

impl<T: Scalar> ResnetParams<T> {
    pub fn zeros(config: &ModelConfig) -> ResnetParams<T> {
        let (v, d, m, k) = (
            config.vocab_size,
            config.embed_dim,
            config.hidden_dim,
            config.num_classes,
        );
        ResnetParams {
            embedding: Matrix::zeros(v, d),
            p_in: Matrix::zeros(d, m),
            b_in: Matrix::zeros(1, m),
            block1: RdbParams::zeros(m),
            block2: RdbParams::zeros(m),
            w_o: Matrix::zeros(m, k),
            b_o: Matrix::zeros(1, k),
        }
    }

    pub fn init(config: &ModelConfig, rng: &mut Rng) -> ResnetParams<T> {
        let (v, d, m, k) = (
            config.vocab_size,
            config.embed_dim,
            config.hidden_dim,
            config.num_classes,
        );
        ResnetParams {
            embedding: glorot_uniform(v, d, rng),
            p_in: glorot_uniform(d, m, rng),
            b_in: Matrix::zeros(1, m),
            block1: RdbParams::init(m, rng),
            block2: RdbParams::init(m, rng),
            w_o: glorot_uniform(m, k, rng),
            b_o: Matrix::zeros(1, k),
        }
    }

    /// Mean-pool embeddings over non-PAD positions, project with ReLU, run
    /// both blocks, and read out class logits.
    pub fn forward(&self, seq: &TokenSequence) -> Result<ResnetForward<T>, ModelError> {
        let steps = seq.active_len();
        if steps == 0 {
            return Err(ModelError::EmptySequence);
        }
        let mut pooled = Matrix::zeros(1, self.embedding.cols());
        for &id in seq.active_ids() {
            pooled.add_assign(&embedding_row(&self.embedding, id)?)?;
        }
        pooled.scale_assign(T::one() / T::from_f64(steps as f64));

        let projected = relu(&pooled.matmul(&self.p_in)?.add(&self.b_in)?);
        let (block1_out, cache1) = rdb_forward(&projected, &self.block1)?;
        let (block2_out, cache2) = rdb_forward(&block1_out, &self.block2)?;
        let logits = block2_out.matmul(&self.w_o)?.add(&self.b_o)?;
        let probs = softmax(&logits)?;
        Ok(ResnetForward {
            pooled,
            projected,
            cache1,
            cache2,
            block2_out,
            logits,
            probs,
        })
    }

    pub fn backward(
        &self,
        seq: &TokenSequence,
        fwd: &ResnetForward<T>,
        target: usize,
    ) -> Result<ResnetParams<T>, ModelError> {
        let steps = seq.active_len();
        let dlogits = softmax_xent_backward(&fwd.probs, target)?;

        let w_o = fwd.block2_out.transpose().matmul(&dlogits)?;
        let b_o = dlogits.clone();
        let du2 = dlogits.matmul(&self.w_o.transpose())?;

        let (block2, du1) = rdb_backward(&self.block2, &fwd.cache2, &du2)?;
        let (block1, dproj) = rdb_backward(&self.block1, &fwd.cache1, &du1)?;

        let da0 = relu_backward(&fwd.projected, &dproj)?;
        let p_in = fwd.pooled.transpose().matmul(&da0)?;
        let b_in = da0.clone();
        let dpooled = da0.matmul(&self.p_in.transpose())?;

        let mut embedding = self.embedding.zeros_like();
        let share = dpooled.scale(T::one() / T::from_f64(steps as f64));
        for &id in seq.active_ids() {
            let row = embedding.row_mut(id as usize);
            for (g, &v) in row.iter_mut().zip(share.data()) {
                *g += v;
            }
        }

        Ok(ResnetParams {
            embedding,
            p_in,
            b_in,
            block1,
            block2,
            w_o,
            b_o,
        })
    }

    pub fn tensors(&self) -> Vec<(&'static str, &Matrix<T>)> {
        let mut out = vec![
            ("embedding", &self.embedding),
            ("p_in", &self.p_in),
            ("b_in", &self.b_in),
        ];
        for (i, (w, b)) in self.block1.units.iter().enumerate() {
            out.push((BLOCK1_NAMES[i].0, w));
            out.push((BLOCK1_NAMES[i].1, b));
        }
        for (i, (w, b)) in self.block2.units.iter().enumerate() {
            out.push((BLOCK2_NAMES[i].0, w));
            out.push((BLOCK2_NAMES[i].1, b));
        }
        out.push(("w_o", &self.w_o));
        out.push(("b_o", &self.b_o));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Matrix<T>)> {
        let mut out: Vec<(&'static str, &mut Matrix<T>)> = vec![
            ("embedding", &mut self.embedding),
            ("p_in", &mut self.p_in),
            ("b_in", &mut self.b_in),
        ];
        for (i, (w, b)) in self.block1.units.iter_mut().enumerate() {
            out.push((BLOCK1_NAMES[i].0, w));
            out.push((BLOCK1_NAMES[i].1, b));
        }
        for (i, (w, b)) in self.block2.units.iter_mut().enumerate() {
            out.push((BLOCK2_NAMES[i].0, w));
            out.push((BLOCK2_NAMES[i].1, b));
        }
        out.push(("w_o", &mut self.w_o));
        out.push(("b_o", &mut self.b_o));
        out
    }
}

const BLOCK1_NAMES: [(&str, &str); 3] = [
    ("block1.w1", "block1.b1"),
    ("block1.w2", "block1.b2"),
    ("block1.w3", "block1.b3"),
];
const BLOCK2_NAMES: [(&str, &str); 3] = [
    ("block2.w1", "block2.b1"),
    ("block2.w2", "block2.b2"),
    ("block2.w3", "block2.b3"),
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Arch, ModelConfig, ModelParams};
    use crate::nncore::{finite_difference_grad, max_relative_error, Rng, DEFAULT_STEP};

    fn seq(ids: &[u32], max_len: usize) -> TokenSequence {
        let true_len = ids.len() as u32;
        let mut padded = ids.to_vec();
        padded.resize(max_len, 0);
        TokenSequence::from_parts(padded, true_len).unwrap()
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            vocab_size: 9,
            embed_dim: 3,
            hidden_dim: 4,
            num_classes: 3,
            max_len: 8,
            architecture: Arch::Resnet,
        }
    }

    #[test]
    fn zero_block_is_identity() {
        let block = RdbParams::<f64>::zeros(4);
        let x = Matrix::row_vector(&[1.0, -2.0, 0.5, 3.0]);
        let (y, _) = rdb_forward(&x, &block).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn single_active_unit_by_hand() {
        // Unit 1: W = [1], b = [0], x = [2] gives ReLU(2) + 2 = 4. Units 2
        // and 3 are zero, so they pass 4 through unchanged.
        let mut block = RdbParams::<f64>::zeros(1);
        block.units[0].0.set(0, 0, 1.0);
        let x = Matrix::row_vector(&[2.0]);
        let (y, _) = rdb_forward(&x, &block).unwrap();
        assert_eq!(y.get(0, 0), 4.0);
    }

    #[test]
    fn block_backward_matches_finite_differences() {
        let mut rng = Rng::new(33);
        let width = 4;
        let block = RdbParams::<f64> {
            units: (0..3)
                .map(|_| {
                    (
                        crate::nncore::glorot_uniform(width, width, &mut rng),
                        crate::nncore::glorot_uniform(1, width, &mut rng),
                    )
                })
                .collect(),
        };
        let x = Matrix::from_fn(1, width, |_, c| 0.3 * (c as f64 + 1.0) - 0.5);
        // Scalar objective: sum of block outputs.
        let (_, cache) = rdb_forward(&x, &block).unwrap();
        let upstream = Matrix::from_vec(1, width, vec![1.0; width]);
        let (_, dx) = rdb_backward(&block, &cache, &upstream).unwrap();
        let numeric = finite_difference_grad(
            |probe: &Matrix<f64>| rdb_forward(probe, &block).unwrap().0.data().iter().sum(),
            &x,
            DEFAULT_STEP,
        )
        .unwrap();
        let err = max_relative_error(&dx, &numeric);
        assert!(err < 1e-4, "input gradient off by {err:.3e}");
    }

    #[test]
    fn single_token_pools_to_its_embedding() {
        let config = small_config();
        let params = match ModelParams::<f64>::init(&config, &mut Rng::new(4)).unwrap() {
            ModelParams::Resnet(p) => p,
            _ => unreachable!(),
        };
        let fwd = params.forward(&seq(&[5], 8)).unwrap();
        assert_eq!(fwd.pooled.data(), params.embedding.row(5));
    }

    #[test]
    fn logits_invariant_under_token_permutation() {
        let config = small_config();
        let params = ModelParams::<f64>::init(&config, &mut Rng::new(12)).unwrap();
        let (a, _) = params.forward(&seq(&[2, 7, 3, 3], 8)).unwrap();
        let (b, _) = params.forward(&seq(&[3, 3, 7, 2], 8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn appending_pad_leaves_logits_bitwise_unchanged() {
        let config = small_config();
        let params = ModelParams::<f64>::init(&config, &mut Rng::new(13)).unwrap();
        let (a, _) = params.forward(&seq(&[4, 6], 2)).unwrap();
        let (b, _) = params.forward(&seq(&[4, 6], 8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let config = small_config();
        let params = ModelParams::<f64>::init(&config, &mut Rng::new(1)).unwrap();
        let empty = TokenSequence::from_parts(vec![0, 0], 0).unwrap();
        assert!(matches!(
            params.forward(&empty),
            Err(ModelError::EmptySequence)
        ));
    }

    #[test]
    fn zero_blocks_reduce_to_linear_readout() {
        // With all block and projection weights zero the readout gradient is
        // the outer product of the (zero) projected input with
        // probs - onehot, so only b_o and w_o carry signal; w_o's gradient
        // is exactly zero because the projected vector is zero.
        let config = small_config();
        let mut params = match ModelParams::<f64>::init(&config, &mut Rng::new(2)).unwrap() {
            ModelParams::Resnet(p) => p,
            _ => unreachable!(),
        };
        params.p_in = params.p_in.zeros_like();
        params.b_in = params.b_in.zeros_like();
        params.block1 = RdbParams::zeros(config.hidden_dim);
        params.block2 = RdbParams::zeros(config.hidden_dim);
        let s = seq(&[2, 3], 8);
        let fwd = params.forward(&s).unwrap();
        let grads = params.backward(&s, &fwd, 1).unwrap();
        let expected_b_o = {
            let mut g = fwd.probs.clone();
            g.set(0, 1, g.get(0, 1) - 1.0);
            g
        };
        assert_eq!(grads.b_o, expected_b_o);
        assert!(grads.w_o.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_blocks_readout_gradient_is_projection_outer_product() {
        // With only the blocks zeroed, they pass the projected vector
        // through untouched, so by the chain rule on the reduced network
        // the readout gradient is projected^T · (probs - onehot).
        let config = small_config();
        let mut params = match ModelParams::<f64>::init(&config, &mut Rng::new(16)).unwrap() {
            ModelParams::Resnet(p) => p,
            _ => unreachable!(),
        };
        params.block1 = RdbParams::zeros(config.hidden_dim);
        params.block2 = RdbParams::zeros(config.hidden_dim);
        let s = seq(&[2, 5, 7], 8);
        let fwd = params.forward(&s).unwrap();
        let target = 2;
        let grads = params.backward(&s, &fwd, target).unwrap();
        let dlogits = {
            let mut g = fwd.probs.clone();
            g.set(0, target, g.get(0, target) - 1.0);
            g
        };
        let projected = relu(
            &fwd.pooled
                .matmul(&params.p_in)
                .unwrap()
                .add(&params.b_in)
                .unwrap(),
        );
        let expected = projected.transpose().matmul(&dlogits).unwrap();
        for (a, b) in grads.w_o.data().iter().zip(expected.data()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        crate::models::tests::check_all_grads(&small_config(), 57, &[0, 1]);
    }

    #[test]
    fn probs_independent_of_input_when_weights_zero() {
        let config = small_config();
        let zero = ResnetParams::<f64> {
            embedding: crate::nncore::glorot_uniform(
                config.vocab_size,
                config.embed_dim,
                &mut Rng::new(6),
            ),
            p_in: Matrix::zeros(config.embed_dim, config.hidden_dim),
            b_in: Matrix::zeros(1, config.hidden_dim),
            block1: RdbParams::zeros(config.hidden_dim),
            block2: RdbParams::zeros(config.hidden_dim),
            w_o: Matrix::zeros(config.hidden_dim, config.num_classes),
            b_o: Matrix::row_vector(&[0.2, -0.4, 0.1]),
        };
        let a = zero.forward(&seq(&[2, 3, 4], 8)).unwrap();
        let b = zero.forward(&seq(&[7, 8], 8)).unwrap();
        assert_eq!(a.logits.data(), &[0.2, -0.4, 0.1]);
        assert_eq!(a.probs, b.probs);
    }
}
