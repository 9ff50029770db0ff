//! Full finite-difference verification of both architectures' backward
//! passes, runnable from the CLI and from the test suite. Always 64-bit.

use crate::models::{Arch, ModelConfig, ModelParams};
use crate::nncore::{
    cross_entropy, finite_difference_grad, max_relative_error, Matrix, Rng, DEFAULT_STEP,
};
use crate::textproc::TokenSequence;

/// Dimensions and sweep width of a gradient-check run.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub steps: usize,
    pub seeds: u64,
    pub tolerance: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            vocab_size: 12,
            embed_dim: 3,
            hidden_dim: 4,
            num_classes: 3,
            steps: 5,
            seeds: 20,
            tolerance: 1e-4,
        }
    }
}

/// Worst relative error observed for one tensor of one architecture across
/// all seeds.
#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub arch: Arch,
    pub tensor: &'static str,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Outcome of a full run.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checks: Vec<TensorCheck>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Check every parameter gradient of both architectures against central
/// finite differences, across `config.seeds` random configurations each.
pub fn run_suite(config: &GradCheckConfig) -> GradCheckReport {
    let mut checks = Vec::new();
    for arch in [Arch::Srnn, Arch::Resnet] {
        checks.extend(check_arch(arch, config));
    }
    GradCheckReport {
        checks,
        tolerance: config.tolerance,
    }
}

fn check_arch(arch: Arch, config: &GradCheckConfig) -> Vec<TensorCheck> {
    let model_config = ModelConfig {
        vocab_size: config.vocab_size,
        embed_dim: config.embed_dim,
        hidden_dim: config.hidden_dim,
        num_classes: config.num_classes,
        // Leave padding room so the non-PAD prefix logic is exercised too.
        max_len: config.steps + 3,
        architecture: arch,
    };

    let mut worst: Vec<(&'static str, f64)> = Vec::new();
    for seed in 0..config.seeds {
        let mut rng = Rng::new(seed.wrapping_mul(0x9e37_79b9).wrapping_add(seed) ^ 0xabcd);
        let mut params = ModelParams::<f64>::init(&model_config, &mut rng).expect("valid config");
        // Zero-initialized biases can leave ReLU pre-activations exactly at
        // the kink, where central differences and the subgradient convention
        // legitimately disagree. Gradients are checked at a generic point,
        // so jitter every tensor (biases included) away from zero.
        for (_, tensor) in params.tensors_mut() {
            for v in tensor.data_mut() {
                *v += rng.next_range(-0.05, 0.05);
            }
        }
        let ids: Vec<u32> = (0..config.steps)
            .map(|_| 2 + rng.next_below((config.vocab_size - 2) as u64) as u32)
            .collect();
        let mut padded = ids.clone();
        padded.resize(model_config.max_len, 0);
        let seq = TokenSequence::from_parts(padded, config.steps as u32).expect("valid sequence");
        let target = rng.next_below(config.num_classes as u64) as usize;

        let (_, grads) = params
            .loss_and_grads(&seq, target)
            .expect("forward/backward");
        let names: Vec<&'static str> = params.tensors().iter().map(|(n, _)| *n).collect();
        if worst.is_empty() {
            worst = names.iter().map(|&n| (n, 0.0)).collect();
        }

        for (idx, _) in names.iter().enumerate() {
            let at: Matrix<f64> = params.tensors()[idx].1.clone();
            let numeric = finite_difference_grad(
                |m: &Matrix<f64>| {
                    let mut probe = params.clone();
                    *probe.tensors_mut()[idx].1 = m.clone();
                    let (_, probs) = probe.forward(&seq).expect("probe forward");
                    cross_entropy(&probs, target).expect("probe loss")
                },
                &at,
                DEFAULT_STEP,
            )
            .expect("finite differences");
            let err = max_relative_error(grads.tensors()[idx].1, &numeric);
            if err > worst[idx].1 {
                worst[idx].1 = err;
            }
        }
    }

    worst
        .into_iter()
        .map(|(tensor, max_rel_error)| TensorCheck {
            arch,
            tensor,
            max_rel_error,
            passed: max_rel_error < config.tolerance,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let config = GradCheckConfig {
            seeds: 3,
            ..GradCheckConfig::default()
        };
        let report = run_suite(&config);
        assert!(
            report.passed(),
            "failing checks: {:?}",
            report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .collect::<Vec<_>>()
        );
        // Six sRNN tensors plus seventeen ResNet tensors.
        assert_eq!(report.checks.len(), 6 + 17);
    }
}
