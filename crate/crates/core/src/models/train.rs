use super::{Dropout, TrainedModel};
use crate::error::{bail, Error, Result};
use crate::numerics::{Adam, AdamConfig, Gradients, Tape};
use crate::rng;
use crate::subword::{BOS, EOS};
use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Rescale the batch gradient to this global L2 norm when it is larger.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.0002,
            batch_size: 32,
            epochs: 10,
            seed: 0,
            clip_norm: Some(5.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean cross-entropy per target token (EOS included).
    pub mean_loss: f64,
    pub tokens: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }
}

fn decoder_io(target: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut input = Vec::with_capacity(target.len() + 1);
    input.push(BOS);
    input.extend_from_slice(target);
    let mut output = target.to_vec();
    output.push(EOS);
    (input, output)
}

/// Sanity corpus for the training loop: random token sequences paired with
/// themselves. Tokens are drawn from the non-special ids `3..vocab`, lengths
/// uniformly from `min_len..=max_len`.
pub fn copy_task(
    sentences: usize,
    vocab: usize,
    min_len: usize,
    max_len: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if vocab <= EOS + 1 || min_len == 0 || min_len > max_len {
        bail!(
            Config,
            "copy task needs a vocabulary beyond the special tokens and 1 ≤ min_len ≤ max_len"
        );
    }
    let mut rng = rng::seeded(seed);
    Ok((0..sentences)
        .map(|_| {
            let n = rng.gen_range(min_len..=max_len);
            let s: Vec<usize> = (0..n).map(|_| rng.gen_range(EOS + 1..vocab)).collect();
            (s.clone(), s)
        })
        .collect())
}

/// Mean per-token loss of `model` on `pairs`, evaluation mode.
pub fn eval_loss(model: &TrainedModel, pairs: &[(Vec<usize>, Vec<usize>)]) -> Result<f64> {
    if pairs.is_empty() {
        bail!(Input, "cannot evaluate on an empty corpus");
    }
    let mut total = 0.0;
    let mut tokens = 0;
    for (src, tgt) in pairs {
        if src.is_empty() {
            bail!(Input, "empty source sentence");
        }
        let (input, output) = decoder_io(tgt);
        let mut tape = Tape::with_params(&model.params);
        let enc = model.encoder_vars(&mut tape, src, &mut Dropout::eval());
        let dec = model.decoder_vars(&mut tape, enc.memory, &input, &mut Dropout::eval());
        let loss = tape.cross_entropy(dec.logits, &output);
        total += tape.scalar(loss);
        tokens += output.len();
    }
    Ok(total / tokens as f64)
}

/// Train with Adam on teacher-forced cross-entropy.
///
/// Each sentence pair is a separate tape; gradients are summed over a batch
/// and normalised by the batch's target-token count. Batch order is
/// reshuffled every epoch from `config.seed`.
pub fn train_nmt(
    model: &mut TrainedModel,
    pairs: &[(Vec<usize>, Vec<usize>)],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainReport> {
    if config.batch_size == 0 || !(config.learning_rate > 0.0) {
        bail!(Config, "batch size and learning rate must be positive");
    }
    if pairs.is_empty() {
        bail!(Input, "training corpus is empty");
    }
    if pairs.iter().any(|(s, _)| s.is_empty()) {
        bail!(Input, "training corpus contains an empty source sentence");
    }
    let adam_cfg = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut adam = Adam::new(&model.params, adam_cfg);
    let mut grads = Gradients::zeros_like(&model.params);
    let mut report = TrainReport::default();
    let mut order: Vec<usize> = (0..pairs.len()).collect();

    for epoch in 1..=config.epochs {
        let mut shuffle_rng =
            rng::seeded(rng::derive_seed(config.seed, &format!("shuffle/{epoch}")));
        let mut drop_rng = rng::seeded(rng::derive_seed(config.seed, &format!("dropout/{epoch}")));
        rng::shuffle(&mut shuffle_rng, &mut order);
        let mut epoch_loss = 0.0;
        let mut epoch_tokens = 0;
        for batch in order.chunks(config.batch_size) {
            let batch_tokens: usize = batch.iter().map(|&i| pairs[i].1.len() + 1).sum();
            let seed = 1.0 / batch_tokens as f64;
            for &i in batch {
                let (src, tgt) = &pairs[i];
                let (input, output) = decoder_io(tgt);
                let mut tape = Tape::with_params(&model.params);
                let mut drop = Dropout::train(model.config.dropout, &mut drop_rng);
                let enc = model.encoder_vars(&mut tape, src, &mut drop);
                let dec = model.decoder_vars(&mut tape, enc.memory, &input, &mut drop);
                let loss = tape.cross_entropy(dec.logits, &output);
                let value = tape.scalar(loss);
                if !value.is_finite() {
                    return Err(Error::Training {
                        epoch,
                        message: format!("non-finite loss on sentence {i}"),
                    });
                }
                epoch_loss += value;
                tape.backward(loss, seed, Some(&mut grads));
            }
            epoch_tokens += batch_tokens;
            if !grads.all_finite() {
                return Err(Error::Training {
                    epoch,
                    message: "non-finite gradient".into(),
                });
            }
            if let Some(max) = config.clip_norm {
                let norm = crate::math::sqrt(grads.squared_norm());
                if norm > max {
                    grads.scale(max / norm);
                }
            }
            model.params.absorb(&mut grads)?;
            adam.step(&mut model.params)?;
        }
        let stats = EpochStats {
            epoch,
            mean_loss: epoch_loss / epoch_tokens as f64,
            tokens: epoch_tokens,
        };
        if !stats.mean_loss.is_finite() || !model.params.all_finite() {
            return Err(Error::Training {
                epoch,
                message: "parameters diverged".into(),
            });
        }
        on_epoch(&stats);
        report.epochs.push(stats);
    }
    model.meta.seed = config.seed;
    model.meta.epochs += config.epochs;
    if let Some(last) = report.epochs.last() {
        model.meta.final_loss = Some(last.mean_loss);
    }
    Ok(report)
}
