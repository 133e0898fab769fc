//! Instrumented encoder-decoder translation models.
//!
//! Two architectures share one interface: a pre-norm Transformer and a
//! stacked bidirectional GRU encoder with a GRU decoder and multiplicative
//! (Luong "general") attention. Forward passes record every layer's hidden
//! states and every attention matrix into a [`LayerTrace`].

mod rnn;
mod trace;
mod train;
mod transformer;

pub use trace::{LayerTrace, TraceSide};
pub use train::{copy_task, eval_loss, train_nmt, EpochStats, TrainConfig, TrainReport};

use crate::error::{bail, Result};
use crate::numerics::{grad_check_params_report, GradCheckReport, ParamSet, Tape, Tensor, Var};
use crate::rng::{self, SeededRng};
use crate::subword::{BOS, EOS, UNK};
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Transformer,
    Rnns2s,
}

impl core::fmt::Display for Architecture {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Architecture::Transformer => "transformer",
            Architecture::Rnns2s => "rnns2s",
        })
    }
}

impl core::str::FromStr for Architecture {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transformer" => Ok(Architecture::Transformer),
            "rnns2s" => Ok(Architecture::Rnns2s),
            other => bail!(Config, "unknown architecture {other:?}"),
        }
    }
}

/// Model hyperparameters. For `rnns2s`, `layers` counts unidirectional
/// encoder layers (two per bidirectional level) and the decoder has
/// `layers / 2` recurrent layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub layers: usize,
    pub model_dim: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub source_vocab: usize,
    pub target_vocab: usize,
    pub dropout: f64,
    pub positional_encoding: bool,
}

impl ModelConfig {
    /// Desk-scale defaults: 4 layers, width 64, 4 heads.
    pub fn desk(architecture: Architecture, source_vocab: usize, target_vocab: usize) -> Self {
        ModelConfig {
            architecture,
            layers: 4,
            model_dim: 64,
            heads: 4,
            ff_dim: 128,
            source_vocab,
            target_vocab,
            dropout: 0.0,
            positional_encoding: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.model_dim == 0 {
            bail!(Config, "layers and model_dim must be positive");
        }
        if self.source_vocab < 4 || self.target_vocab < 4 {
            bail!(
                Config,
                "vocabularies must hold the special tokens plus at least one word"
            );
        }
        if !(0.0..1.0).contains(&self.dropout) {
            bail!(Config, "dropout {} outside [0, 1)", self.dropout);
        }
        match self.architecture {
            Architecture::Transformer => {
                if self.heads == 0 || self.model_dim % self.heads != 0 {
                    bail!(
                        Config,
                        "model_dim {} is not divisible by {} heads",
                        self.model_dim,
                        self.heads
                    );
                }
                if self.ff_dim == 0 {
                    bail!(Config, "ff_dim must be positive");
                }
            }
            Architecture::Rnns2s => {
                if self.layers % 2 != 0 {
                    bail!(
                        Config,
                        "rnns2s counts unidirectional layers; {} is not a whole number of bidirectional levels",
                        self.layers
                    );
                }
            }
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads.max(1)
    }

    /// Index of the decoder hidden state used for probing (the last one).
    pub fn decoder_probe_layer(&self) -> usize {
        match self.architecture {
            Architecture::Transformer => self.layers,
            Architecture::Rnns2s => self.layers / 2 + 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub(crate) enum Layout {
    Transformer(transformer::Layout),
    Rnn(rnn::Layout),
}

/// A model: configuration, parameters and training metadata.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub params: ParamSet,
    pub meta: TrainingMeta,
    layout: Layout,
}

pub(crate) fn xavier(rng: &mut SeededRng, rows: usize, cols: usize) -> Tensor {
    let bound = crate::math::sqrt(6.0 / (rows + cols) as f64);
    let data = (0..rows * cols)
        .map(|_| rng::uniform(rng, -bound, bound))
        .collect();
    Tensor::from_parts(alloc::vec![rows, cols], data)
}

pub(crate) fn embedding_init(rng: &mut SeededRng, rows: usize, cols: usize) -> Tensor {
    // Unit variance after the √d scaling applied by the Transformer.
    let bound = crate::math::sqrt(3.0 / cols as f64);
    let data = (0..rows * cols)
        .map(|_| rng::uniform(rng, -bound, bound))
        .collect();
    Tensor::from_parts(alloc::vec![rows, cols], data)
}

/// Deterministically initialise a model from `seed`.
pub fn build_model(config: &ModelConfig, seed: u64) -> Result<TrainedModel> {
    config.validate()?;
    let mut rng = rng::seeded(seed);
    let mut params = ParamSet::new();
    let layout = match config.architecture {
        Architecture::Transformer => {
            Layout::Transformer(transformer::Layout::build(config, &mut params, &mut rng))
        }
        Architecture::Rnns2s => Layout::Rnn(rnn::Layout::build(config, &mut params, &mut rng)),
    };
    Ok(TrainedModel {
        config: config.clone(),
        params,
        meta: TrainingMeta {
            seed,
            epochs: 0,
            final_loss: None,
        },
        layout,
    })
}

/// Dropout state for one forward pass; inert in evaluation mode.
pub(crate) struct Dropout<'r> {
    rate: f64,
    rng: Option<&'r mut SeededRng>,
}

impl<'r> Dropout<'r> {
    pub(crate) fn eval() -> Self {
        Dropout {
            rate: 0.0,
            rng: None,
        }
    }

    pub(crate) fn train(rate: f64, rng: &'r mut SeededRng) -> Self {
        Dropout {
            rate,
            rng: Some(rng),
        }
    }

    pub(crate) fn apply(&mut self, tape: &mut Tape<'_>, x: Var) -> Var {
        match &mut self.rng {
            Some(rng) if self.rate > 0.0 => {
                let keep = 1.0 - self.rate;
                let n = tape.value(x).len();
                let mask = (0..n)
                    .map(|_| {
                        if rng.gen::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    })
                    .collect();
                tape.dropout(x, mask)
            }
            _ => x,
        }
    }
}

/// Vars of one encoder pass.
pub(crate) struct EncoderVars {
    /// Layer 0 = token embeddings, then one entry per (unidirectional) layer.
    pub states: Vec<Var>,
    /// `[layer][head]` self-attention probabilities (empty for rnns2s).
    pub attention: Vec<Vec<Var>>,
    /// What the decoder attends to.
    pub memory: Var,
}

/// Vars of one decoder pass.
pub(crate) struct DecoderVars {
    pub states: Vec<Var>,
    pub self_attention: Vec<Vec<Var>>,
    pub cross_attention: Vec<Vec<Var>>,
    pub logits: Var,
}

impl TrainedModel {
    pub fn parameter_count(&self) -> usize {
        self.params.scalar_count()
    }

    fn clamp_ids(ids: &[usize], vocab: usize) -> Vec<usize> {
        ids.iter()
            .map(|&i| if i < vocab { i } else { UNK })
            .collect()
    }

    pub(crate) fn encoder_vars(
        &self,
        tape: &mut Tape<'_>,
        src: &[usize],
        drop: &mut Dropout<'_>,
    ) -> EncoderVars {
        let src = Self::clamp_ids(src, self.config.source_vocab);
        match &self.layout {
            Layout::Transformer(l) => l.encode(&self.config, tape, &src, drop),
            Layout::Rnn(l) => l.encode(&self.config, tape, &src, drop),
        }
    }

    pub(crate) fn decoder_vars(
        &self,
        tape: &mut Tape<'_>,
        memory: Var,
        input: &[usize],
        drop: &mut Dropout<'_>,
    ) -> DecoderVars {
        let input = Self::clamp_ids(input, self.config.target_vocab);
        match &self.layout {
            Layout::Transformer(l) => l.decode(&self.config, tape, memory, &input, drop),
            Layout::Rnn(l) => l.decode(&self.config, tape, memory, &input, drop),
        }
    }

    /// Memory the decoder attends to, recomputed from an encoder trace.
    fn memory_from_trace(&self, tape: &mut Tape<'_>, trace: &LayerTrace) -> Result<Var> {
        if trace.side != TraceSide::Encoder || trace.hidden.len() != self.config.layers + 1 {
            bail!(Lookup, "trace is not an encoder trace of this model");
        }
        Ok(match &self.layout {
            Layout::Transformer(l) => {
                let top = tape.input(&trace.hidden[self.config.layers]);
                l.encoder_memory(tape, top)
            }
            Layout::Rnn(_) => {
                let f = tape.input(&trace.hidden[self.config.layers - 1]);
                let b = tape.input(&trace.hidden[self.config.layers]);
                tape.concat_cols(&[f, b])
            }
        })
    }

    /// Target-side embedding table (`target_vocab × model_dim`).
    pub fn target_embeddings(&self) -> &Tensor {
        let id = self
            .params
            .find("tgt.embed")
            .expect("every layout has target embeddings");
        self.params.value(id)
    }

    /// Total teacher-forced cross-entropy of one pair (targets are
    /// `target + EOS`), recorded on `tape` in evaluation mode.
    pub fn sentence_loss(&self, tape: &mut Tape<'_>, source: &[usize], target: &[usize]) -> Var {
        let mut input = Vec::with_capacity(target.len() + 1);
        input.push(BOS);
        input.extend_from_slice(target);
        let mut output = Self::clamp_ids(target, self.config.target_vocab);
        output.push(EOS);
        let enc = self.encoder_vars(tape, source, &mut Dropout::eval());
        let dec = self.decoder_vars(tape, enc.memory, &input, &mut Dropout::eval());
        tape.cross_entropy(dec.logits, &output)
    }

    /// Gradient check of [`Self::sentence_loss`] over every parameter.
    pub fn grad_check_loss(
        &mut self,
        source: &[usize],
        target: &[usize],
        perturbation: f64,
    ) -> Result<GradCheckReport> {
        let mut params = core::mem::take(&mut self.params);
        let result = grad_check_params_report(
            &mut params,
            |tape| self.sentence_loss(tape, source, target),
            perturbation,
            1e-6,
        );
        self.params = params;
        result
    }

    /// Run the encoder on source subword ids (out-of-range ids become `<unk>`).
    pub fn encode(&self, source: &[usize]) -> Result<LayerTrace> {
        if source.is_empty() {
            bail!(Input, "cannot encode an empty sentence");
        }
        let mut tape = Tape::with_params(&self.params);
        let enc = self.encoder_vars(&mut tape, source, &mut Dropout::eval());
        Ok(LayerTrace::capture(
            &tape,
            self.config.architecture,
            TraceSide::Encoder,
            &enc.states,
            &enc.attention,
            &[],
        ))
    }

    /// Teacher-forced decoder pass over `BOS + prefix`. Returns the logits of
    /// every position (`prefix.len() + 1` rows; the last row scores the next
    /// token) and the decoder trace over the same positions.
    pub fn decode_teacher_forced(
        &self,
        encoder: &LayerTrace,
        prefix: &[usize],
    ) -> Result<(Tensor, LayerTrace)> {
        let mut tape = Tape::with_params(&self.params);
        let memory = self.memory_from_trace(&mut tape, encoder)?;
        let mut input = Vec::with_capacity(prefix.len() + 1);
        input.push(BOS);
        input.extend_from_slice(prefix);
        let dec = self.decoder_vars(&mut tape, memory, &input, &mut Dropout::eval());
        let trace = LayerTrace::capture(
            &tape,
            self.config.architecture,
            TraceSide::Decoder,
            &dec.states,
            &dec.self_attention,
            &dec.cross_attention,
        );
        Ok((tape.tensor(dec.logits), trace))
    }
}

/// Rebuild a model from a configuration and stored parameter values.
pub fn restore_model(
    config: &ModelConfig,
    meta: TrainingMeta,
    values: &[(alloc::string::String, Tensor)],
) -> Result<TrainedModel> {
    let mut model = build_model(config, 0)?;
    model.params.load_values(values)?;
    model.meta = meta;
    if !model.params.all_finite() {
        bail!(Input, "restored parameters contain non-finite values");
    }
    Ok(model)
}

/// Sinusoidal position encodings, `n × d`.
pub(crate) fn positional_encoding(n: usize, d: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; n * d];
    for pos in 0..n {
        for i in 0..d {
            let rate = crate::math::powf(10_000.0, (2 * (i / 2)) as f64 / d as f64);
            let angle = pos as f64 / rate;
            out[pos * d + i] = if i % 2 == 0 {
                crate::math::sin(angle)
            } else {
                crate::math::cos(angle)
            };
        }
    }
    out
}
