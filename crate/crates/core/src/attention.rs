//! Encoder self-attention statistics: how much weight a word puts on itself
//! and how spread out its attention is, layer by layer, for ambiguous nouns
//! versus nouns in general.
//!
//! Every statistic is computed on head-averaged, word-merged matrices.
//! Averages are taken per occurrence over the whole group (one sample per
//! noun token), not per sentence.

use crate::corpus::AnnotatedCorpus;
use crate::data::PreparedCorpus;
use crate::error::{bail, Result};
use crate::models::{LayerTrace, TrainedModel};
use crate::numerics::Tensor;
use crate::subword::{merge_attention, Segmentation};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

/// How far a row may drift from summing to one before entropy refuses it.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Element-wise mean of per-head attention matrices.
pub fn average_heads(heads: &[Tensor]) -> Result<Tensor> {
    let Some(first) = heads.first() else {
        bail!(Shape, "no attention heads to average");
    };
    let shape = first.shape().to_vec();
    let mut sum = vec![0.0; first.len()];
    for h in heads {
        if h.shape() != shape.as_slice() {
            bail!(
                Shape,
                "attention head {:?} does not match {:?}",
                h.shape(),
                shape
            );
        }
        sum.iter_mut().zip(h.data()).for_each(|(s, v)| *s += v);
    }
    let k = heads.len() as f64;
    sum.iter_mut().for_each(|s| *s /= k);
    Tensor::new(shape, sum)
}

/// Shannon entropy (nats) of an attention row, with 0·ln 0 = 0.
pub fn attention_entropy(row: &[f64]) -> Result<f64> {
    let total: f64 = row.iter().sum();
    if row.is_empty() || (total - 1.0).abs() > ROW_SUM_TOLERANCE {
        bail!(
            Input,
            "attention row sums to {total}, expected 1 within {ROW_SUM_TOLERANCE}"
        );
    }
    if let Some(v) = row.iter().find(|v| !(**v >= 0.0)) {
        bail!(Input, "attention row holds a negative or NaN weight {v}");
    }
    Ok(raw_entropy(row))
}

// Used directly for un-renormalized rows, which do not sum to one.
fn raw_entropy(row: &[f64]) -> f64 {
    -row.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * crate::math::ln(p))
        .sum::<f64>()
}

/// The weight a word puts on itself: the diagonal entry at `position`.
pub fn self_weight(matrix: &Tensor, position: usize) -> Result<f64> {
    check_position(matrix, position)?;
    Ok(matrix.get2(position, position))
}

/// Whether the diagonal entry is the row maximum (ties count as self).
pub fn attends_most_to_self(matrix: &Tensor, position: usize) -> Result<bool> {
    check_position(matrix, position)?;
    let row = matrix.row(position);
    let own = row[position];
    Ok(row.iter().all(|&v| v <= own))
}

fn check_position(matrix: &Tensor, position: usize) -> Result<()> {
    if matrix.shape().len() != 2 || matrix.rows() != matrix.cols() {
        bail!(
            Shape,
            "self-attention must be square, got {:?}",
            matrix.shape()
        );
    }
    if position >= matrix.rows() {
        bail!(
            Index,
            "position {position} outside a sentence of {} words",
            matrix.rows()
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NounGroup {
    AmbiguousNouns,
    /// Every noun, the ambiguous ones included.
    AllNouns,
}

impl fmt::Display for NounGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NounGroup::AmbiguousNouns => "ambiguous-nouns",
            NounGroup::AllNouns => "all-nouns",
        })
    }
}

/// Word-level encoder self-attention of one sentence and where its nouns are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceAttention {
    /// One head-averaged, word-merged `n × n` matrix per encoder layer.
    pub layers: Vec<Tensor>,
    pub nouns: Vec<usize>,
    /// Nouns inside an ambiguous span; always a subset of `nouns`.
    pub ambiguous_nouns: Vec<usize>,
}

impl SentenceAttention {
    fn positions(&self, group: NounGroup) -> &[usize] {
        match group {
            NounGroup::AmbiguousNouns => &self.ambiguous_nouns,
            NounGroup::AllNouns => &self.nouns,
        }
    }
}

/// Head-average every encoder layer of `trace` and merge it to words.
pub fn word_level_attention(
    trace: &LayerTrace,
    segmentation: &Segmentation,
    renormalize: bool,
) -> Result<Vec<Tensor>> {
    if trace.self_attention.is_empty() {
        bail!(
            Lookup,
            "the {} trace carries no self-attention",
            trace.architecture
        );
    }
    trace
        .self_attention
        .iter()
        .map(|heads| {
            merge_attention(
                &average_heads(heads)?,
                segmentation,
                segmentation,
                renormalize,
            )
        })
        .collect()
}

/// Encode every sentence of `corpus` and collect its word-level attention.
pub fn collect_attention(
    model: &TrainedModel,
    prepared: &PreparedCorpus,
    corpus: &AnnotatedCorpus,
    renormalize: bool,
) -> Result<Vec<SentenceAttention>> {
    if prepared.sentences.len() != corpus.sentences.len() {
        bail!(
            Input,
            "{} encoded sentences for a corpus of {}",
            prepared.sentences.len(),
            corpus.sentences.len()
        );
    }
    corpus
        .sentences
        .iter()
        .zip(&prepared.sentences)
        .map(|(s, enc)| {
            let trace = model.encode(&enc.source_ids)?;
            let layers = word_level_attention(&trace, &enc.source, renormalize)?;
            let nouns: Vec<usize> = s.noun_positions().collect();
            let ambiguous_nouns = nouns
                .iter()
                .copied()
                .filter(|&i| s.ambiguities.iter().any(|a| a.span.contains(i)))
                .collect();
            Ok(SentenceAttention {
                layers,
                nouns,
                ambiguous_nouns,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAttentionStats {
    /// 1-based encoder layer.
    pub layer: usize,
    pub mean_self_weight: f64,
    /// Nats.
    pub mean_entropy: f64,
    pub argmax_self_share: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionStats {
    pub group: NounGroup,
    pub layers: Vec<LayerAttentionStats>,
}

// Sorting before summing makes the means independent of sentence order.
fn order_free_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-layer means over every occurrence of the group. With `renormalized`
/// false the merged rows need not sum to one and entropy is taken as is.
pub fn aggregate_by_group(
    sentences: &[SentenceAttention],
    group: NounGroup,
    renormalized: bool,
) -> Result<AttentionStats> {
    let depth = sentences.first().map_or(0, |s| s.layers.len());
    if let Some(s) = sentences.iter().find(|s| s.layers.len() != depth) {
        bail!(
            Shape,
            "sentences disagree on layer count ({} vs {depth})",
            s.layers.len()
        );
    }
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let (mut weights, mut entropies, mut on_self) = (Vec::new(), Vec::new(), 0usize);
        for s in sentences {
            let m = &s.layers[l];
            for &p in s.positions(group) {
                weights.push(self_weight(m, p)?);
                let row = m.row(p);
                entropies.push(if renormalized {
                    attention_entropy(row)?
                } else {
                    raw_entropy(row)
                });
                on_self += usize::from(attends_most_to_self(m, p)?);
            }
        }
        if weights.is_empty() {
            bail!(Input, "no {group} occurrences to aggregate");
        }
        let samples = weights.len();
        layers.push(LayerAttentionStats {
            layer: l + 1,
            mean_self_weight: order_free_mean(weights),
            mean_entropy: order_free_mean(entropies),
            argmax_self_share: on_self as f64 / samples as f64,
            samples,
        });
    }
    if layers.is_empty() {
        bail!(Input, "no {group} occurrences to aggregate");
    }
    Ok(AttentionStats { group, layers })
}

/// `group,layer,mean_self_weight,mean_entropy,argmax_self_share,n` rows.
pub fn attention_csv(stats: &[AttentionStats]) -> String {
    let mut out = String::from("group,layer,mean_self_weight,mean_entropy,argmax_self_share,n\n");
    for s in stats {
        for l in &s.layers {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{}\n",
                s.group,
                l.layer,
                l.mean_self_weight,
                l.mean_entropy,
                l.argmax_self_share,
                l.samples
            ));
        }
    }
    out
}
