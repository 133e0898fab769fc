//! Greedy and reference-forced decoding, and corpus-level BLEU.

use crate::error::{bail, Result};
use crate::math;
use crate::models::{LayerTrace, TrainedModel};
use crate::numerics::Tensor;
use crate::subword::{EOS, UNK};
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    Greedy,
    Forced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub mode: DecodeMode,
    /// Output subword ids, EOS excluded.
    pub tokens: Vec<usize>,
    /// Decoder trace; row `t` of every hidden state is the state that
    /// predicts `tokens[t]` (a greedy run that stops immediately keeps the
    /// single BOS row).
    pub trace: LayerTrace,
    /// Last decoder layer's cross-attention, averaged over heads: one row
    /// per step, one column per source subword.
    pub cross_attention: Tensor,
    /// Reference ids outside the target vocabulary (forced mode).
    pub unknown_tokens: usize,
}

fn head_mean(heads: &[Tensor]) -> Tensor {
    let mut acc = heads[0].clone();
    for h in &heads[1..] {
        for (a, b) in acc.data_mut().iter_mut().zip(h.data()) {
            *a += b;
        }
    }
    let k = heads.len() as f64;
    acc.data_mut().iter_mut().for_each(|a| *a /= k);
    acc
}

fn last_cross(trace: &LayerTrace) -> Tensor {
    head_mean(
        trace
            .cross_attention
            .last()
            .expect("decoder trace carries cross-attention"),
    )
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Pick the arg-max token step by step until EOS or `max_len` tokens.
pub fn greedy_decode(
    model: &TrainedModel,
    source: &[usize],
    max_len: usize,
) -> Result<DecodeResult> {
    if max_len == 0 {
        bail!(Config, "max_len must be at least 1");
    }
    let encoder = model.encode(source)?;
    let mut tokens = Vec::new();
    let mut last = None;
    while tokens.len() < max_len {
        let (logits, trace) = model.decode_teacher_forced(&encoder, &tokens)?;
        let next = argmax(logits.row(logits.rows() - 1));
        last = Some(trace);
        if next == EOS {
            break;
        }
        tokens.push(next);
    }
    // The trace of the final call covers one position more than the output
    // when the loop ran out of length; recompute it over the output only.
    let trace = match last {
        Some(t) if t.len() == tokens.len().max(1) => t,
        _ => {
            model
                .decode_teacher_forced(&encoder, &tokens[..tokens.len().saturating_sub(1)])?
                .1
        }
    };
    let cross_attention = last_cross(&trace);
    Ok(DecodeResult {
        mode: DecodeMode::Greedy,
        tokens,
        trace,
        cross_attention,
        unknown_tokens: 0,
    })
}

/// Teacher-forced pass over the whole reference: one decoder state per
/// reference position, the output being the reference itself.
pub fn forced_decode(
    model: &TrainedModel,
    source: &[usize],
    reference: &[usize],
) -> Result<DecodeResult> {
    if reference.is_empty() {
        bail!(Input, "forced decoding needs a non-empty reference");
    }
    let vocab = model.config.target_vocab;
    let mut unknown_tokens = 0;
    let tokens: Vec<usize> = reference
        .iter()
        .map(|&t| {
            if t < vocab {
                t
            } else {
                unknown_tokens += 1;
                UNK
            }
        })
        .collect();
    if unknown_tokens > 0 {
        log::warn!(
            "{unknown_tokens} reference tokens outside the target vocabulary were mapped to <unk>"
        );
    }
    let encoder = model.encode(source)?;
    let (_, trace) = model.decode_teacher_forced(&encoder, &tokens[..tokens.len() - 1])?;
    let cross_attention = last_cross(&trace);
    Ok(DecodeResult {
        mode: DecodeMode::Forced,
        tokens,
        trace,
        cross_attention,
        unknown_tokens,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    /// In `[0, 100]`.
    pub score: f64,
    /// Modified n-gram precision per order; `None` when the hypotheses
    /// contain no n-grams of that order.
    pub ngram_precisions: Vec<Option<f64>>,
    pub brevity_penalty: f64,
    pub hypothesis_length: usize,
    pub reference_length: usize,
}

fn ngram_counts<T: Ord>(tokens: &[T], n: usize) -> BTreeMap<&[T], usize> {
    let mut counts = BTreeMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU with a single reference per sentence and no smoothing.
///
/// Orders for which the hypothesis side has no n-grams at all (every
/// hypothesis shorter than `n`) carry no evidence and are left out of the
/// geometric mean; any order with n-grams but no clipped match makes the
/// score 0.
pub fn corpus_bleu<T: Ord>(
    hypotheses: &[Vec<T>],
    references: &[Vec<T>],
    max_ngram: usize,
) -> Result<BleuReport> {
    if hypotheses.is_empty() {
        bail!(Input, "BLEU needs at least one sentence pair");
    }
    if hypotheses.len() != references.len() {
        bail!(
            Input,
            "{} hypotheses but {} references",
            hypotheses.len(),
            references.len()
        );
    }
    if max_ngram == 0 {
        bail!(Config, "max_ngram must be at least 1");
    }
    let mut matches = alloc::vec![0usize; max_ngram];
    let mut totals = alloc::vec![0usize; max_ngram];
    let (mut c, mut r) = (0usize, 0usize);
    for (h, rf) in hypotheses.iter().zip(references) {
        c += h.len();
        r += rf.len();
        for n in 1..=max_ngram {
            let hc = ngram_counts(h, n);
            let rc = ngram_counts(rf, n);
            for (g, k) in hc {
                totals[n - 1] += k;
                matches[n - 1] += k.min(rc.get(g).copied().unwrap_or(0));
            }
        }
    }
    let ngram_precisions: Vec<Option<f64>> = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| (t > 0).then(|| m as f64 / t as f64))
        .collect();
    let brevity_penalty = if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        math::exp(1.0 - r as f64 / c as f64)
    };
    let defined: Vec<f64> = ngram_precisions.iter().flatten().copied().collect();
    let score = if defined.is_empty() || defined.contains(&0.0) {
        0.0
    } else {
        let log_mean = defined.iter().map(|&p| math::ln(p)).sum::<f64>() / defined.len() as f64;
        100.0 * brevity_penalty * math::exp(log_mean)
    };
    Ok(BleuReport {
        score,
        ngram_precisions,
        brevity_penalty,
        hypothesis_length: c,
        reference_length: r,
    })
}
