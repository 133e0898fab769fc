//! Reading probe inputs out of traces: R_ambi from hidden states, R_sense
//! from target embeddings.

use crate::corpus::{
    make_probe_instances, AmbiguityRecord, Locator, ParallelSentence, ProbeInstance, RnnMode, Side,
};
use crate::data::PreparedCorpus;
use crate::decode::forced_decode;
use crate::error::{bail, Result};
use crate::models::{Architecture, LayerTrace, TraceSide, TrainedModel};
use crate::subword::UNK;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

fn sum_rows(trace: &LayerTrace, layer: usize, span: &Range<usize>) -> Result<Vec<f64>> {
    let h = &trace.hidden[layer];
    if span.is_empty() || span.end > h.rows() {
        bail!(
            Index,
            "span {span:?} outside a trace of {} positions",
            h.rows()
        );
    }
    let mut out = vec![0.0; h.cols()];
    for r in span.clone() {
        for (o, v) in out.iter_mut().zip(h.row(r)) {
            *o += v;
        }
    }
    Ok(out)
}

/// R_ambi: the hidden states over subword positions `span`, summed.
///
/// * `Side::Embedding` reads layer 0 of an encoder trace.
/// * `Side::Encoder` with `RnnMode::Plain` reads layer `locator.layer`; the
///   recurrent encoder also accepts `Forward` (odd layer), `Backward` (even
///   layer) and `Concat`, which joins the forward and backward states of
///   the bidirectional level containing the layer.
/// * `Side::Decoder` reads layer `locator.layer` of a decoder trace.
pub fn extract_representation(
    trace: &LayerTrace,
    span: Range<usize>,
    locator: Locator,
) -> Result<Vec<f64>> {
    let want_side = match locator.side {
        Side::Embedding | Side::Encoder => TraceSide::Encoder,
        Side::Decoder => TraceSide::Decoder,
    };
    if trace.side != want_side {
        bail!(
            Lookup,
            "{} representations need a {:?} trace",
            locator.side,
            want_side
        );
    }
    if locator.side == Side::Embedding {
        if locator.layer != 0 {
            bail!(Lookup, "embedding representations live at layer 0");
        }
        return sum_rows(trace, 0, &span);
    }
    let layers = trace.layers();
    if locator.layer > layers {
        bail!(
            Lookup,
            "layer {} requested from a trace with {layers} layers",
            locator.layer
        );
    }
    let recurrent_encoder =
        trace.architecture == Architecture::Rnns2s && trace.side == TraceSide::Encoder;
    match locator.mode {
        RnnMode::Plain => sum_rows(trace, locator.layer, &span),
        _ if !recurrent_encoder => {
            bail!(
                Lookup,
                "{} read-out needs a recurrent encoder trace",
                locator.mode
            )
        }
        _ if locator.layer == 0 => bail!(Lookup, "layer 0 has no direction"),
        RnnMode::Forward | RnnMode::Backward => {
            let forward = locator.layer % 2 == 1;
            if forward != (locator.mode == RnnMode::Forward) {
                bail!(
                    Lookup,
                    "layer {} is not a {} layer",
                    locator.layer,
                    locator.mode
                );
            }
            sum_rows(trace, locator.layer, &span)
        }
        RnnMode::Concat => {
            let level = locator.layer.div_ceil(2);
            let mut out = sum_rows(trace, 2 * level - 1, &span)?;
            out.extend(sum_rows(trace, 2 * level, &span)?);
            Ok(out)
        }
    }
}

/// R_sense: the sum of the model's target embeddings of `candidate`
/// (subword ids; ids outside the vocabulary read the `<unk>` row).
pub fn sense_embedding(candidate: &[usize], model: &TrainedModel) -> Result<Vec<f64>> {
    if candidate.is_empty() {
        bail!(Input, "empty candidate translation");
    }
    let table = model.target_embeddings();
    let mut out = vec![0.0; table.cols()];
    for &id in candidate {
        let id = if id < table.rows() { id } else { UNK };
        for (o, v) in out.iter_mut().zip(table.row(id)) {
            *o += v;
        }
    }
    Ok(out)
}

/// Probe inputs for one locator: one `R_ambi ⊕ R_sense` row per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeData {
    pub locator: Locator,
    pub instances: Vec<ProbeInstance>,
    pub features: Vec<Vec<f64>>,
    pub ambi_dim: usize,
    pub sense_dim: usize,
}

impl ProbeData {
    pub fn input_dim(&self) -> usize {
        self.ambi_dim + self.sense_dim
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = bool> + '_ {
        self.instances.iter().map(|i| i.label)
    }

    /// The rows with the given instance ids (positions in `instances`).
    pub fn subset(&self, ids: &[usize]) -> ProbeData {
        ProbeData {
            locator: self.locator,
            instances: ids.iter().map(|&i| self.instances[i].clone()).collect(),
            features: ids.iter().map(|&i| self.features[i].clone()).collect(),
            ambi_dim: self.ambi_dim,
            sense_dim: self.sense_dim,
        }
    }
}

/// Counts of things that had to be patched up while materialising.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MaterializeStats {
    pub unknown_candidate_subwords: usize,
    pub occurrences: usize,
}

/// Run the model over every sentence that carries an ambiguity record and
/// build one [`ProbeData`] per locator.
///
/// Encoder-side rows sum the subwords of the ambiguous word. Decoder-side
/// rows come from a forced pass over the reference and sum the states at
/// the subword positions of the word(s) aligned to the ambiguous word;
/// every candidate of an occurrence (right or wrong) is paired with those
/// same states.
pub fn materialize(
    model: &TrainedModel,
    prepared: &PreparedCorpus,
    sentences: &[ParallelSentence],
    records: &[AmbiguityRecord],
    locators: &[Locator],
) -> Result<(Vec<ProbeData>, MaterializeStats)> {
    let mut stats = MaterializeStats::default();
    let need_decoder = locators.iter().any(|l| l.side == Side::Decoder);
    let mut out: Vec<ProbeData> = locators
        .iter()
        .map(|&l| ProbeData {
            locator: l,
            instances: make_probe_instances(records, l),
            features: Vec::new(),
            ambi_dim: 0,
            sense_dim: model.config.model_dim,
        })
        .collect();

    let mut cached: Option<(usize, LayerTrace, Option<LayerTrace>)> = None;
    for record in records {
        let si = record.sentence_index;
        let (Some(enc_sentence), Some(sentence)) = (prepared.sentences.get(si), sentences.get(si))
        else {
            bail!(
                Lookup,
                "record {} points at missing sentence {si}",
                record.sentence_id
            );
        };
        if cached.as_ref().is_none_or(|c| c.0 != si) {
            let encoder = model.encode(&enc_sentence.source_ids)?;
            let decoder = if need_decoder {
                Some(
                    forced_decode(model, &enc_sentence.source_ids, &enc_sentence.target_ids)?.trace,
                )
            } else {
                None
            };
            cached = Some((si, encoder, decoder));
        }
        let (_, encoder, decoder) = cached.as_ref().expect("filled above");
        let src_span = enc_sentence.source_subwords(record.span);
        let Some(tgt_words) = sentence.target_span(record.span) else {
            bail!(
                Lookup,
                "ambiguous span of {} has no aligned target words",
                record.sentence_id
            );
        };
        let tgt_span = enc_sentence.target_subwords(tgt_words);
        let senses: Vec<Vec<f64>> = record
            .candidates
            .iter()
            .map(|c| {
                let (ids, unknown) = prepared.encode_target_words(&c.tokens);
                stats.unknown_candidate_subwords += unknown;
                sense_embedding(&ids, model)
            })
            .collect::<Result<_>>()?;
        for data in out.iter_mut() {
            let ambi = match data.locator.side {
                Side::Decoder => {
                    let trace = decoder.as_ref().expect("decoder traces requested");
                    extract_representation(trace, tgt_span.clone(), data.locator)?
                }
                _ => extract_representation(encoder, src_span.clone(), data.locator)?,
            };
            data.ambi_dim = ambi.len();
            for sense in &senses {
                let mut row = ambi.clone();
                row.extend_from_slice(sense);
                data.features.push(row);
            }
        }
        stats.occurrences += 1;
    }
    Ok((out, stats))
}
