//! On-disk forms of the pipeline's intermediate products.

use crate::fsutil::{atomic_write, read_json, write_json};
use crate::tensor_io::{read_tensors, write_tensors};
use anyhow::{ensure, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;
use wsd_core::corpus::{
    format_annotated, parse_annotated, AnnotatedCorpus, Locator, ProbeInstance,
};
use wsd_core::data::PreparedCorpus;
use wsd_core::models::{restore_model, ModelConfig, TrainedModel, TrainingMeta};
use wsd_core::numerics::Tensor;
use wsd_core::probe::ProbeData;
use wsd_core::subword::{MergeTable, Segmentation, Vocabulary};

pub const PARAMS_FILE: &str = "params.wsdt";
pub const MODEL_FILE: &str = "model.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub config: ModelConfig,
    pub meta: TrainingMeta,
    pub parameter_count: usize,
}

/// Checkpoint = parameter container (in creation order) + config JSON.
pub fn save_model(dir: &Path, model: &TrainedModel) -> Result<()> {
    let tensors: Vec<(String, Tensor)> = model
        .params
        .iter()
        .map(|p| (p.name.clone(), p.value.clone()))
        .collect();
    write_tensors(&dir.join(PARAMS_FILE), &tensors)?;
    write_json(
        &dir.join(MODEL_FILE),
        &ModelFile {
            config: model.config.clone(),
            meta: model.meta.clone(),
            parameter_count: model.parameter_count(),
        },
    )
}

pub fn load_model(dir: &Path) -> Result<TrainedModel> {
    let file: ModelFile = read_json(&dir.join(MODEL_FILE))?;
    let values = read_tensors(&dir.join(PARAMS_FILE))?;
    restore_model(&file.config, file.meta, &values)
        .with_context(|| format!("restoring checkpoint in {}", dir.display()))
}

pub const CORPUS_FILE: &str = "corpus.tsv";
pub const MERGES_FILE: &str = "merges.txt";
pub const SOURCE_VOCAB_FILE: &str = "source_vocab.json";
pub const TARGET_VOCAB_FILE: &str = "target_vocab.json";
pub const SEGMENTATION_FILE: &str = "segmentation.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedSentence {
    pub id: String,
    pub source: Segmentation,
    pub target: Segmentation,
}

pub fn save_corpus(dir: &Path, corpus: &AnnotatedCorpus, prepared: &PreparedCorpus) -> Result<()> {
    atomic_write(&dir.join(CORPUS_FILE), format_annotated(corpus).as_bytes())?;
    atomic_write(&dir.join(MERGES_FILE), prepared.merges.to_text().as_bytes())?;
    write_json(&dir.join(SOURCE_VOCAB_FILE), &prepared.source_vocab)?;
    write_json(&dir.join(TARGET_VOCAB_FILE), &prepared.target_vocab)?;
    let segs: Vec<SegmentedSentence> = corpus
        .sentences
        .iter()
        .zip(&prepared.sentences)
        .map(|(s, e)| SegmentedSentence {
            id: s.id.clone(),
            source: e.source.clone(),
            target: e.target.clone(),
        })
        .collect();
    write_json(&dir.join(SEGMENTATION_FILE), &segs)
}

pub fn read_corpus_tsv(path: &Path) -> Result<AnnotatedCorpus> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_annotated(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_corpus(dir: &Path) -> Result<(AnnotatedCorpus, PreparedCorpus)> {
    let corpus = read_corpus_tsv(&dir.join(CORPUS_FILE))?;
    let merges_text = std::fs::read_to_string(dir.join(MERGES_FILE))?;
    let merges = MergeTable::from_text(&merges_text)?;
    let source: Vocabulary = read_json(&dir.join(SOURCE_VOCAB_FILE))?;
    let target: Vocabulary = read_json(&dir.join(TARGET_VOCAB_FILE))?;
    let prepared = PreparedCorpus::with_vocabularies(merges, source, target, &corpus.sentences);
    Ok((corpus, prepared))
}

pub const CELLS_FILE: &str = "cells.json";
pub const INSTANCES_FILE: &str = "instances.json";
pub const FEATURES_FILE: &str = "features.wsdt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub locator: Locator,
    pub ambi_dim: usize,
    pub sense_dim: usize,
}

/// Short tag naming a probe cell, e.g. `encoder-3-forward`.
pub fn locator_tag(l: &Locator) -> String {
    format!("{}-{}-{}", l.side, l.layer, l.mode)
}

/// Representation store: the instance list once (cells share it up to the
/// locator) and one `instances × (ambi + sense)` feature matrix per cell.
pub fn save_cells(dir: &Path, cells: &[ProbeData]) -> Result<()> {
    ensure!(!cells.is_empty(), "no probe cells to store");
    let entries: Vec<CellEntry> = cells
        .iter()
        .map(|c| CellEntry {
            locator: c.locator,
            ambi_dim: c.ambi_dim,
            sense_dim: c.sense_dim,
        })
        .collect();
    let mut tensors = Vec::with_capacity(cells.len());
    for c in cells {
        ensure!(
            c.instances.len() == cells[0].instances.len(),
            "probe cells disagree on instance count"
        );
        let data: Vec<f64> = c.features.iter().flatten().copied().collect();
        tensors.push((
            locator_tag(&c.locator),
            Tensor::matrix(c.len(), c.input_dim(), data)?,
        ));
    }
    write_json(&dir.join(CELLS_FILE), &entries)?;
    write_json(&dir.join(INSTANCES_FILE), &cells[0].instances)?;
    write_tensors(&dir.join(FEATURES_FILE), &tensors)
}

pub fn load_cells(dir: &Path) -> Result<Vec<ProbeData>> {
    let entries: Vec<CellEntry> = read_json(&dir.join(CELLS_FILE))?;
    let instances: Vec<ProbeInstance> = read_json(&dir.join(INSTANCES_FILE))?;
    let tensors = read_tensors(&dir.join(FEATURES_FILE))?;
    ensure!(
        entries.len() == tensors.len(),
        "{} cells but {} feature matrices",
        entries.len(),
        tensors.len()
    );
    entries
        .into_iter()
        .zip(tensors)
        .map(|(e, (name, t))| {
            ensure!(
                name == locator_tag(&e.locator),
                "feature matrix {name} stored for cell {}",
                locator_tag(&e.locator)
            );
            ensure!(
                t.rows() == instances.len() && t.cols() == e.ambi_dim + e.sense_dim,
                "feature matrix {name} has shape {:?}",
                t.shape()
            );
            Ok(ProbeData {
                locator: e.locator,
                instances: instances
                    .iter()
                    .map(|i| ProbeInstance {
                        locator: e.locator,
                        ..i.clone()
                    })
                    .collect(),
                features: t
                    .data()
                    .chunks(t.cols().max(1))
                    .map(<[f64]>::to_vec)
                    .collect(),
                ambi_dim: e.ambi_dim,
                sense_dim: e.sense_dim,
            })
        })
        .collect()
}
