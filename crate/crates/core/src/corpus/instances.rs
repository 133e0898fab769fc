use super::types::{AmbiguityRecord, Span};
use crate::error::{bail, Result};
use crate::rng;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

/// Which part of a model a representation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Source word embeddings (layer 0), the context-free baseline.
    Embedding,
    Encoder,
    Decoder,
}

/// How recurrent encoder states are read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RnnMode {
    /// The hidden-state matrix at the given layer index as is.
    Plain,
    /// Layer must be a forward (odd) recurrent layer.
    Forward,
    /// Layer must be a backward (even) recurrent layer.
    Backward,
    /// Forward ⊕ backward of the bidirectional level containing the layer.
    Concat,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Embedding => "embedding",
            Side::Encoder => "encoder",
            Side::Decoder => "decoder",
        })
    }
}

impl fmt::Display for RnnMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RnnMode::Plain => "plain",
            RnnMode::Forward => "forward",
            RnnMode::Backward => "backward",
            RnnMode::Concat => "concat",
        })
    }
}

/// Where the ambiguous-word representation of an instance is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Locator {
    pub side: Side,
    pub layer: usize,
    pub mode: RnnMode,
}

impl Locator {
    pub fn embedding() -> Self {
        Locator {
            side: Side::Embedding,
            layer: 0,
            mode: RnnMode::Plain,
        }
    }

    pub fn encoder(layer: usize, mode: RnnMode) -> Self {
        Locator {
            side: Side::Encoder,
            layer,
            mode,
        }
    }

    pub fn decoder(layer: usize) -> Self {
        Locator {
            side: Side::Decoder,
            layer,
            mode: RnnMode::Plain,
        }
    }
}

/// One classifier example: an occurrence paired with one candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeInstance {
    pub id: usize,
    pub sentence_id: String,
    pub sentence_index: usize,
    /// Index of the occurrence in the record list.
    pub occurrence: usize,
    pub span: Span,
    pub candidate: Vec<String>,
    pub candidate_index: usize,
    pub label: bool,
    pub locator: Locator,
}

/// One instance per (occurrence, candidate); exactly one positive per occurrence.
pub fn make_probe_instances(records: &[AmbiguityRecord], locator: Locator) -> Vec<ProbeInstance> {
    let mut out = Vec::new();
    for (occurrence, r) in records.iter().enumerate() {
        for (k, c) in r.candidates.iter().enumerate() {
            out.push(ProbeInstance {
                id: out.len(),
                sentence_id: r.sentence_id.clone(),
                sentence_index: r.sentence_index,
                occurrence,
                span: r.span,
                candidate: c.tokens.clone(),
                candidate_index: k,
                label: c.correct,
                locator,
            });
        }
    }
    out
}

/// Instance ids of the three partitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Random partition that keeps all instances of a sentence together. Whole
/// sentences are drawn into the test set until it holds at least `test_size`
/// instances, then into the development set, and the rest train.
pub fn split_dataset(
    instances: &[ProbeInstance],
    seed: u64,
    test_size: usize,
    dev_size: usize,
) -> Result<DatasetSplit> {
    if test_size + dev_size >= instances.len() {
        bail!(
            Config,
            "test ({test_size}) + dev ({dev_size}) must be smaller than the {} instances",
            instances.len()
        );
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for inst in instances {
        groups.entry(inst.sentence_index).or_default().push(inst.id);
    }
    let mut order: Vec<Vec<usize>> = groups.into_values().collect();
    let mut r = rng::seeded(seed);
    rng::shuffle(&mut r, &mut order);
    let mut split = DatasetSplit {
        train: Vec::new(),
        dev: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for group in order {
        if split.test.len() < test_size {
            split.test.extend(group);
        } else if split.dev.len() < dev_size {
            split.dev.extend(group);
        } else {
            split.train.extend(group);
        }
    }
    if split.train.is_empty() {
        bail!(Config, "sentence grouping left no training instances");
    }
    for part in [&mut split.train, &mut split.dev, &mut split.test] {
        part.sort_unstable();
    }
    Ok(split)
}

/// Best label accuracy for a classifier that only sees (lemma, candidate) on
/// a two-sense word whose majority sense has frequency `p`: max(p, 1 − p).
/// Predicting "majority candidate is correct" gets both instances of an
/// occurrence right when the occurrence is majority-sense and both wrong
/// otherwise.
pub fn mfs_ceiling(p: f64) -> f64 {
    p.max(1.0 - p)
}

/// Exact accuracy of the best (lemma, candidate)-only classifier on `instances`:
/// every (lemma, candidate) cell predicts its majority label.
pub fn empirical_mfs_accuracy(records: &[AmbiguityRecord], instances: &[ProbeInstance]) -> f64 {
    if instances.is_empty() {
        return 0.0;
    }
    let mut cells: BTreeMap<(&str, &[String]), (usize, usize)> = BTreeMap::new();
    for inst in instances {
        let lemma = records[inst.occurrence].lemma.as_str();
        let cell = cells.entry((lemma, inst.candidate.as_slice())).or_default();
        if inst.label {
            cell.0 += 1;
        } else {
            cell.1 += 1;
        }
    }
    let right: usize = cells.values().map(|&(pos, neg)| pos.max(neg)).sum();
    right as f64 / instances.len() as f64
}

/// Sentences referenced by each partition; used to assert the no-leakage property.
pub fn sentences_of(instances: &[ProbeInstance], ids: &[usize]) -> BTreeSet<usize> {
    ids.iter().map(|&i| instances[i].sentence_index).collect()
}
