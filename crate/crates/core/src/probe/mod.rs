//! The sense probe: a one-hidden-layer ReLU classifier over
//! `R_ambi ⊕ R_sense` that predicts whether the candidate is the correct
//! translation, trained per (side, layer, mode) cell and repeated over seeds.

mod features;

pub use features::{
    extract_representation, materialize, sense_embedding, MaterializeStats, ProbeData,
};

use crate::corpus::{split_dataset, Locator, RnnMode, Side};
use crate::error::{bail, Result};
use crate::numerics::{Adam, AdamConfig, Gradients, ParamId, ParamSet, Tape, Tensor};
use crate::rng;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub hidden: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub seeds: usize,
    pub learning_rate: f64,
    /// Fractions of the instances held out for test and development.
    pub test_fraction: f64,
    pub dev_fraction: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            hidden: 128,
            batch_size: 256,
            epochs: 80,
            seeds: 10,
            learning_rate: 0.001,
            test_fraction: 0.1,
            dev_fraction: 0.1,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.seeds == 0 || self.hidden == 0 || self.batch_size == 0 {
            bail!(
                Config,
                "probe epochs, seeds, hidden size and batch size must be at least 1"
            );
        }
        if !(self.learning_rate > 0.0) {
            bail!(Config, "probe learning rate must be positive");
        }
        if !(self.test_fraction > 0.0
            && self.dev_fraction > 0.0
            && self.test_fraction + self.dev_fraction < 1.0)
        {
            bail!(
                Config,
                "test and dev fractions must be positive and leave training data"
            );
        }
        Ok(())
    }
}

/// `input → ReLU(W1 x + b1) → W2 h + b2 → softmax over {wrong, right}`.
#[derive(Debug, Clone)]
pub struct ProbeClassifier {
    pub locator: Locator,
    pub input_dim: usize,
    params: ParamSet,
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

impl ProbeClassifier {
    /// `input_dim` must equal `dim(R_ambi) + dim(R_sense)` of the data it
    /// will see; [`train_probe`] and [`evaluate_probe`] check it.
    pub fn new(locator: Locator, input_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            bail!(Config, "classifier dimensions must be positive");
        }
        let mut rng = rng::seeded(seed);
        let mut params = ParamSet::new();
        let w1 = params.add(
            "probe.w1",
            crate::models::xavier(&mut rng, input_dim, hidden),
        );
        let b1 = params.add("probe.b1", Tensor::zeros(&[1, hidden]));
        let w2 = params.add("probe.w2", crate::models::xavier(&mut rng, hidden, 2));
        let b2 = params.add("probe.b2", Tensor::zeros(&[1, 2]));
        Ok(ProbeClassifier {
            locator,
            input_dim,
            params,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    fn check(&self, data: &ProbeData) -> Result<()> {
        if data.locator != self.locator {
            bail!(
                Config,
                "classifier for {:?} applied to data from {:?}",
                self.locator,
                data.locator
            );
        }
        if data.input_dim() != self.input_dim {
            bail!(
                Config,
                "classifier expects {} inputs, data has {} + {}",
                self.input_dim,
                data.ambi_dim,
                data.sense_dim
            );
        }
        Ok(())
    }

    /// Logits for a batch of rows on `tape`.
    fn logits(&self, tape: &mut Tape<'_>, rows: &[&[f64]]) -> crate::numerics::Var {
        let mut flat = Vec::with_capacity(rows.len() * self.input_dim);
        for r in rows {
            flat.extend_from_slice(r);
        }
        let x = tape.constant(rows.len(), self.input_dim, flat);
        let (w1, b1, w2, b2) = (
            tape.param(self.w1),
            tape.param(self.b1),
            tape.param(self.w2),
            tape.param(self.b2),
        );
        let h = tape.matmul(x, w1);
        let h = tape.add_row(h, b1);
        let h = tape.relu(h);
        let o = tape.matmul(h, w2);
        tape.add_row(o, b2)
    }

    /// Probability that each row's candidate is the correct translation.
    pub fn predict_proba(&self, rows: &[&[f64]]) -> Vec<f64> {
        let mut tape = Tape::with_params(&self.params);
        let logits = self.logits(&mut tape, rows);
        let v = tape.value(logits);
        v.chunks(2)
            .map(|l| {
                let m = l[0].max(l[1]);
                let (a, b) = (crate::math::exp(l[0] - m), crate::math::exp(l[1] - m));
                b / (a + b)
            })
            .collect()
    }

    /// Predictions at threshold 0.5 (ties count as positive).
    pub fn predict(&self, rows: &[&[f64]]) -> Vec<bool> {
        self.predict_proba(rows)
            .into_iter()
            .map(|p| p >= 0.5)
            .collect()
    }
}

fn accuracy_unchecked(clf: &ProbeClassifier, data: &ProbeData) -> f64 {
    let rows: Vec<&[f64]> = data.features.iter().map(Vec::as_slice).collect();
    let hits = clf
        .predict(&rows)
        .into_iter()
        .zip(data.labels())
        .filter(|(p, l)| p == l)
        .count();
    hits as f64 / data.len() as f64
}

/// Fraction of correct binary decisions on `data`.
pub fn evaluate_probe(clf: &ProbeClassifier, data: &ProbeData) -> Result<f64> {
    if data.is_empty() {
        bail!(Input, "cannot evaluate on an empty instance set");
    }
    clf.check(data)?;
    Ok(accuracy_unchecked(clf, data))
}

/// Per-epoch development accuracy and the epoch that was kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrainLog {
    pub dev_accuracy: Vec<f64>,
    /// 1-based epoch whose weights were returned.
    pub best_epoch: usize,
}

/// Train with Adam on mean cross-entropy, returning the weights of the
/// epoch with the best development accuracy (earliest on ties).
pub fn train_probe(
    train: &ProbeData,
    dev: &ProbeData,
    config: &ProbeConfig,
    seed: u64,
) -> Result<(ProbeClassifier, ProbeTrainLog)> {
    config.validate()?;
    if train.is_empty() || dev.is_empty() {
        bail!(Input, "probe training needs non-empty train and dev sets");
    }
    if train
        .instances
        .iter()
        .chain(&dev.instances)
        .any(|i| i.locator != train.locator)
        || dev.locator != train.locator
    {
        bail!(Config, "probe instances mix representation locators");
    }
    let mut clf = ProbeClassifier::new(
        train.locator,
        train.input_dim(),
        config.hidden,
        rng::derive_seed(seed, "init"),
    )?;
    clf.check(train)?;
    clf.check(dev)?;
    let adam_cfg = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut adam = Adam::new(&clf.params, adam_cfg);
    let mut grads = Gradients::zeros_like(&clf.params);
    let labels: Vec<usize> = train.labels().map(usize::from).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle_rng = rng::seeded(rng::derive_seed(seed, "batches"));
    let mut best: Option<(f64, usize, ParamSet)> = None;
    let mut log = ProbeTrainLog {
        dev_accuracy: Vec::with_capacity(config.epochs),
        best_epoch: 0,
    };
    for epoch in 1..=config.epochs {
        rng::shuffle(&mut shuffle_rng, &mut order);
        for batch in order.chunks(config.batch_size) {
            let rows: Vec<&[f64]> = batch
                .iter()
                .map(|&i| train.features[i].as_slice())
                .collect();
            let targets: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            {
                let mut tape = Tape::with_params(&clf.params);
                let logits = clf.logits(&mut tape, &rows);
                let loss = tape.cross_entropy(logits, &targets);
                if !tape.scalar(loss).is_finite() {
                    return Err(crate::Error::Training {
                        epoch,
                        message: "probe loss is not finite".into(),
                    });
                }
                tape.backward(loss, 1.0 / batch.len() as f64, Some(&mut grads));
            }
            clf.params.absorb(&mut grads)?;
            adam.step(&mut clf.params)?;
        }
        let acc = accuracy_unchecked(&clf, dev);
        log.dev_accuracy.push(acc);
        if best.as_ref().is_none_or(|b| acc > b.0) {
            best = Some((acc, epoch, clf.params.clone()));
        }
    }
    let (_, epoch, params) = best.expect("at least one epoch");
    clf.params = params;
    log.best_epoch = epoch;
    Ok((clf, log))
}

/// One (side, layer, mode) cell of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub side: Side,
    pub layer: usize,
    pub mode: RnnMode,
    pub mean_accuracy: f64,
    /// Sample standard deviation over seeds (0 for a single seed).
    pub std: f64,
    pub seeds: usize,
    pub accuracies: Vec<f64>,
    pub input_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub model_id: String,
    pub dataset_id: String,
    pub rows: Vec<ProbeRow>,
}

impl ProbeReport {
    pub fn row(&self, locator: Locator) -> Option<&ProbeRow> {
        self.rows
            .iter()
            .find(|r| r.side == locator.side && r.layer == locator.layer && r.mode == locator.mode)
    }

    /// `side,layer,mode,mean_acc,std,seeds` with fixed 6-decimal formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("side,layer,mode,mean_acc,std,seeds\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{}",
                r.side, r.layer, r.mode, r.mean_accuracy, r.std, r.seeds
            );
        }
        out
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, crate::math::sqrt(var))
}

/// Seed `k` of the sweep (0-based) for a master seed.
pub fn probe_seed(master: u64, k: usize) -> u64 {
    rng::derive_seed(master, &format!("probe-seed/{k}"))
}

/// Train and test every cell `config.seeds` times. Each seed draws its own
/// sentence-grouped train/dev/test split and its own initialisation, so the
/// spread covers both split and optimisation noise.
pub fn run_probe_suite(
    cells: &[ProbeData],
    config: &ProbeConfig,
    master_seed: u64,
    model_id: &str,
    dataset_id: &str,
    mut on_cell: impl FnMut(&ProbeRow),
) -> Result<ProbeReport> {
    config.validate()?;
    let mut rows = Vec::with_capacity(cells.len());
    for data in cells {
        let n = data.len();
        let test = crate::math::round(n as f64 * config.test_fraction) as usize;
        let dev = crate::math::round(n as f64 * config.dev_fraction) as usize;
        let mut accuracies = Vec::with_capacity(config.seeds);
        for k in 0..config.seeds {
            let seed = probe_seed(master_seed, k);
            let split = split_dataset(&data.instances, seed, test.max(1), dev.max(1))?;
            let (clf, _) = train_probe(
                &data.subset(&split.train),
                &data.subset(&split.dev),
                config,
                seed,
            )?;
            accuracies.push(evaluate_probe(&clf, &data.subset(&split.test))?);
        }
        let (mean_accuracy, std) = mean_std(&accuracies);
        let row = ProbeRow {
            side: data.locator.side,
            layer: data.locator.layer,
            mode: data.locator.mode,
            mean_accuracy,
            std,
            seeds: config.seeds,
            accuracies,
            input_dim: data.input_dim(),
        };
        on_cell(&row);
        rows.push(row);
    }
    Ok(ProbeReport {
        model_id: model_id.into(),
        dataset_id: dataset_id.into(),
        rows,
    })
}
