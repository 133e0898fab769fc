//! Stage orchestration with content-addressed caching.
//!
//! Every stage writes into its own directory and finishes by writing a
//! `manifest.json` with a cache key (hash of everything that determines the
//! output), provenance, and the SHA-256 of each output file. A stage whose
//! manifest key matches and whose files still hash correctly is not re-run.
//! Stages that were not requested are loaded from such a manifest or the
//! run fails, naming the missing stage.

use crate::artifacts::{self, locator_tag};
use crate::config::RunConfig;
use crate::fsutil::{atomic_write, file_sha256, json_hash, read_json, write_json};
use anyhow::{anyhow, bail, ensure, Context, Result};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;
use wsd_core::attention::{
    aggregate_by_group, attention_csv, collect_attention, AttentionStats, NounGroup,
};
use wsd_core::corpus::{generate_synthetic, AnnotatedCorpus, Locator, RnnMode};
use wsd_core::data::PreparedCorpus;
use wsd_core::decode::{corpus_bleu, greedy_decode, BleuReport};
use wsd_core::models::{
    build_model, train_nmt, Architecture, ModelConfig, TrainConfig, TrainReport, TrainedModel,
};
use wsd_core::probe::{materialize, run_probe_suite, ProbeData, ProbeReport};
use wsd_core::rng::derive_seed;
use wsd_core::subword::join_subwords;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FAILED_FILE: &str = "FAILED";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PROBE_CSV: &str = "probe_report.csv";
pub const PROBE_JSON: &str = "probe_report.json";
pub const ATTENTION_CSV: &str = "attention_stats.csv";
pub const ATTENTION_JSON: &str = "attention_stats.json";
pub const BLEU_JSON: &str = "bleu.json";
pub const TRANSLATIONS_FILE: &str = "translations.txt";

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Generate,
    Train,
    Trace,
    Probe,
    Analyze,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Generate,
        Stage::Train,
        Stage::Trace,
        Stage::Probe,
        Stage::Analyze,
        Stage::Report,
    ];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Generate => "generate",
            Stage::Train => "train",
            Stage::Trace => "trace",
            Stage::Probe => "probe",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
        })
    }
}

/// A failure attributed to the stage it happened in.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: anyhow::Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage `{}` failed: {:#}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: Stage,
    pub architecture: Option<Architecture>,
    pub key: String,
    pub code_version: String,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    /// Cache keys of the upstream stages this output was built from.
    pub inputs: BTreeMap<String, String>,
    /// Output file name → SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub details: Value,
}

/// Which stages and architectures a run covers.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Empty means every stage.
    pub stages: Vec<Stage>,
    /// Restrict to these architectures (all configured ones if empty).
    pub architectures: Vec<Architecture>,
    /// Ignore caches and recompute every requested stage.
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Ran,
    Cached,
    Loaded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub architecture: Option<Architecture>,
    pub outcome: Outcome,
    pub key: String,
}

pub struct Pipeline {
    pub config: RunConfig,
    pub out: PathBuf,
    config_hash: String,
    records: Vec<StageRecord>,
}

struct Corpus {
    key: String,
    corpus: AnnotatedCorpus,
    prepared: PreparedCorpus,
}

/// The default probe sweep: the embedding baseline, every encoder layer
/// (each direction separately plus each bidirectional level concatenated
/// for the recurrent encoder), and the decoder state used for prediction.
pub fn default_locators(config: &ModelConfig) -> Vec<Locator> {
    let mut out = vec![Locator::embedding()];
    match config.architecture {
        Architecture::Transformer => {
            out.extend((1..=config.layers).map(|l| Locator::encoder(l, RnnMode::Plain)));
        }
        Architecture::Rnns2s => {
            for l in 1..=config.layers {
                let mode = if l % 2 == 1 {
                    RnnMode::Forward
                } else {
                    RnnMode::Backward
                };
                out.push(Locator::encoder(l, mode));
            }
            out.extend(
                (2..=config.layers)
                    .step_by(2)
                    .map(|l| Locator::encoder(l, RnnMode::Concat)),
            );
        }
    }
    out.push(Locator::decoder(config.decoder_probe_layer()));
    out
}

fn seeds_map(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn inputs_map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

impl Pipeline {
    pub fn new(config: RunConfig, out: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        // The output location does not influence any result.
        let config_hash = json_hash(&RunConfig {
            out_dir: None,
            ..config.clone()
        });
        Ok(Pipeline {
            config,
            out: out.into(),
            config_hash,
            records: Vec::new(),
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn records(&self) -> &[StageRecord] {
        &self.records
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.out.join("corpus")
    }

    pub fn stage_dir(&self, stage: Stage, arch: Architecture) -> PathBuf {
        let base = match stage {
            Stage::Train => "models",
            Stage::Trace => "traces",
            Stage::Probe => "probe",
            Stage::Analyze => "analysis",
            Stage::Generate | Stage::Report => unreachable!("not a per-architecture stage"),
        };
        self.out.join(base).join(arch.to_string())
    }

    fn is_cached(dir: &Path, key: &str) -> bool {
        let Ok(m) = read_json::<Manifest>(&dir.join(MANIFEST_FILE)) else {
            return false;
        };
        m.key == key
            && m.outputs
                .iter()
                .all(|(f, h)| file_sha256(&dir.join(f)).is_ok_and(|x| &x == h))
    }

    fn write_manifest(&self, dir: &Path, mut manifest: Manifest, files: &[&str]) -> Result<()> {
        for f in files {
            manifest
                .outputs
                .insert(f.to_string(), file_sha256(&dir.join(f))?);
        }
        write_json(&dir.join(MANIFEST_FILE), &manifest)
    }

    fn manifest(&self, stage: Stage, arch: Option<Architecture>, key: &str) -> Manifest {
        Manifest {
            stage,
            architecture: arch,
            key: key.into(),
            code_version: CODE_VERSION.into(),
            config_hash: self.config_hash.clone(),
            seeds: seeds_map(&[("master", self.config.seed)]),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            details: Value::Null,
        }
    }

    /// Decide whether a stage runs, is served from cache, or is missing.
    fn plan(
        &mut self,
        stage: Stage,
        arch: Option<Architecture>,
        dir: &Path,
        key: &str,
        opts: &RunOptions,
    ) -> Result<bool> {
        let requested = opts.stages.is_empty() || opts.stages.contains(&stage);
        let cached = !(requested && opts.force) && Self::is_cached(dir, key);
        let outcome = match (requested, cached) {
            (_, true) if requested => Outcome::Cached,
            (_, true) => Outcome::Loaded,
            (true, false) => Outcome::Ran,
            (false, false) => {
                let what = arch.map_or(String::new(), |a| format!(" for {a}"));
                bail!("needs the output of stage `{stage}`{what}, which is missing or stale in {}; run it first", dir.display())
            }
        };
        if outcome != Outcome::Ran {
            info!(
                "{stage}{}: using cached output in {}",
                arch.map_or(String::new(), |a| format!(" ({a})")),
                dir.display()
            );
        }
        self.records.push(StageRecord {
            stage,
            architecture: arch,
            outcome,
            key: key.into(),
        });
        Ok(outcome == Outcome::Ran)
    }

    fn architectures(&self, opts: &RunOptions) -> Result<Vec<Architecture>> {
        if opts.architectures.is_empty() {
            return Ok(self.config.architectures.clone());
        }
        for a in &opts.architectures {
            ensure!(
                self.config.architectures.contains(a),
                "architecture {a} is not part of this config"
            );
        }
        Ok(opts.architectures.clone())
    }

    /// Execute the requested stages. On failure a `FAILED` marker naming the
    /// stage is left in the output directory next to any partial outputs.
    pub fn run(&mut self, opts: &RunOptions) -> Result<Value, StageError> {
        std::fs::create_dir_all(&self.out).map_err(|e| StageError {
            stage: opts.stages.first().copied().unwrap_or(Stage::Generate),
            source: anyhow!("cannot create output directory {}: {e}", self.out.display()),
        })?;
        let _ = std::fs::remove_file(self.out.join(FAILED_FILE));
        let result = self.run_inner(opts);
        if let Err(e) = &result {
            let marker = json!({ "stage": e.stage, "error": format!("{:#}", e.source) });
            let _ = write_json(&self.out.join(FAILED_FILE), &marker);
        }
        result
    }

    fn run_inner(&mut self, opts: &RunOptions) -> Result<Value, StageError> {
        let at = |stage: Stage| move |source: anyhow::Error| StageError { stage, source };
        write_json(&self.out.join("run_config.json"), &self.config).map_err(at(Stage::Generate))?;
        let archs = self.architectures(opts).map_err(at(Stage::Generate))?;
        let wants = |s: Stage| opts.stages.is_empty() || opts.stages.contains(&s);
        let last = opts.stages.iter().copied().max().unwrap_or(Stage::Report);

        let corpus = self.generate(opts).map_err(at(Stage::Generate))?;
        let mut per_arch = BTreeMap::new();
        for &arch in &archs {
            if last < Stage::Train {
                break;
            }
            let (model, train_key) = self.train(arch, &corpus, opts).map_err(at(Stage::Train))?;
            let mut entry =
                json!({ "train_key": train_key, "parameters": model.parameter_count() });
            if last >= Stage::Trace
                && (wants(Stage::Trace) || wants(Stage::Probe) || wants(Stage::Report))
            {
                let trace_key = self
                    .trace(arch, &model, &train_key, &corpus, opts)
                    .map_err(at(Stage::Trace))?;
                if last >= Stage::Probe {
                    let report = self
                        .probe(arch, &trace_key, opts)
                        .map_err(at(Stage::Probe))?;
                    entry["probe"] = serde_json::to_value(&report.rows).expect("plain data");
                }
            }
            if last >= Stage::Analyze && (wants(Stage::Analyze) || wants(Stage::Report)) {
                let analysis = self
                    .analyze(arch, &model, &train_key, &corpus, opts)
                    .map_err(at(Stage::Analyze))?;
                entry["analysis"] = analysis;
            }
            per_arch.insert(arch.to_string(), entry);
        }
        let summary = json!({
            "name": self.config.name,
            "code_version": CODE_VERSION,
            "config_hash": self.config_hash,
            "master_seed": self.config.seed,
            "corpus": {
                "key": corpus.key,
                "sentences": corpus.corpus.sentences.len(),
                "ambiguous_occurrences": corpus.corpus.records.len(),
                "source_vocab": corpus.prepared.source_vocab.len(),
                "target_vocab": corpus.prepared.target_vocab.len(),
            },
            "architectures": per_arch,
            "stages": self.records,
        });
        if wants(Stage::Report) {
            self.report(&summary).map_err(at(Stage::Report))?;
        }
        Ok(summary)
    }

    fn generate(&mut self, opts: &RunOptions) -> Result<Corpus> {
        let dir = self.corpus_dir();
        let cfg = self.config.corpus.clone();
        let corpus_seed = derive_seed(self.config.seed, "corpus");
        let source = match &cfg.tsv {
            Some(p) => json!({ "tsv": file_sha256(p)? }),
            None => json!({ "synthetic": cfg.synthetic, "seed": corpus_seed }),
        };
        let key = json_hash(&json!({
            "stage": "generate", "code": CODE_VERSION, "source": source, "bpe_merges": cfg.bpe_merges,
        }));
        if !self.plan(Stage::Generate, None, &dir, &key, opts)? {
            let (corpus, prepared) = artifacts::load_corpus(&dir)?;
            return Ok(Corpus {
                key,
                corpus,
                prepared,
            });
        }
        let t = Instant::now();
        let corpus = match &cfg.tsv {
            Some(p) => artifacts::read_corpus_tsv(p)?,
            None => generate_synthetic(&cfg.synthetic, corpus_seed)?,
        };
        ensure!(
            corpus.sentences.len() > cfg.heldout_sentences,
            "corpus has {} sentences, not more than the {} held out",
            corpus.sentences.len(),
            cfg.heldout_sentences
        );
        let prepared = PreparedCorpus::learn(&corpus, cfg.bpe_merges)?;
        artifacts::save_corpus(&dir, &corpus, &prepared)?;
        let mut m = self.manifest(Stage::Generate, None, &key);
        m.seeds.insert("corpus".into(), corpus_seed);
        m.details = json!({
            "sentences": corpus.sentences.len(),
            "ambiguous_sentences": corpus.ambiguous_sentence_count(),
            "ambiguous_occurrences": corpus.records.len(),
            "merges": prepared.merges.len(),
            "source_vocab": prepared.source_vocab.len(),
            "target_vocab": prepared.target_vocab.len(),
            "unknown_tokens": prepared.unknown_tokens,
        });
        self.write_manifest(
            &dir,
            m,
            &[
                artifacts::CORPUS_FILE,
                artifacts::MERGES_FILE,
                artifacts::SOURCE_VOCAB_FILE,
                artifacts::TARGET_VOCAB_FILE,
                artifacts::SEGMENTATION_FILE,
            ],
        )?;
        info!(
            "generate: {} sentences, {} ambiguous occurrences, vocab {}/{} in {:.1?}",
            corpus.sentences.len(),
            corpus.records.len(),
            prepared.source_vocab.len(),
            prepared.target_vocab.len(),
            t.elapsed()
        );
        Ok(Corpus {
            key,
            corpus,
            prepared,
        })
    }

    fn model_config(&self, arch: Architecture, corpus: &Corpus) -> ModelConfig {
        self.config.model.apply(
            arch,
            corpus.prepared.source_vocab.len(),
            corpus.prepared.target_vocab.len(),
        )
    }

    fn train(
        &mut self,
        arch: Architecture,
        corpus: &Corpus,
        opts: &RunOptions,
    ) -> Result<(TrainedModel, String)> {
        let dir = self.stage_dir(Stage::Train, arch);
        let model_config = self.model_config(arch, corpus);
        model_config.validate()?;
        let init_seed = derive_seed(self.config.seed, &format!("init/{arch}"));
        let train_config = TrainConfig {
            seed: derive_seed(self.config.seed, &format!("train/{arch}")),
            ..self.config.training.clone()
        };
        let heldout = self.config.corpus.heldout_sentences;
        let key = json_hash(&json!({
            "stage": "train", "code": CODE_VERSION, "corpus": corpus.key, "model": model_config,
            "training": train_config, "init_seed": init_seed, "heldout": heldout,
        }));
        if !self.plan(Stage::Train, Some(arch), &dir, &key, opts)? {
            return Ok((artifacts::load_model(&dir)?, key));
        }
        let mut model = build_model(&model_config, init_seed)?;
        let pairs = corpus.prepared.pairs();
        let train_pairs = &pairs[..pairs.len() - heldout];
        info!(
            "train ({arch}): {} parameters, {} sentence pairs",
            model.parameter_count(),
            train_pairs.len()
        );
        let t = Instant::now();
        let report: TrainReport = train_nmt(&mut model, train_pairs, &train_config, |e| {
            info!(
                "train ({arch}): epoch {} mean loss {:.4} ({:.0?})",
                e.epoch,
                e.mean_loss,
                t.elapsed()
            );
        })?;
        artifacts::save_model(&dir, &model)?;
        write_json(&dir.join("training_log.json"), &report)?;
        let mut m = self.manifest(Stage::Train, Some(arch), &key);
        m.seeds.insert("init".into(), init_seed);
        m.seeds.insert("train".into(), train_config.seed);
        m.inputs = inputs_map(&[("corpus", &corpus.key)]);
        m.details = json!({ "parameters": model.parameter_count(), "losses": report.losses() });
        self.write_manifest(
            &dir,
            m,
            &[
                artifacts::PARAMS_FILE,
                "params.wsdt.json",
                artifacts::MODEL_FILE,
                "training_log.json",
            ],
        )?;
        Ok((model, key))
    }

    fn trace(
        &mut self,
        arch: Architecture,
        model: &TrainedModel,
        train_key: &str,
        corpus: &Corpus,
        opts: &RunOptions,
    ) -> Result<String> {
        let dir = self.stage_dir(Stage::Trace, arch);
        let locators = default_locators(&model.config);
        let key = json_hash(&json!({
            "stage": "trace", "code": CODE_VERSION, "model": train_key, "corpus": corpus.key, "locators": locators,
        }));
        if !self.plan(Stage::Trace, Some(arch), &dir, &key, opts)? {
            return Ok(key);
        }
        let t = Instant::now();
        let (cells, stats) = materialize(
            model,
            &corpus.prepared,
            &corpus.corpus.sentences,
            &corpus.corpus.records,
            &locators,
        )?;
        artifacts::save_cells(&dir, &cells)?;
        let mut m = self.manifest(Stage::Trace, Some(arch), &key);
        m.inputs = inputs_map(&[("model", train_key), ("corpus", &corpus.key)]);
        m.details = json!({
            "cells": locators.iter().map(locator_tag).collect::<Vec<_>>(),
            "instances": cells[0].len(),
            "occurrences": stats.occurrences,
            "unknown_candidate_subwords": stats.unknown_candidate_subwords,
        });
        self.write_manifest(
            &dir,
            m,
            &[
                artifacts::CELLS_FILE,
                artifacts::INSTANCES_FILE,
                artifacts::FEATURES_FILE,
                "features.wsdt.json",
            ],
        )?;
        info!(
            "trace ({arch}): {} cells × {} instances in {:.1?}",
            cells.len(),
            cells[0].len(),
            t.elapsed()
        );
        Ok(key)
    }

    fn probe(
        &mut self,
        arch: Architecture,
        trace_key: &str,
        opts: &RunOptions,
    ) -> Result<ProbeReport> {
        let dir = self.stage_dir(Stage::Probe, arch);
        let probe_seed = derive_seed(self.config.seed, &format!("probe/{arch}"));
        let key = json_hash(&json!({
            "stage": "probe", "code": CODE_VERSION, "trace": trace_key, "probe": self.config.probe, "seed": probe_seed,
        }));
        if !self.plan(Stage::Probe, Some(arch), &dir, &key, opts)? {
            return read_json(&dir.join(PROBE_JSON));
        }
        let cells: Vec<ProbeData> = artifacts::load_cells(&self.stage_dir(Stage::Trace, arch))?;
        let t = Instant::now();
        let report = run_probe_suite(
            &cells,
            &self.config.probe,
            probe_seed,
            trace_key,
            trace_key,
            |r| {
                info!(
                    "probe ({arch}): {}-{}-{} accuracy {:.4} ± {:.4} ({:.0?})",
                    r.side,
                    r.layer,
                    r.mode,
                    r.mean_accuracy,
                    r.std,
                    t.elapsed()
                );
            },
        )?;
        for r in &report.rows {
            ensure!(
                r.accuracies.iter().all(|a| (0.0..=1.0).contains(a)),
                "probe accuracy outside [0, 1] for {}-{}",
                r.side,
                r.layer
            );
        }
        atomic_write(&dir.join(PROBE_CSV), report.to_csv().as_bytes())?;
        write_json(&dir.join(PROBE_JSON), &report)?;
        let mut m = self.manifest(Stage::Probe, Some(arch), &key);
        m.seeds.insert("probe".into(), probe_seed);
        m.inputs = inputs_map(&[("trace", trace_key)]);
        m.details = json!({ "cells": report.rows.len(), "seeds": self.config.probe.seeds });
        self.write_manifest(&dir, m, &[PROBE_CSV, PROBE_JSON])?;
        Ok(report)
    }

    fn analyze(
        &mut self,
        arch: Architecture,
        model: &TrainedModel,
        train_key: &str,
        corpus: &Corpus,
        opts: &RunOptions,
    ) -> Result<Value> {
        let dir = self.stage_dir(Stage::Analyze, arch);
        let analysis = self.config.analysis.clone();
        let attention = analysis.attention && arch == Architecture::Transformer;
        let heldout = self.config.corpus.heldout_sentences;
        let key = json_hash(&json!({
            "stage": "analyze", "code": CODE_VERSION, "model": train_key, "corpus": corpus.key,
            "analysis": analysis, "heldout": heldout,
        }));
        let mut files: Vec<&str> = Vec::new();
        if attention {
            files.extend([ATTENTION_CSV, ATTENTION_JSON]);
        }
        if analysis.bleu {
            files.extend([BLEU_JSON, TRANSLATIONS_FILE]);
        }
        if !self.plan(Stage::Analyze, Some(arch), &dir, &key, opts)? {
            let mut out = json!({});
            if attention {
                out["attention"] = read_json::<Value>(&dir.join(ATTENTION_JSON))?;
            }
            if analysis.bleu {
                out["bleu"] = read_json::<Value>(&dir.join(BLEU_JSON))?;
            }
            return Ok(out);
        }
        let mut out = json!({});
        std::fs::create_dir_all(&dir)?;
        if attention {
            let t = Instant::now();
            let limit = analysis
                .attention_sentences
                .unwrap_or(usize::MAX)
                .min(corpus.corpus.sentences.len());
            let sub = AnnotatedCorpus {
                sentences: corpus.corpus.sentences[..limit].to_vec(),
                records: Vec::new(),
            };
            let prepared = PreparedCorpus {
                sentences: corpus.prepared.sentences[..limit].to_vec(),
                ..corpus.prepared.clone()
            };
            let sentences = collect_attention(model, &prepared, &sub, analysis.renormalize)?;
            let stats: Vec<AttentionStats> = [NounGroup::AmbiguousNouns, NounGroup::AllNouns]
                .into_iter()
                .map(|g| aggregate_by_group(&sentences, g, analysis.renormalize))
                .collect::<wsd_core::Result<_>>()?;
            for s in &stats {
                for l in &s.layers {
                    ensure!(
                        (0.0..=1.0).contains(&l.mean_self_weight)
                            && (0.0..=1.0).contains(&l.argmax_self_share)
                            && l.mean_entropy >= 0.0,
                        "attention statistics out of range for {} layer {}",
                        s.group,
                        l.layer
                    );
                }
            }
            atomic_write(&dir.join(ATTENTION_CSV), attention_csv(&stats).as_bytes())?;
            write_json(&dir.join(ATTENTION_JSON), &stats)?;
            out["attention"] = serde_json::to_value(&stats)?;
            info!(
                "analyze ({arch}): attention over {limit} sentences in {:.1?}",
                t.elapsed()
            );
        }
        if analysis.bleu {
            let t = Instant::now();
            let start = corpus.prepared.sentences.len() - heldout;
            let mut hyps = Vec::with_capacity(heldout);
            let mut refs = Vec::with_capacity(heldout);
            let mut lines = String::new();
            for s in &corpus.prepared.sentences[start..] {
                let decoded = greedy_decode(model, &s.source_ids, analysis.max_decode_length)?;
                let pieces: Vec<&str> = decoded
                    .tokens
                    .iter()
                    .map(|&id| corpus.prepared.target_vocab.token(id))
                    .collect();
                let words = join_subwords(&pieces);
                lines.push_str(&words.join(" "));
                lines.push('\n');
                hyps.push(words);
                refs.push(s.target.words.clone());
            }
            let bleu: BleuReport = corpus_bleu(&hyps, &refs, 4)?;
            ensure!(
                (0.0..=100.0).contains(&bleu.score),
                "BLEU {} outside [0, 100]",
                bleu.score
            );
            atomic_write(&dir.join(TRANSLATIONS_FILE), lines.as_bytes())?;
            write_json(&dir.join(BLEU_JSON), &bleu)?;
            out["bleu"] = serde_json::to_value(&bleu)?;
            info!(
                "analyze ({arch}): BLEU {:.2} on {heldout} held-out sentences in {:.1?}",
                bleu.score,
                t.elapsed()
            );
        }
        let mut m = self.manifest(Stage::Analyze, Some(arch), &key);
        m.inputs = inputs_map(&[("model", train_key), ("corpus", &corpus.key)]);
        m.details = json!({ "attention": attention, "bleu": analysis.bleu, "renormalize": analysis.renormalize });
        self.write_manifest(&dir, m, &files)?;
        Ok(out)
    }

    /// Summary JSON with the hash of every artifact under the output directory.
    fn report(&mut self, summary: &Value) -> Result<()> {
        let mut artifacts = BTreeMap::new();
        collect_hashes(&self.out, &self.out, &mut artifacts)?;
        artifacts.remove(SUMMARY_FILE);
        let mut summary = summary.clone();
        summary["artifacts"] = serde_json::to_value(artifacts)?;
        write_json(&self.out.join(SUMMARY_FILE), &summary)
    }
}

fn collect_hashes(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if e.file_type()?.is_dir() {
            collect_hashes(root, &p, out)?;
        } else if !e.file_name().to_string_lossy().starts_with('.') {
            let rel = p
                .strip_prefix(root)
                .expect("under root")
                .to_string_lossy()
                .replace('\\', "/");
            out.insert(rel, file_sha256(&p)?);
        }
    }
    Ok(())
}
