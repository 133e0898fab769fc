use anyhow::{bail, ensure, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use wsd_core::corpus::SynthConfig;
use wsd_core::models::{Architecture, ModelConfig, TrainConfig};
use wsd_core::probe::ProbeConfig;

/// Where sentences come from: the synthetic generator unless `tsv` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Annotated TSV corpus to read instead of generating one.
    pub tsv: Option<PathBuf>,
    pub synthetic: SynthConfig,
    pub bpe_merges: usize,
    /// Trailing sentences kept out of translation training and used for BLEU.
    pub heldout_sentences: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            tsv: None,
            synthetic: SynthConfig::default(),
            bpe_merges: 200,
            heldout_sentences: 200,
        }
    }
}

/// Per-field overrides of [`ModelConfig::desk`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub layers: Option<usize>,
    pub model_dim: Option<usize>,
    pub heads: Option<usize>,
    pub ff_dim: Option<usize>,
    pub dropout: Option<f64>,
    pub positional_encoding: Option<bool>,
}

impl ModelOverrides {
    pub fn apply(
        &self,
        arch: Architecture,
        source_vocab: usize,
        target_vocab: usize,
    ) -> ModelConfig {
        let mut c = ModelConfig::desk(arch, source_vocab, target_vocab);
        if let Some(v) = self.layers {
            c.layers = v;
        }
        if let Some(v) = self.model_dim {
            c.model_dim = v;
        }
        if let Some(v) = self.heads {
            c.heads = v;
        }
        if let Some(v) = self.ff_dim {
            c.ff_dim = v;
        }
        if let Some(v) = self.dropout {
            c.dropout = v;
        }
        if let Some(v) = self.positional_encoding {
            c.positional_encoding = v;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub attention: bool,
    /// Rescale merged attention rows to sum to one before taking statistics.
    pub renormalize: bool,
    /// Cap on the sentences traced for attention statistics (all if unset).
    pub attention_sentences: Option<usize>,
    pub bleu: bool,
    pub max_decode_length: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            attention: true,
            renormalize: true,
            attention_sentences: None,
            bleu: true,
            max_decode_length: 40,
        }
    }
}

/// Everything a run needs. Every field has a default, so `{}` is a valid
/// config that runs the whole desk-scale experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    /// Master seed; every other seed is derived from it by label.
    pub seed: u64,
    pub corpus: CorpusConfig,
    pub architectures: Vec<Architecture>,
    pub model: ModelOverrides,
    pub training: TrainConfig,
    pub probe: ProbeConfig,
    pub analysis: AnalysisConfig,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            name: "desk".into(),
            seed: 1,
            corpus: CorpusConfig::default(),
            architectures: vec![Architecture::Transformer, Architecture::Rnns2s],
            model: ModelOverrides::default(),
            training: TrainConfig {
                learning_rate: 1e-3,
                epochs: 4,
                ..TrainConfig::default()
            },
            probe: ProbeConfig::default(),
            analysis: AnalysisConfig::default(),
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading config {}: {e}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("parsing config {}: {e}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.name.is_empty(), "experiment name must not be empty");
        if let Some(p) = &self.corpus.tsv {
            ensure!(p.is_file(), "corpus file {} does not exist", p.display());
        }
        ensure!(
            !self.architectures.is_empty(),
            "at least one architecture is required"
        );
        let mut seen = self.architectures.clone();
        seen.sort();
        seen.dedup();
        ensure!(
            seen.len() == self.architectures.len(),
            "architectures are listed more than once"
        );
        for &arch in &self.architectures {
            // Vocabulary sizes are unknown until the corpus exists; any
            // valid size works for checking the rest of the shape.
            self.model.apply(arch, 8, 8).validate()?;
        }
        ensure!(
            self.training.epochs > 0 && self.training.batch_size > 0,
            "training epochs and batch size must be positive"
        );
        ensure!(
            self.training.learning_rate > 0.0,
            "training learning rate must be positive"
        );
        self.probe.validate()?;
        if self.analysis.bleu && self.corpus.heldout_sentences == 0 {
            bail!("BLEU needs held-out sentences (corpus.heldout_sentences > 0)");
        }
        ensure!(
            self.analysis.max_decode_length > 0,
            "max_decode_length must be positive"
        );
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("runs").join(&self.name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_fully_defaulted() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn partial_nested_overrides() {
        let c: RunConfig = serde_json::from_str(
            r#"{"seed": 9, "corpus": {"synthetic": {"sentences": 50}}, "probe": {"seeds": 2}}"#,
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.corpus.synthetic.sentences, 50);
        assert_eq!(c.corpus.synthetic.sense_prior, 0.7);
        assert_eq!(c.probe.seeds, 2);
        assert_eq!(c.probe.hidden, 128);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 1}"#).is_err());
        let mut c = RunConfig::default();
        c.corpus.tsv = Some("/nonexistent/corpus.tsv".into());
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.model.heads = Some(5);
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.architectures = vec![Architecture::Rnns2s, Architecture::Rnns2s];
        assert!(c.validate().is_err());
    }
}
