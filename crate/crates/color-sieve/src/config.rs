//! Declarative run configuration.
//!
//! A run is described by one TOML file with flat sections per stage; CLI
//! flags override file values. The sha-256 hash of the canonical serialized
//! config (first 16 hex chars) stamps every artifact, and stages are skipped
//! on rerun only when their outputs carry the current hash. Output paths are
//! deliberately not part of the config, so the same config reproduces the
//! same bytes in any run directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{structured_chains, SynthSpec};
use crate::error::{Error, Result};
use crate::evaluator::BenchmarkConfig;
use crate::ngram::ConditionalMode;
use crate::seeds::substream;
use crate::selector::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every consumer derives a named substream from it.
    pub seed: u64,
    /// Worker cap for parallel stages; the COLOR_SIEVE_WORKERS environment
    /// variable lowers it further.
    pub workers: usize,
    pub corpus: CorpusSection,
    pub synth: SynthSection,
    pub model: ModelSection,
    pub selection: SelectionSection,
    pub cost: CostSection,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            workers: 4,
            corpus: CorpusSection::default(),
            synth: SynthSection::default(),
            model: ModelSection::default(),
            selection: SelectionSection::default(),
            cost: CostSection::default(),
            eval: EvalSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    /// "synthetic" generates labeled corpora from the `[synth]` section;
    /// "jsonl" ingests the five files below.
    pub kind: String,
    pub train: Option<PathBuf>,
    pub prior: Option<PathBuf>,
    pub down: Option<PathBuf>,
    pub eval_down: Option<PathBuf>,
    pub eval_train: Option<PathBuf>,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            kind: "synthetic".into(),
            train: None,
            prior: None,
            down: None,
            eval_down: None,
            eval_train: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub alphabet: usize,
    pub mixture: [f64; 2],
    pub docs_train: usize,
    pub docs_prior: usize,
    pub docs_down: usize,
    pub docs_eval_down: usize,
    pub docs_eval_train: usize,
    pub len_min: usize,
    pub len_max: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            alphabet: 16,
            mixture: [0.9, 0.1],
            docs_train: 20_000,
            docs_prior: 2_000,
            docs_down: 100,
            docs_eval_down: 500,
            docs_eval_train: 500,
            len_min: 140,
            len_max: 240,
        }
    }
}

impl SynthSection {
    pub fn to_spec(&self, root_seed: u64) -> SynthSpec {
        SynthSpec {
            alphabet: self.alphabet,
            transitions: structured_chains(self.alphabet),
            mixture: self.mixture,
            docs_train: self.docs_train,
            docs_prior: self.docs_prior,
            docs_down: self.docs_down,
            docs_eval_down: self.docs_eval_down,
            docs_eval_train: self.docs_eval_train,
            len_range: (self.len_min, self.len_max),
            seed: substream(root_seed, "synthesis"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub context_length: usize,
    /// Order of the auxiliary (conditional and marginal) models.
    pub k_aux: usize,
    /// Order of the target model trained on the selection.
    pub k_target: usize,
    pub alpha: f64,
    /// "interpolate" or "count_add".
    pub conditional_mode: String,
    pub lambda: f64,
    pub count_weight: u32,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            context_length: 128,
            k_aux: 3,
            k_target: 5,
            alpha: 0.1,
            conditional_mode: "interpolate".into(),
            lambda: 0.5,
            count_weight: 1,
        }
    }
}

impl ModelSection {
    pub fn conditional(&self) -> Result<ConditionalMode> {
        match self.conditional_mode.as_str() {
            "interpolate" => Ok(ConditionalMode::Interpolate {
                lambda: self.lambda,
            }),
            "count_add" => Ok(ConditionalMode::CountAdd {
                weight: self.count_weight,
            }),
            other => Err(Error::Config(format!(
                "conditional_mode must be \"interpolate\" or \"count_add\", got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub method: Method,
    pub n: usize,
    pub tau: u32,
    pub b: usize,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection {
            method: Method::ColorFilter,
            n: 1000,
            tau: 8,
            b: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSection {
    /// Target/auxiliary forward-cost ratio.
    pub l: f64,
    pub flops_per_forward: f64,
}

impl Default for CostSection {
    fn default() -> Self {
        CostSection {
            l: 5.5,
            flops_per_forward: crate::cost::DEFAULT_FLOPS_PER_FORWARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub quantiles: Vec<f64>,
    /// Learning-curve checkpoints in selected sequences.
    pub checkpoints: Vec<usize>,
    /// Evaluate curves in shuffled instead of selection order.
    pub shuffle_curve: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            quantiles: vec![0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99],
            checkpoints: vec![100, 250, 500, 750, 1000],
            shuffle_curve: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(raw: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(raw).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml_str(&raw)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        match self.corpus.kind.as_str() {
            "synthetic" => {}
            "jsonl" => {
                for (name, p) in [
                    ("train", &self.corpus.train),
                    ("prior", &self.corpus.prior),
                    ("down", &self.corpus.down),
                    ("eval_down", &self.corpus.eval_down),
                    ("eval_train", &self.corpus.eval_train),
                ] {
                    if p.is_none() {
                        return Err(Error::Config(format!(
                            "corpus.kind = \"jsonl\" requires corpus.{name}"
                        )));
                    }
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "corpus.kind must be \"synthetic\" or \"jsonl\", got {other:?}"
                )))
            }
        }
        self.model.conditional()?;
        if self.model.context_length < 2 {
            return Err(Error::Config("model.context_length must be >= 2".into()));
        }
        if self.selection.n == 0 || self.selection.tau == 0 || self.selection.b == 0 {
            return Err(Error::Config("selection.n, tau, b must be >= 1".into()));
        }
        Ok(())
    }

    /// First 16 hex chars of the sha-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_toml().as_bytes());
        hex::encode(&h.finalize()[..8])
    }

    /// Effective worker count after the COLOR_SIEVE_WORKERS cap.
    pub fn effective_workers(&self) -> usize {
        match std::env::var("COLOR_SIEVE_WORKERS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
        {
            Some(cap) if cap >= 1 => self.workers.min(cap),
            _ => self.workers,
        }
    }

    /// In-memory benchmark configuration for synthetic runs.
    pub fn to_benchmark(&self) -> Result<BenchmarkConfig> {
        if self.corpus.kind != "synthetic" {
            return Err(Error::Config(
                "benchmark runs require corpus.kind = \"synthetic\"".into(),
            ));
        }
        Ok(BenchmarkConfig {
            spec: self.synth.to_spec(self.seed),
            context_length: self.model.context_length,
            k_aux: self.model.k_aux,
            k_target: self.model.k_target,
            alpha: self.model.alpha,
            conditional: self.model.conditional()?,
            n: self.selection.n,
            b: self.selection.b,
            seed: self.seed,
            workers: self.effective_workers(),
        })
    }
}
