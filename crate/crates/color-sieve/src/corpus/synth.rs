//! Synthetic two-domain corpora with ground-truth labels.
//!
//! Documents are sampled from per-domain first-order Markov chains over a
//! reduced alphabet mapped into ASCII bytes. The candidate pool and the
//! prior corpus draw domains from a mixture; the downstream and its held-out
//! twin come from the target domain only. Generation is bit-reproducible
//! from the spec alone.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Document;
use crate::error::{Error, Result};
use crate::seeds::substream;

pub const DOMAIN_LABELS: [&str; 2] = ["domain-A", "domain-B"];

/// Alphabet symbols are mapped into these ASCII bytes.
const SYMBOL_CHARS: &[u8; 64] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789+/";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Reduced alphabet size (2..=64 symbols).
    pub alphabet: usize,
    /// Row-stochastic transition matrix per domain.
    pub transitions: [Vec<Vec<f64>>; 2],
    /// P(domain) for mixture-drawn documents; sums to 1.
    pub mixture: [f64; 2],
    pub docs_train: usize,
    pub docs_prior: usize,
    pub docs_down: usize,
    pub docs_eval_down: usize,
    pub docs_eval_train: usize,
    /// Document length in characters, inclusive range.
    pub len_range: (usize, usize),
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SynthCorpora {
    pub train: Vec<Document>,
    pub prior: Vec<Document>,
    pub down: Vec<Document>,
    pub eval_down: Vec<Document>,
    pub eval_train: Vec<Document>,
}

/// Two deterministic, well-separated chains: each domain concentrates mass
/// on different cyclic offsets and spreads the remainder uniformly.
pub fn structured_chains(alphabet: usize) -> [Vec<Vec<f64>>; 2] {
    let build = |major_off: usize, minor_off: usize| -> Vec<Vec<f64>> {
        (0..alphabet)
            .map(|s| {
                let mut row = vec![0.2 / (alphabet - 2) as f64; alphabet];
                row[(s + major_off) % alphabet] = 0.55;
                row[(s + minor_off) % alphabet] = 0.25;
                row
            })
            .collect()
    };
    [build(1, 3), build(alphabet - 1, 5)]
}

impl SynthSpec {
    /// The default two-domain benchmark: 16 symbols, 90/10 mixture, 20k
    /// candidate documents sized to one 128-token sequence each.
    pub fn default_benchmark(seed: u64) -> Self {
        SynthSpec {
            alphabet: 16,
            transitions: structured_chains(16),
            mixture: [0.9, 0.1],
            docs_train: 20_000,
            docs_prior: 2_000,
            docs_down: 100,
            docs_eval_down: 500,
            docs_eval_train: 500,
            len_range: (140, 240),
            seed,
        }
    }

    /// Same shape scaled down for fast tests.
    pub fn small(seed: u64) -> Self {
        SynthSpec {
            docs_train: 2_000,
            docs_prior: 400,
            docs_down: 50,
            docs_eval_down: 100,
            docs_eval_train: 100,
            len_range: (40, 80),
            ..SynthSpec::default_benchmark(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=SYMBOL_CHARS.len()).contains(&self.alphabet) {
            return Err(Error::InvalidSpec(format!(
                "alphabet must be in 2..={}, got {}",
                SYMBOL_CHARS.len(),
                self.alphabet
            )));
        }
        let mix_sum: f64 = self.mixture.iter().sum();
        if (mix_sum - 1.0).abs() > 1e-9 || self.mixture.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidSpec(format!(
                "mixture weights must be nonnegative and sum to 1, got {:?}",
                self.mixture
            )));
        }
        for (d, m) in self.transitions.iter().enumerate() {
            if m.len() != self.alphabet {
                return Err(Error::InvalidSpec(format!(
                    "domain {d} transition matrix has {} rows, expected {}",
                    m.len(),
                    self.alphabet
                )));
            }
            for (i, row) in m.iter().enumerate() {
                if row.len() != self.alphabet {
                    return Err(Error::InvalidSpec(format!(
                        "domain {d} row {i} has {} entries, expected {}",
                        row.len(),
                        self.alphabet
                    )));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "domain {d} row {i} is not a probability distribution (sum {s})"
                    )));
                }
            }
        }
        if self.len_range.0 < 1 || self.len_range.0 > self.len_range.1 {
            return Err(Error::InvalidSpec(format!(
                "bad length range {:?}",
                self.len_range
            )));
        }
        Ok(())
    }
}

fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

fn gen_document(spec: &SynthSpec, rng: &mut ChaCha8Rng, domain: usize, doc_id: String) -> Document {
    let len = rng.random_range(spec.len_range.0..=spec.len_range.1);
    let matrix = &spec.transitions[domain];
    let mut bytes = Vec::with_capacity(len);
    let mut state = rng.random_range(0..spec.alphabet);
    bytes.push(SYMBOL_CHARS[state]);
    for _ in 1..len {
        state = sample_categorical(rng, &matrix[state]);
        bytes.push(SYMBOL_CHARS[state]);
    }
    Document {
        doc_id,
        text: String::from_utf8(bytes).expect("symbols are ASCII"),
        domain_label: Some(DOMAIN_LABELS[domain].to_string()),
    }
}

fn gen_set(
    spec: &SynthSpec,
    name: &str,
    count: usize,
    forced_domain: Option<usize>,
) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream(spec.seed, &format!("synth/{name}")));
    (0..count)
        .map(|i| {
            let domain =
                forced_domain.unwrap_or_else(|| sample_categorical(&mut rng, &spec.mixture));
            gen_document(spec, &mut rng, domain, format!("{name}-{i:06}"))
        })
        .collect()
}

/// Generates the five corpora. The target domain is index 1 (`domain-B`):
/// `down` and `eval_down` are drawn from it exclusively, everything else
/// from the mixture.
pub fn gen_synth(spec: &SynthSpec) -> Result<SynthCorpora> {
    spec.validate()?;
    Ok(SynthCorpora {
        train: gen_set(spec, "train", spec.docs_train, None),
        prior: gen_set(spec, "prior", spec.docs_prior, None),
        down: gen_set(spec, "down", spec.docs_down, Some(1)),
        eval_down: gen_set(spec, "eval_down", spec.docs_eval_down, Some(1)),
        eval_train: gen_set(spec, "eval_train", spec.docs_eval_train, None),
    })
}
