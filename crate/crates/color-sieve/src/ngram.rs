//! Count-based add-alpha n-gram language models.
//!
//! These play three roles: the marginal model (trained on the prior corpus),
//! the conditional model (prior adapted toward the downstream corpus), and
//! the target model trained on the selected data. Counts are exact, so
//! training is order-independent and incremental updates reproduce batch
//! training bit for bit.
//!
//! Contexts are the `k-1` tokens preceding a position, left-padded with the
//! BOS marker at document starts. With add-alpha smoothing an untrained model
//! predicts the uniform distribution, which doubles as the "freshly
//! initialized model" in sequential selection.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenSequence, Vocab};
use crate::error::{Error, Result};
use crate::meta::{read_header, FileMeta};

const MODEL_MAGIC: &str = "color-sieve-model";
const MODEL_VERSION: &str = "v1";

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextCounts {
    total: u64,
    tokens: HashMap<u32, u64>,
}

/// Add-alpha smoothed n-gram model with exact counts.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    alpha: f64,
    vocab: Vocab,
    counts: HashMap<Box<[u32]>, ContextCounts>,
    trained_tokens: u64,
}

impl NGramModel {
    /// Zero-count model: predicts the uniform distribution everywhere.
    pub fn empty(order: usize, alpha: f64, vocab: Vocab) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidParam(format!("order must be >= 1, got {order}")));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidParam(format!("alpha must be > 0, got {alpha}")));
        }
        if vocab.size < 2 {
            return Err(Error::InvalidParam(format!(
                "vocabulary must have >= 2 tokens, got {}",
                vocab.size
            )));
        }
        Ok(NGramModel {
            order,
            alpha,
            vocab,
            counts: HashMap::new(),
            trained_tokens: 0,
        })
    }

    /// Batch training: exact occurrence counts over BOS-padded contexts.
    /// An empty corpus yields a valid zero-count (uniform) model.
    pub fn train(seqs: &[TokenSequence], order: usize, alpha: f64, vocab: Vocab) -> Result<Self> {
        let mut model = NGramModel::empty(order, alpha, vocab)?;
        for s in seqs {
            model.add_sequence(&s.tokens);
        }
        Ok(model)
    }

    /// Incremental update; identical to having included the sequence at
    /// train time (counts are commutative).
    pub fn add_sequence(&mut self, tokens: &[u32]) {
        let ctx_len = self.order - 1;
        let padded = self.padded(tokens);
        for i in 0..tokens.len() {
            let window = &padded[i..i + ctx_len];
            if !self.counts.contains_key(window) {
                self.counts
                    .insert(window.to_vec().into_boxed_slice(), ContextCounts::default());
            }
            let cc = self.counts.get_mut(window).expect("just inserted");
            cc.total += 1;
            *cc.tokens.entry(tokens[i]).or_insert(0) += 1;
        }
        self.trained_tokens += tokens.len() as u64;
    }

    fn padded(&self, tokens: &[u32]) -> Vec<u32> {
        let ctx_len = self.order - 1;
        let mut v = Vec::with_capacity(ctx_len + tokens.len());
        v.extend(std::iter::repeat(self.vocab.bos).take(ctx_len));
        v.extend_from_slice(tokens);
        v
    }

    /// P(token | window) for an exact-length context window.
    fn window_prob(&self, window: &[u32], token: u32) -> f64 {
        let v = f64::from(self.vocab.size);
        match self.counts.get(window) {
            None => (self.alpha) / (self.alpha * v),
            Some(cc) => {
                let c = cc.tokens.get(&token).copied().unwrap_or(0) as f64;
                (c + self.alpha) / (cc.total as f64 + self.alpha * v)
            }
        }
    }

    /// P(token | prefix): takes the last `k-1` tokens of `prefix`,
    /// left-padding with BOS when the prefix is shorter.
    pub fn prob(&self, prefix: &[u32], token: u32) -> f64 {
        let ctx_len = self.order - 1;
        let mut window = Vec::with_capacity(ctx_len);
        let have = prefix.len().min(ctx_len);
        window.extend(std::iter::repeat(self.vocab.bos).take(ctx_len - have));
        window.extend_from_slice(&prefix[prefix.len() - have..]);
        self.window_prob(&window, token)
    }

    /// Exact sequence log-likelihood: sum over every position of
    /// `ln P(token | context)`. Strictly negative for V >= 2.
    pub fn log_prob(&self, tokens: &[u32]) -> Result<f64> {
        if tokens.is_empty() {
            return Err(Error::EmptySequence);
        }
        let ctx_len = self.order - 1;
        let padded = self.padded(tokens);
        let mut total = 0.0;
        for (i, &t) in tokens.iter().enumerate() {
            total += self.window_prob(&padded[i..i + ctx_len], t).ln();
        }
        Ok(total)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab(&self) -> Vocab {
        self.vocab
    }

    pub fn trained_tokens(&self) -> u64 {
        self.trained_tokens
    }

    pub fn num_contexts(&self) -> usize {
        self.counts.len()
    }

    /// Contexts in canonical (sorted) order; test and serialization hook.
    fn sorted_contexts(&self) -> Vec<&[u32]> {
        let mut keys: Vec<&[u32]> = self.counts.keys().map(|k| k.as_ref()).collect();
        keys.sort_unstable();
        keys
    }

    fn write_block<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "ngram")?;
        writeln!(w, "order {}", self.order)?;
        writeln!(w, "alpha {}", self.alpha)?;
        writeln!(w, "vocab {}", self.vocab.size)?;
        writeln!(w, "bos {}", self.vocab.bos)?;
        writeln!(w, "trained_tokens {}", self.trained_tokens)?;
        let entries: usize = self.counts.values().map(|cc| cc.tokens.len()).sum();
        writeln!(w, "entries {entries}")?;
        for ctx in self.sorted_contexts() {
            let cc = &self.counts[ctx];
            let mut toks: Vec<(&u32, &u64)> = cc.tokens.iter().collect();
            toks.sort_unstable();
            for (tok, count) in toks {
                for c in ctx {
                    write!(w, "{c} ")?;
                }
                writeln!(w, "{tok} {count}")?;
            }
        }
        writeln!(w, "end")
    }
}

/// Weighted mixture of component models; per-token probability is the
/// weighted sum of component probabilities, so normalization is inherited.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedModel {
    components: Vec<NGramModel>,
    weights: Vec<f64>,
}

impl InterpolatedModel {
    pub fn new(parts: Vec<(NGramModel, f64)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParam("interpolation needs components".into()));
        }
        let sum: f64 = parts.iter().map(|(_, w)| w).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParam(format!(
                "interpolation weights must sum to 1, got {sum}"
            )));
        }
        for (_, w) in &parts {
            if !(*w > 0.0 && *w <= 1.0) {
                return Err(Error::InvalidParam(format!(
                    "interpolation weight {w} outside (0, 1]"
                )));
            }
        }
        let v0 = parts[0].0.vocab;
        for (m, _) in &parts {
            if m.vocab != v0 {
                return Err(Error::VocabMismatch {
                    cond: m.vocab.size,
                    marg: v0.size,
                });
            }
        }
        let (components, weights) = parts.into_iter().unzip();
        Ok(InterpolatedModel {
            components,
            weights,
        })
    }

    pub fn prob(&self, prefix: &[u32], token: u32) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * m.prob(prefix, token))
            .sum()
    }

    pub fn log_prob(&self, tokens: &[u32]) -> Result<f64> {
        if tokens.is_empty() {
            return Err(Error::EmptySequence);
        }
        let paddeds: Vec<Vec<u32>> = self.components.iter().map(|m| m.padded(tokens)).collect();
        let mut total = 0.0;
        for (i, &t) in tokens.iter().enumerate() {
            let p: f64 = self
                .components
                .iter()
                .zip(&self.weights)
                .zip(&paddeds)
                .map(|((m, w), padded)| {
                    let ctx_len = m.order - 1;
                    w * m.window_prob(&padded[i..i + ctx_len], t)
                })
                .sum();
            total += p.ln();
        }
        Ok(total)
    }

    pub fn vocab(&self) -> Vocab {
        self.components[0].vocab
    }

    pub fn components(&self) -> &[NGramModel] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Analytic uniform model: every token has probability 1/V. Stands in for a
/// freshly initialized model and for the `--marg uniform` scoring mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformModel {
    pub vocab: Vocab,
}

impl UniformModel {
    pub fn log_prob(&self, tokens: &[u32]) -> Result<f64> {
        if tokens.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(-(tokens.len() as f64) * f64::from(self.vocab.size).ln())
    }

    pub fn prob(&self) -> f64 {
        1.0 / f64::from(self.vocab.size)
    }
}

/// Any scoreable model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    NGram(NGramModel),
    Interpolated(InterpolatedModel),
    Uniform(UniformModel),
}

impl Model {
    pub fn log_prob(&self, tokens: &[u32]) -> Result<f64> {
        match self {
            Model::NGram(m) => m.log_prob(tokens),
            Model::Interpolated(m) => m.log_prob(tokens),
            Model::Uniform(m) => m.log_prob(tokens),
        }
    }

    pub fn prob(&self, prefix: &[u32], token: u32) -> f64 {
        match self {
            Model::NGram(m) => m.prob(prefix, token),
            Model::Interpolated(m) => m.prob(prefix, token),
            Model::Uniform(m) => m.prob(),
        }
    }

    pub fn vocab(&self) -> Vocab {
        match self {
            Model::NGram(m) => m.vocab(),
            Model::Interpolated(m) => m.vocab(),
            Model::Uniform(m) => m.vocab,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::NGram(_) => "ngram",
            Model::Interpolated(_) => "interpolated",
            Model::Uniform(_) => "uniform",
        }
    }
}

/// How the conditional model is built from the prior and downstream data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConditionalMode {
    /// Mixture `(1-lambda) * prior + lambda * train(down)`. Guarantees a
    /// bounded, controllable shift: the adaptation analog used by default.
    Interpolate { lambda: f64 },
    /// Copy of the prior with the downstream counts added `weight` times.
    CountAdd { weight: u32 },
}

impl Default for ConditionalMode {
    fn default() -> Self {
        ConditionalMode::Interpolate { lambda: 0.5 }
    }
}

/// Builds the conditional model from a prior and a downstream corpus.
pub fn make_conditional(
    prior: &NGramModel,
    down: &[TokenSequence],
    mode: ConditionalMode,
) -> Result<Model> {
    if down.is_empty() {
        return Err(Error::EmptyCorpus("downstream corpus".into()));
    }
    match mode {
        ConditionalMode::Interpolate { lambda } => {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(Error::InvalidParam(format!(
                    "lambda must be in (0, 1], got {lambda}"
                )));
            }
            let down_model = NGramModel::train(down, prior.order, prior.alpha, prior.vocab)?;
            if lambda == 1.0 {
                return Ok(Model::NGram(down_model));
            }
            Ok(Model::Interpolated(InterpolatedModel::new(vec![
                (prior.clone(), 1.0 - lambda),
                (down_model, lambda),
            ])?))
        }
        ConditionalMode::CountAdd { weight } => {
            if weight == 0 {
                return Err(Error::InvalidParam("count-add weight must be >= 1".into()));
            }
            let mut model = prior.clone();
            for _ in 0..weight {
                for s in down {
                    model.add_sequence(&s.tokens);
                }
            }
            Ok(Model::NGram(model))
        }
    }
}

/// Writes a model in the canonical versioned text format. Equal models
/// produce byte-identical files.
pub fn save_model(path: impl AsRef<Path>, model: &Model, meta: &FileMeta) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{MODEL_MAGIC} {MODEL_VERSION}").map_err(io)?;
    meta.write_header(&mut w).map_err(io)?;
    match model {
        Model::NGram(m) => {
            writeln!(w, "model ngram").map_err(io)?;
            m.write_block(&mut w).map_err(io)?;
        }
        Model::Interpolated(m) => {
            writeln!(w, "model interpolated").map_err(io)?;
            writeln!(w, "components {}", m.components.len()).map_err(io)?;
            for (comp, weight) in m.components.iter().zip(&m.weights) {
                writeln!(w, "weight {weight}").map_err(io)?;
                comp.write_block(&mut w).map_err(io)?;
            }
        }
        Model::Uniform(m) => {
            writeln!(w, "model uniform").map_err(io)?;
            writeln!(w, "vocab {}", m.vocab.size).map_err(io)?;
            writeln!(w, "bos {}", m.vocab.bos).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

struct LineSource<R: BufRead> {
    reader: R,
    line_no: usize,
}

impl<R: BufRead> LineSource<R> {
    fn next_line(&mut self, path: &Path) -> Result<String> {
        let mut line = String::new();
        let n = self
            .reader
            .read_line(&mut line)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::parse(path, self.line_no, "unexpected end of file"));
        }
        self.line_no += 1;
        Ok(line.trim_end_matches(['\n', '\r']).to_string())
    }

    fn expect_kv(&mut self, path: &Path, key: &str) -> Result<String> {
        let line = self.next_line(path)?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| {
                Error::parse(path, self.line_no, format!("expected {key:?}, got {line:?}"))
            })
    }
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| Error::parse(path, line, format!("bad number {s:?}")))
}

fn read_block<R: BufRead>(src: &mut LineSource<R>, path: &Path) -> Result<NGramModel> {
    let tag = src.next_line(path)?;
    if tag != "ngram" {
        return Err(Error::parse(path, src.line_no, format!("expected ngram block, got {tag:?}")));
    }
    let order: usize = parse_num(path, src.line_no, &src.expect_kv(path, "order")?)?;
    let alpha: f64 = parse_num(path, src.line_no, &src.expect_kv(path, "alpha")?)?;
    let vsize: u32 = parse_num(path, src.line_no, &src.expect_kv(path, "vocab")?)?;
    let bos: u32 = parse_num(path, src.line_no, &src.expect_kv(path, "bos")?)?;
    let trained: u64 = parse_num(path, src.line_no, &src.expect_kv(path, "trained_tokens")?)?;
    let entries: usize = parse_num(path, src.line_no, &src.expect_kv(path, "entries")?)?;
    let mut model = NGramModel::empty(order, alpha, Vocab { size: vsize, bos })?;
    model.trained_tokens = trained;
    for _ in 0..entries {
        let line = src.next_line(path)?;
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != order + 1 {
            return Err(Error::parse(
                path,
                src.line_no,
                format!("count line has {} fields, expected {}", fields.len(), order + 1),
            ));
        }
        let ctx: Vec<u32> = fields[..order - 1]
            .iter()
            .map(|f| parse_num(path, src.line_no, f))
            .collect::<Result<_>>()?;
        let token: u32 = parse_num(path, src.line_no, fields[order - 1])?;
        let count: u64 = parse_num(path, src.line_no, fields[order])?;
        let cc = model
            .counts
            .entry(ctx.into_boxed_slice())
            .or_insert_with(ContextCounts::default);
        cc.total += count;
        *cc.tokens.entry(token).or_insert(0) += count;
    }
    let end = src.next_line(path)?;
    if end != "end" {
        return Err(Error::parse(path, src.line_no, format!("expected end, got {end:?}")));
    }
    Ok(model)
}

/// Loads a model saved by [`save_model`]. Round-trip preserves log_prob
/// bit for bit.
pub fn load_model(path: impl AsRef<Path>) -> Result<(Model, FileMeta)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let mut magic = String::new();
    reader
        .read_line(&mut magic)
        .map_err(|e| Error::io(path, e))?;
    let magic = magic.trim_end();
    if magic != format!("{MODEL_MAGIC} {MODEL_VERSION}") {
        return Err(Error::FormatVersion {
            path: path.to_path_buf(),
            found: magic.to_string(),
        });
    }
    let (meta, first, header_lines) = read_header(&mut reader, path)?;
    let mut src = LineSource {
        reader,
        line_no: header_lines,
    };
    let kind_line =
        first.ok_or_else(|| Error::parse(path, header_lines, "missing model kind"))?;
    let kind = kind_line
        .strip_prefix("model ")
        .ok_or_else(|| Error::parse(path, header_lines, format!("bad kind line {kind_line:?}")))?;
    let model = match kind {
        "ngram" => Model::NGram(read_block(&mut src, path)?),
        "interpolated" => {
            let ncomp: usize = parse_num(path, src.line_no, &src.expect_kv(path, "components")?)?;
            let mut parts = Vec::with_capacity(ncomp);
            for _ in 0..ncomp {
                let weight: f64 = parse_num(path, src.line_no, &src.expect_kv(path, "weight")?)?;
                parts.push((read_block(&mut src, path)?, weight));
            }
            Model::Interpolated(InterpolatedModel::new(parts)?)
        }
        "uniform" => {
            let vsize: u32 = parse_num(path, src.line_no, &src.expect_kv(path, "vocab")?)?;
            let bos: u32 = parse_num(path, src.line_no, &src.expect_kv(path, "bos")?)?;
            Model::Uniform(UniformModel {
                vocab: Vocab { size: vsize, bos },
            })
        }
        other => {
            return Err(Error::parse(path, src.line_no, format!("unknown model kind {other:?}")))
        }
    };
    Ok((model, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn seq(tokens: &[u32]) -> TokenSequence {
        TokenSequence {
            seq_id: "t:00000".into(),
            tokens: tokens.to_vec(),
            source_domain: None,
        }
    }

    // Oracle: manual count enumeration for tokens [a,b,a,b], V=2, k=2, alpha=1.
    // Windows (BOS-padded): (BOS->a), (a->b), (b->a), (a->b).
    // P(b|a) = (2+1)/(2+2) = 0.75; P(a|BOS) = (1+1)/(1+2) = 2/3.
    #[test]
    fn bigram_counts_match_hand_enumeration() {
        let vocab = Vocab::toy(2);
        let m = NGramModel::train(&[seq(&[0, 1, 0, 1])], 2, 1.0, vocab).unwrap();
        assert_relative_eq!(m.prob(&[0], 1), 0.75);
        assert_relative_eq!(m.prob(&[], 0), 2.0 / 3.0);
        // log_prob of [a, b]: ln P(a|BOS) + ln P(b|a)
        let lp = m.log_prob(&[0, 1]).unwrap();
        assert_relative_eq!(lp, (2.0_f64 / 3.0).ln() + 0.75_f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn zero_count_model_is_uniform() {
        let m = NGramModel::empty(3, 0.1, Vocab::toy(5)).unwrap();
        for t in 0..5 {
            assert_relative_eq!(m.prob(&[1, 2], t), 0.2, epsilon = 1e-15);
        }
        let lp = m.log_prob(&[0, 1, 2, 3]).unwrap();
        assert_relative_eq!(lp, 4.0 * (1.0_f64 / 5.0).ln(), epsilon = 1e-12);
    }

    #[test]
    fn training_twice_doubles_counts() {
        let vocab = Vocab::toy(3);
        let data = [seq(&[0, 1, 2, 1]), seq(&[2, 2, 0, 1])];
        let once = NGramModel::train(&data, 2, 0.5, vocab).unwrap();
        let mut twice = once.clone();
        for s in &data {
            twice.add_sequence(&s.tokens);
        }
        let doubled: Vec<TokenSequence> = data.iter().chain(data.iter()).cloned().collect();
        let direct = NGramModel::train(&doubled, 2, 0.5, vocab).unwrap();
        assert_eq!(twice, direct);
    }

    #[test]
    fn incremental_updates_reproduce_batch_training() {
        let vocab = Vocab::toy(4);
        let seqs: Vec<TokenSequence> = (0..20)
            .map(|i| seq(&[(i % 4) as u32, ((i + 1) % 4) as u32, ((i * 7) % 4) as u32]))
            .collect();
        let batch = NGramModel::train(&seqs, 3, 0.1, vocab).unwrap();
        let mut online = NGramModel::empty(3, 0.1, vocab).unwrap();
        for s in &seqs {
            online.add_sequence(&s.tokens);
        }
        assert_eq!(batch, online);
        // Exact equality of likelihoods, not just counts.
        let probe = [0, 1, 2, 3, 0, 2];
        assert_eq!(
            batch.log_prob(&probe).unwrap().to_bits(),
            online.log_prob(&probe).unwrap().to_bits()
        );
    }

    #[test]
    fn add_counts_of_empty_sequence_is_noop() {
        let vocab = Vocab::toy(3);
        let mut m = NGramModel::train(&[seq(&[0, 1, 2])], 2, 1.0, vocab).unwrap();
        let before = m.clone();
        m.add_sequence(&[]);
        assert_eq!(m, before);
    }

    #[test]
    fn order_permutation_leaves_log_prob_unchanged() {
        let vocab = Vocab::toy(3);
        let a = [seq(&[0, 1, 2]), seq(&[2, 1, 0]), seq(&[1, 1, 1])];
        let mut b = a.clone();
        b.reverse();
        let ma = NGramModel::train(&a, 2, 0.3, vocab).unwrap();
        let mb = NGramModel::train(&b, 2, 0.3, vocab).unwrap();
        let probe = [0, 1, 1, 2, 0];
        assert_eq!(
            ma.log_prob(&probe).unwrap().to_bits(),
            mb.log_prob(&probe).unwrap().to_bits()
        );
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let m = NGramModel::empty(2, 0.1, Vocab::toy(2)).unwrap();
        assert!(matches!(m.log_prob(&[]), Err(Error::EmptySequence)));
    }

    #[test]
    fn log_prob_strictly_negative() {
        let vocab = Vocab::toy(2);
        // All mass on one continuation; probability still < 1 due to smoothing.
        let m = NGramModel::train(&[seq(&[0, 0, 0, 0, 0, 0])], 2, 0.01, vocab).unwrap();
        assert!(m.log_prob(&[0, 0, 0]).unwrap() < 0.0);
    }

    #[test]
    fn normalization_over_random_contexts() {
        let vocab = Vocab::toy(7);
        let seqs: Vec<TokenSequence> = (0..50)
            .map(|i| seq(&[(i % 7) as u32, ((i * 3) % 7) as u32, ((i * 5 + 1) % 7) as u32]))
            .collect();
        let m = NGramModel::train(&seqs, 3, 0.1, vocab).unwrap();
        for c1 in 0..8u32 {
            for c2 in 0..8u32 {
                let ctx = [c1, c2];
                let sum: f64 = (0..7).map(|t| m.prob(&ctx, t)).sum();
                assert!((sum - 1.0).abs() < 1e-9, "context {ctx:?} sums to {sum}");
            }
        }
    }

    #[test]
    fn increasing_alpha_moves_probabilities_toward_uniform() {
        let vocab = Vocab::toy(4);
        let m1 = NGramModel::train(&[seq(&[0, 0, 1, 0, 2])], 2, 0.1, vocab).unwrap();
        let m2 = NGramModel::train(&[seq(&[0, 0, 1, 0, 2])], 2, 1.0, vocab).unwrap();
        let uniform = 0.25;
        for t in 0..4 {
            let d1 = (m1.prob(&[0], t) - uniform).abs();
            let d2 = (m2.prob(&[0], t) - uniform).abs();
            assert!(d2 <= d1 + 1e-15, "token {t}: {d2} > {d1}");
        }
    }

    #[test]
    fn interpolation_lambda_limits() {
        let vocab = Vocab::toy(3);
        let prior_data: Vec<TokenSequence> = (0..10).map(|_| seq(&[0, 1, 0, 1])).collect();
        let down_data = vec![seq(&[2, 2, 2, 2])];
        let prior = NGramModel::train(&prior_data, 2, 0.1, vocab).unwrap();
        let probe = [0, 1, 2];

        // lambda -> 0 approaches the prior.
        let near_zero = make_conditional(
            &prior,
            &down_data,
            ConditionalMode::Interpolate { lambda: 1e-12 },
        )
        .unwrap();
        assert_relative_eq!(
            near_zero.log_prob(&probe).unwrap(),
            prior.log_prob(&probe).unwrap(),
            epsilon = 1e-9
        );

        // lambda = 1 equals a model trained on the downstream data alone.
        let full = make_conditional(
            &prior,
            &down_data,
            ConditionalMode::Interpolate { lambda: 1.0 },
        )
        .unwrap();
        let down_only = NGramModel::train(&down_data, 2, 0.1, vocab).unwrap();
        assert_eq!(
            full.log_prob(&probe).unwrap().to_bits(),
            down_only.log_prob(&probe).unwrap().to_bits()
        );
    }

    // Oracle: per-token mixture lower bound. With lambda = 0.5 the mixture
    // assigns at least half the prior probability to every token, so
    // log_prob(cond, x) >= log_prob(prior, x) + len * ln(0.5).
    #[test]
    fn interpolation_respects_mixture_lower_bound() {
        let vocab = Vocab::toy(5);
        let prior_data: Vec<TokenSequence> = (0..30)
            .map(|i| seq(&[(i % 5) as u32, ((i * 2) % 5) as u32, ((i + 3) % 5) as u32, (i % 5) as u32]))
            .collect();
        let down_data: Vec<TokenSequence> = (0..5).map(|_| seq(&[4, 4, 4, 4])).collect();
        let prior = NGramModel::train(&prior_data, 2, 0.2, vocab).unwrap();
        let cond = make_conditional(
            &prior,
            &down_data,
            ConditionalMode::Interpolate { lambda: 0.5 },
        )
        .unwrap();
        for i in 0..20u32 {
            let probe = [i % 5, (i * 3) % 5, (i * 7 + 1) % 5, (i + 2) % 5];
            let lhs = cond.log_prob(&probe).unwrap();
            let rhs = prior.log_prob(&probe).unwrap() + probe.len() as f64 * 0.5_f64.ln();
            assert!(lhs >= rhs - 1e-12, "mixture bound violated: {lhs} < {rhs}");
        }
    }

    #[test]
    fn count_add_mode_matches_explicit_addition() {
        let vocab = Vocab::toy(3);
        let prior = NGramModel::train(&[seq(&[0, 1, 2, 0])], 2, 0.5, vocab).unwrap();
        let down = vec![seq(&[2, 2, 1])];
        let cond = make_conditional(&prior, &down, ConditionalMode::CountAdd { weight: 3 })
            .unwrap();
        let mut expect = prior.clone();
        for _ in 0..3 {
            expect.add_sequence(&down[0].tokens);
        }
        assert_eq!(cond, Model::NGram(expect));
    }

    #[test]
    fn conditional_rejects_empty_down_corpus() {
        let prior = NGramModel::empty(2, 0.1, Vocab::toy(2)).unwrap();
        assert!(matches!(
            make_conditional(&prior, &[], ConditionalMode::default()),
            Err(Error::EmptyCorpus(_))
        ));
    }

    #[test]
    fn uniform_model_log_prob() {
        let u = UniformModel {
            vocab: Vocab::byte_level(),
        };
        let lp = u.log_prob(&[1, 2, 3]).unwrap();
        assert_eq!(lp, -3.0 * 257.0_f64.ln());
        assert!(u.log_prob(&[]).is_err());
    }

    #[test]
    fn save_load_round_trip_preserves_log_prob_bits() {
        let vocab = Vocab::byte_level();
        let data: Vec<TokenSequence> = (0..20)
            .map(|i| {
                seq(&(0..32)
                    .map(|j| ((i * 31 + j * 7) % 257) as u32)
                    .collect::<Vec<_>>())
            })
            .collect();
        let prior = NGramModel::train(&data[..15], 3, 0.1, vocab).unwrap();
        let cond = make_conditional(
            &prior,
            &data[15..],
            ConditionalMode::Interpolate { lambda: 0.5 },
        )
        .unwrap();

        for model in [Model::NGram(prior), cond, Model::Uniform(UniformModel { vocab })] {
            let f = tempfile::NamedTempFile::new().unwrap();
            save_model(f.path(), &model, &FileMeta::adhoc(1)).unwrap();
            let (loaded, _) = load_model(f.path()).unwrap();
            for s in &data {
                assert_eq!(
                    model.log_prob(&s.tokens).unwrap().to_bits(),
                    loaded.log_prob(&s.tokens).unwrap().to_bits(),
                    "round trip changed log_prob for {}",
                    model.kind()
                );
            }
        }
    }

    #[test]
    fn equal_models_serialize_identically() {
        let vocab = Vocab::toy(4);
        let a = [seq(&[0, 1, 2, 3]), seq(&[3, 2, 1, 0]), seq(&[1, 3, 1, 3])];
        let mut b = a.clone();
        b.reverse();
        let ma = Model::NGram(NGramModel::train(&a, 2, 0.1, vocab).unwrap());
        let mb = Model::NGram(NGramModel::train(&b, 2, 0.1, vocab).unwrap());
        let fa = tempfile::NamedTempFile::new().unwrap();
        let fb = tempfile::NamedTempFile::new().unwrap();
        save_model(fa.path(), &ma, &FileMeta::adhoc(0)).unwrap();
        save_model(fb.path(), &mb, &FileMeta::adhoc(0)).unwrap();
        assert_eq!(
            std::fs::read(fa.path()).unwrap(),
            std::fs::read(fb.path()).unwrap()
        );
    }

    #[test]
    fn version_mismatch_rejected() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), "color-sieve-model v0\n").unwrap();
        assert!(matches!(
            load_model(f.path()),
            Err(Error::FormatVersion { .. })
        ));
    }

    #[test]
    fn corrupt_file_rejected() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(
            f.path(),
            "color-sieve-model v1\n# tool_version=0\n# config_hash=x\n# seed=0\nmodel ngram\nngram\norder 2\nalpha 0.1\nvocab 3\nbos 3\ntrained_tokens 4\nentries 2\n0 1 oops\n",
        )
        .unwrap();
        assert!(matches!(load_model(f.path()), Err(Error::Parse { .. })));
    }
}
