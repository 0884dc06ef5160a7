//! Selection algorithms over scored sequence pools.
//!
//! Global methods (color filter, conditional-only, importance resampling,
//! random) score a pool once and reduce deterministically; sequential
//! methods (rho-down and the fully-online variant) mutate a marginal model
//! between batches and are serial by construction.
//!
//! Determinism contract: `(method, seed, inputs)` fully determines the
//! result. Ties break by `(score, seq_id)` lexicographically. Candidate
//! streams are drawn without replacement across an entire run via a
//! seeded partial Fisher-Yates shuffle, so a prefix of the stream for one
//! subset size is always a subset of the stream for a larger one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};
use crate::meta::FileMeta;
use crate::ngram::{Model, NGramModel};
use crate::scorer::ScoreRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ColorFilter,
    ColorFilterBatchwise,
    ConditionalOnly,
    RhoDown,
    RhoDownPrior,
    Dsir,
    Random,
    OnlineColor,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ColorFilter => "color_filter",
            Method::ColorFilterBatchwise => "color_filter_batchwise",
            Method::ConditionalOnly => "conditional_only",
            Method::RhoDown => "rho_down",
            Method::RhoDownPrior => "rho_down_prior",
            Method::Dsir => "dsir",
            Method::Random => "random",
            Method::OnlineColor => "online_color",
        }
    }

    pub const ALL: [Method; 8] = [
        Method::ColorFilter,
        Method::ColorFilterBatchwise,
        Method::ConditionalOnly,
        Method::RhoDown,
        Method::RhoDownPrior,
        Method::Dsir,
        Method::Random,
        Method::OnlineColor,
    ];
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Declarative selection parameters, as found in a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub method: Method,
    /// Budget: number of sequences to select.
    pub n: usize,
    /// Subset size multiplier: candidates considered per selected sequence.
    pub tau: u32,
    /// Batch size for sequential / batchwise methods.
    pub b: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: Method,
    pub n: usize,
    pub tau: Option<u32>,
    pub b: Option<usize>,
    pub seed: Option<u64>,
    /// Selected seq_ids in selection order.
    pub selected: Vec<String>,
    /// Score used per selected sequence, aligned with `selected`; absent for
    /// methods that do not score (random).
    pub scores: Option<Vec<f64>>,
    /// Largest score among the selected records (the bottom-n cut value for
    /// global methods); absent when no score is involved.
    pub threshold: Option<f64>,
    pub meta: FileMeta,
}

impl SelectionResult {
    fn new(method: Method, n: usize) -> Self {
        SelectionResult {
            method,
            n,
            tau: None,
            b: None,
            seed: None,
            selected: Vec::new(),
            scores: None,
            threshold: None,
            meta: FileMeta::adhoc(0),
        }
    }

    pub fn with_meta(mut self, meta: FileMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Structural invariants: budget met exactly, no duplicates.
    pub fn validate(&self) -> Result<()> {
        if self.selected.len() != self.n {
            return Err(Error::InvalidParam(format!(
                "selection has {} sequences, budget is {}",
                self.selected.len(),
                self.n
            )));
        }
        let mut ids: Vec<&String> = self.selected.iter().collect();
        ids.sort_unstable();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateSeqId(pair[0].clone()));
            }
        }
        if let Some(scores) = &self.scores {
            if scores.len() != self.selected.len() {
                return Err(Error::InvalidParam(
                    "scores not aligned with selection".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("serialize selection: {e}")))?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let result: SelectionResult = serde_json::from_str(&raw)
            .map_err(|e| Error::parse(path, 0, format!("bad selection file: {e}")))?;
        result.validate()?;
        Ok(result)
    }
}

/// Uniform sample of `size` indices without replacement, deterministic given
/// the seed. The returned order is the stream order used by sequential
/// methods; prefixes are nested across `size` for a fixed seed.
pub fn sample_subset(total: usize, size: usize, seed: u64) -> Result<Vec<usize>> {
    if size > total {
        return Err(Error::PoolExceedsCorpus {
            requested: size,
            available: total,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..total).collect();
    for i in 0..size {
        let j = rng.random_range(i..total);
        idx.swap(i, j);
    }
    idx.truncate(size);
    Ok(idx)
}

/// Max-heap entry ordered by (key, id); the heap keeps the k smallest.
struct HeapEntry<'a> {
    key: f64,
    id: &'a str,
    pos: usize,
}

impl PartialEq for HeapEntry<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry<'_> {}
impl PartialOrd for HeapEntry<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| self.id.cmp(other.id))
    }
}

/// Positions of the `k` smallest entries by `(key, id)`, in ascending
/// key order. Bounded-heap streaming pass; ties cannot occur because ids
/// are unique, so the result is independent of input order.
fn bottom_k_positions(keys: &[f64], ids: &[&str], k: usize) -> Vec<usize> {
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
    for (pos, (&key, &id)) in keys.iter().zip(ids).enumerate() {
        heap.push(HeapEntry { key, id, pos });
        if heap.len() > k {
            heap.pop();
        }
    }
    let mut entries = heap.into_vec();
    entries.sort_by(|a, b| a.cmp(b));
    entries.into_iter().map(|e| e.pos).collect()
}

fn bottom_n_records(
    records: &[ScoreRecord],
    n: usize,
    key: impl Fn(&ScoreRecord) -> f64,
    method: Method,
) -> Result<SelectionResult> {
    if n == 0 {
        return Err(Error::InvalidParam("budget must be >= 1".into()));
    }
    if records.len() < n {
        return Err(Error::BudgetExceedsPool {
            n,
            pool: records.len(),
        });
    }
    let keys: Vec<f64> = records.iter().map(&key).collect();
    for (r, k) in records.iter().zip(&keys) {
        if !k.is_finite() {
            return Err(Error::InvalidParam(format!(
                "non-finite score for {}",
                r.seq_id
            )));
        }
    }
    let ids: Vec<&str> = records.iter().map(|r| r.seq_id.as_str()).collect();
    let picked = bottom_k_positions(&keys, &ids, n);
    let mut result = SelectionResult::new(method, n);
    result.selected = picked.iter().map(|&p| records[p].seq_id.clone()).collect();
    let scores: Vec<f64> = picked.iter().map(|&p| keys[p]).collect();
    result.threshold = scores.last().copied();
    result.scores = Some(scores);
    Ok(result)
}

/// Global color filter: the `n` records with the smallest color. Selection
/// order is ascending (color, seq_id).
pub fn select_color_filter(records: &[ScoreRecord], n: usize) -> Result<SelectionResult> {
    bottom_n_records(records, n, |r| r.color, Method::ColorFilter)
}

/// Ablation: bottom-n by conditional loss alone (marginal term zeroed).
pub fn select_conditional_only(records: &[ScoreRecord], n: usize) -> Result<SelectionResult> {
    bottom_n_records(records, n, |r| r.nll_cond, Method::ConditionalOnly)
}

/// Seeded uniform selection without replacement, in stream order.
pub fn select_random(seqs: &[TokenSequence], n: usize, seed: u64) -> Result<SelectionResult> {
    if n == 0 {
        return Err(Error::InvalidParam("budget must be >= 1".into()));
    }
    let picked = sample_subset(seqs.len(), n, seed)?;
    let mut result = SelectionResult::new(Method::Random, n);
    result.seed = Some(seed);
    result.selected = picked.iter().map(|&i| seqs[i].seq_id.clone()).collect();
    Ok(result)
}

/// Parameters shared by the batch-loop methods.
#[derive(Debug, Clone, Copy)]
pub struct BatchParams {
    pub n: usize,
    pub tau: u32,
    pub b: usize,
    pub seed: u64,
}

impl BatchParams {
    fn validate(&self, corpus_size: usize) -> Result<()> {
        if self.n == 0 || self.b == 0 {
            return Err(Error::InvalidParam("n and b must be >= 1".into()));
        }
        if self.tau == 0 {
            return Err(Error::InvalidParam("tau must be >= 1".into()));
        }
        let need = self.n * self.tau as usize;
        if need > corpus_size {
            return Err(Error::CorpusExhausted {
                selected: 0,
                n: self.n,
            });
        }
        Ok(())
    }
}

/// One round of a batch loop: pick bottom-`quota` of the batch by
/// `(score, seq_id)`, then emit the chosen members in stream order.
fn pick_batch<'a>(
    batch: &[&'a TokenSequence],
    scores: &[f64],
    quota: usize,
) -> Vec<(usize, &'a TokenSequence, f64)> {
    let ids: Vec<&str> = batch.iter().map(|s| s.seq_id.as_str()).collect();
    let mut chosen = bottom_k_positions(scores, &ids, quota);
    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|pos| (pos, batch[pos], scores[pos]))
        .collect()
}

fn batch_loop<S>(
    seqs: &[TokenSequence],
    params: &BatchParams,
    method: Method,
    state: &mut S,
    score_batch: impl Fn(&mut S, &[&TokenSequence]) -> Result<Vec<f64>>,
    on_selected: impl Fn(&mut S, &[(usize, &TokenSequence, f64)], &[f64]),
) -> Result<SelectionResult> {
    params.validate(seqs.len())?;
    let stream = sample_subset(seqs.len(), params.n * params.tau as usize, params.seed)?;
    let mut result = SelectionResult::new(method, params.n);
    result.tau = Some(params.tau);
    result.b = Some(params.b);
    result.seed = Some(params.seed);
    let mut selected_ids = Vec::with_capacity(params.n);
    let mut selected_scores = Vec::with_capacity(params.n);
    let mut threshold = f64::NEG_INFINITY;
    let mut consumed = 0usize;
    while selected_ids.len() < params.n {
        // Final batch shrinks when b does not divide n.
        let quota = params.b.min(params.n - selected_ids.len());
        let want = quota * params.tau as usize;
        if consumed + want > stream.len() {
            return Err(Error::CorpusExhausted {
                selected: selected_ids.len(),
                n: params.n,
            });
        }
        let batch: Vec<&TokenSequence> = stream[consumed..consumed + want]
            .iter()
            .map(|&i| &seqs[i])
            .collect();
        consumed += want;
        let scores = score_batch(state, &batch)?;
        let chosen = pick_batch(&batch, &scores, quota);
        on_selected(state, &chosen, &scores);
        for (_, seq, score) in &chosen {
            selected_ids.push(seq.seq_id.clone());
            selected_scores.push(*score);
            threshold = threshold.max(*score);
        }
    }
    result.selected = selected_ids;
    result.scores = Some(selected_scores);
    result.threshold = Some(threshold);
    Ok(result)
}

/// Sequential selection against a fixed conditional model and an online
/// marginal model that trains on each selected batch. Serial by
/// construction. Returns the final marginal alongside the selection.
///
/// `method` distinguishes the plain variant (conditional trained on the
/// downstream corpus alone) from the prior-augmented one (conditional is
/// the prior adapted toward the downstream corpus); the loop is identical.
pub fn select_rho_down(
    cond: &Model,
    marg_init: NGramModel,
    seqs: &[TokenSequence],
    params: &BatchParams,
    method: Method,
) -> Result<(SelectionResult, NGramModel)> {
    if !matches!(method, Method::RhoDown | Method::RhoDownPrior) {
        return Err(Error::UnknownMethod(format!(
            "{method} is not a rho-down variant"
        )));
    }
    let mut marginal = marg_init;
    let result = batch_loop(
        seqs,
        params,
        method,
        &mut marginal,
        |marginal, batch| {
            batch
                .iter()
                .map(|s| {
                    let nll_cond = -cond.log_prob(&s.tokens)?;
                    let nll_marg = -marginal.log_prob(&s.tokens)?;
                    Ok(nll_cond - nll_marg)
                })
                .collect()
        },
        |marginal, chosen, _| {
            for (_, seq, _) in chosen {
                marginal.add_sequence(&seq.tokens);
            }
        },
    )?;
    Ok((result, marginal))
}

/// Batchwise color filter: the rho-down loop with a fixed marginal (no
/// online updates). With `b = n` it degenerates to the global filter on the
/// same candidate pool.
pub fn select_color_batchwise(
    cond: &Model,
    marg: &Model,
    seqs: &[TokenSequence],
    params: &BatchParams,
) -> Result<SelectionResult> {
    batch_loop(
        seqs,
        params,
        Method::ColorFilterBatchwise,
        &mut (),
        |_, batch| {
            batch
                .iter()
                .map(|s| {
                    let nll_cond = -cond.log_prob(&s.tokens)?;
                    let nll_marg = -marg.log_prob(&s.tokens)?;
                    Ok(nll_cond - nll_marg)
                })
                .collect()
        },
        |_, _, _| {},
    )
}

/// Per-round diagnostics of the fully-online variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDiag {
    pub round: usize,
    pub mean_batch_score: f64,
    pub mean_selected_score: f64,
}

/// Experimental fully-online variant: both the conditional and the marginal
/// condition on the data selected so far. One evolving count model serves as
/// the marginal; the conditional mixes it with a fixed downstream model, so
/// updating the shared counts updates both while the conditional retains its
/// downstream component. Emits per-round mean scores as an instability
/// diagnostic.
pub fn select_online_color(
    prior: &NGramModel,
    down: &[TokenSequence],
    seqs: &[TokenSequence],
    params: &BatchParams,
    lambda: f64,
) -> Result<(SelectionResult, Vec<RoundDiag>)> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParam(format!(
            "lambda must be in (0, 1), got {lambda}"
        )));
    }
    if down.is_empty() {
        return Err(Error::EmptyCorpus("downstream corpus".into()));
    }
    let down_model = NGramModel::train(down, prior.order(), prior.alpha(), prior.vocab())?;
    let mut state = (prior.clone(), Vec::<RoundDiag>::new());
    let result = batch_loop(
        seqs,
        params,
        Method::OnlineColor,
        &mut state,
        |(evolving, _), batch| {
            batch
                .iter()
                .map(|s| {
                    if s.tokens.is_empty() {
                        return Err(Error::EmptySequence);
                    }
                    let mut nll_cond = 0.0;
                    let mut nll_marg = 0.0;
                    for (i, &t) in s.tokens.iter().enumerate() {
                        let pm = evolving.prob(&s.tokens[..i], t);
                        let pd = down_model.prob(&s.tokens[..i], t);
                        nll_cond -= ((1.0 - lambda) * pm + lambda * pd).ln();
                        nll_marg -= pm.ln();
                    }
                    Ok(nll_cond - nll_marg)
                })
                .collect()
        },
        |(evolving, diags), chosen, scores| {
            let mean = |total: f64, count: usize| {
                if count == 0 {
                    0.0
                } else {
                    total / count as f64
                }
            };
            diags.push(RoundDiag {
                round: diags.len() + 1,
                mean_batch_score: mean(scores.iter().sum(), scores.len()),
                mean_selected_score: mean(
                    chosen.iter().map(|(_, _, s)| *s).sum(),
                    chosen.len(),
                ),
            });
            for (_, seq, _) in chosen {
                evolving.add_sequence(&seq.tokens);
            }
        },
    )?;
    Ok((result, state.1))
}

/// Importance resampling over hashed n-gram features.
#[derive(Debug, Clone, Copy)]
pub struct DsirParams {
    pub n: usize,
    pub seed: u64,
    /// Hash buckets for the feature space; must be >= 1024.
    pub buckets: usize,
    /// Test hook: disable the Gumbel noise to get the exact top-n by weight.
    pub noise: bool,
}

impl Default for DsirParams {
    fn default() -> Self {
        DsirParams {
            n: 0,
            seed: 0,
            buckets: 1 << 16,
            noise: true,
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(init: u64, bytes: &[u8]) -> u64 {
    let mut h = init;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn feature_bucket(gram: &[u32], buckets: usize) -> usize {
    let mut h = fnv1a(FNV_OFFSET, &[gram.len() as u8]);
    for &t in gram {
        h = fnv1a(h, &t.to_le_bytes());
    }
    (h % buckets as u64) as usize
}

/// Hashed unigram + bigram occurrence counts over the bucket space.
fn count_features(seqs: &[TokenSequence], buckets: usize) -> (Vec<u64>, u64) {
    let mut counts = vec![0u64; buckets];
    let mut total = 0u64;
    for s in seqs {
        for t in s.tokens.windows(1) {
            counts[feature_bucket(t, buckets)] += 1;
            total += 1;
        }
        for pair in s.tokens.windows(2) {
            counts[feature_bucket(pair, buckets)] += 1;
            total += 1;
        }
    }
    (counts, total)
}

fn gumbel(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return -(-u.ln()).ln();
        }
    }
}

/// Importance-resampling selection: fits two add-1-smoothed categorical
/// distributions over hashed unigram+bigram buckets, weighs each sequence by
/// its log importance ratio toward the downstream corpus, and samples
/// without replacement proportionally to exp(weight) via Gumbel top-k.
pub fn select_dsir(
    seqs: &[TokenSequence],
    down: &[TokenSequence],
    params: &DsirParams,
) -> Result<SelectionResult> {
    if params.buckets < 1 << 10 {
        return Err(Error::InvalidParam(format!(
            "bucket count must be >= 1024, got {}",
            params.buckets
        )));
    }
    if params.n == 0 {
        return Err(Error::InvalidParam("budget must be >= 1".into()));
    }
    if params.n > seqs.len() {
        return Err(Error::BudgetExceedsPool {
            n: params.n,
            pool: seqs.len(),
        });
    }
    if down.is_empty() {
        return Err(Error::EmptyCorpus("downstream corpus".into()));
    }
    let b = params.buckets;
    let (train_counts, train_total) = count_features(seqs, b);
    let (down_counts, down_total) = count_features(down, b);
    // Per-bucket log importance ratio with add-1 smoothing.
    let log_down_denom = ((down_total + b as u64) as f64).ln();
    let log_train_denom = ((train_total + b as u64) as f64).ln();
    let diff: Vec<f64> = (0..b)
        .map(|f| {
            let ld = ((down_counts[f] + 1) as f64).ln() - log_down_denom;
            let lt = ((train_counts[f] + 1) as f64).ln() - log_train_denom;
            ld - lt
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut keys = Vec::with_capacity(seqs.len());
    for s in seqs {
        let mut w = 0.0;
        for t in s.tokens.windows(1) {
            w += diff[feature_bucket(t, b)];
        }
        for pair in s.tokens.windows(2) {
            w += diff[feature_bucket(pair, b)];
        }
        let noisy = if params.noise { w + gumbel(&mut rng) } else { w };
        // Top-n by noisy weight == bottom-n by its negation.
        keys.push(-noisy);
    }
    let ids: Vec<&str> = seqs.iter().map(|s| s.seq_id.as_str()).collect();
    let picked = bottom_k_positions(&keys, &ids, params.n);
    let mut result = SelectionResult::new(Method::Dsir, params.n);
    result.seed = Some(params.seed);
    result.selected = picked.iter().map(|&p| seqs[p].seq_id.clone()).collect();
    result.scores = Some(picked.iter().map(|&p| -keys[p]).collect());
    Ok(result)
}

/// Runs a global selection method over pre-computed score records.
pub fn select_from_scores(
    method: Method,
    records: &[ScoreRecord],
    n: usize,
) -> Result<SelectionResult> {
    match method {
        Method::ColorFilter => select_color_filter(records, n),
        Method::ConditionalOnly => select_conditional_only(records, n),
        other => Err(Error::UnknownMethod(format!(
            "{other} does not select from a score file"
        ))),
    }
}
