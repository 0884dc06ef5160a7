//! Evaluation harness: train target models on selections and report
//! held-out cross-entropy, selection precision against ground-truth domain
//! labels, score-distribution summaries, subset-multiplier sweeps, and
//! learning curves.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{chunk_corpus, gen_synth, SynthSpec, TokenSequence, Vocab, DOMAIN_LABELS};
use crate::error::{Error, Result};
use crate::meta::FileMeta;
use crate::ngram::{make_conditional, ConditionalMode, Model, NGramModel};
use crate::scorer::{score_cdf, score_sequences, CdfReport, ScoreRecord};
use crate::seeds::substream;
use crate::selector::{
    sample_subset, select_color_batchwise, select_color_filter, select_conditional_only,
    select_dsir, select_online_color, select_random, select_rho_down, BatchParams, DsirParams,
    Method, SelectionResult,
};

/// Target domain of the synthetic benchmark (`down` is drawn from it).
pub const TARGET_DOMAIN: &str = DOMAIN_LABELS[1];

/// Trains the target model on the selected sequences only.
pub fn train_target(
    selection: &[TokenSequence],
    order: usize,
    alpha: f64,
    vocab: Vocab,
) -> Result<NGramModel> {
    if selection.is_empty() {
        return Err(Error::EmptyCorpus("selection".into()));
    }
    NGramModel::train(selection, order, alpha, vocab)
}

/// Mean negative log-likelihood per token (nats/token) over every position
/// of the evaluation corpus. Exact, no sampling.
pub fn held_out_ce(model: &Model, eval: &[TokenSequence]) -> Result<f64> {
    if eval.is_empty() {
        return Err(Error::EmptyCorpus("evaluation corpus".into()));
    }
    let mut total_nll = 0.0;
    let mut total_tokens = 0u64;
    for s in eval {
        total_nll -= model.log_prob(&s.tokens)?;
        total_tokens += s.tokens.len() as u64;
    }
    Ok(total_nll / total_tokens as f64)
}

/// Fraction of the selection whose ground-truth label matches the target
/// domain. Every selected id must be labeled.
pub fn selection_precision(
    selected: &[String],
    labels: &HashMap<String, String>,
    target: &str,
) -> Result<f64> {
    if selected.is_empty() {
        return Err(Error::EmptyCorpus("selection".into()));
    }
    let mut hits = 0usize;
    for id in selected {
        let label = labels
            .get(id)
            .ok_or_else(|| Error::MissingLabel(id.clone()))?;
        if label == target {
            hits += 1;
        }
    }
    Ok(hits as f64 / selected.len() as f64)
}

/// One evaluated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Method,
    pub tau: u32,
    pub n: usize,
    pub seed: u64,
    /// Held-out CE on the target-domain evaluation set, nats/token.
    pub ce_eval_down: f64,
    /// Held-out CE on the mixture evaluation set, nats/token.
    pub ce_eval_train: f64,
    pub precision: f64,
    /// Mean color over the scored candidate pool, when the method scores.
    pub mean_color: Option<f64>,
    pub frac_color_below_zero: Option<f64>,
    /// Bottom-n cut value of the selection, when the method scores.
    pub cutoff: Option<f64>,
    pub tokens_trained: u64,
}

/// Everything needed to run the synthetic two-domain benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub spec: SynthSpec,
    pub context_length: usize,
    pub k_aux: usize,
    pub k_target: usize,
    pub alpha: f64,
    pub conditional: ConditionalMode,
    pub n: usize,
    /// Batch size for sequential and batchwise methods.
    pub b: usize,
    pub seed: u64,
    pub workers: usize,
}

impl BenchmarkConfig {
    /// The default benchmark: 16-symbol alphabet, 90/10 mixture, 20k
    /// candidate sequences of 128 tokens, budget 1000.
    pub fn default_benchmark(seed: u64) -> Self {
        BenchmarkConfig {
            spec: SynthSpec::default_benchmark(substream(seed, "synthesis")),
            context_length: 128,
            k_aux: 3,
            k_target: 5,
            alpha: 0.1,
            conditional: ConditionalMode::default(),
            n: 1000,
            b: 100,
            seed,
            workers: 4,
        }
    }

    /// Scaled-down variant for fast tests.
    pub fn small(seed: u64) -> Self {
        BenchmarkConfig {
            spec: SynthSpec::small(substream(seed, "synthesis")),
            context_length: 32,
            k_aux: 3,
            k_target: 4,
            alpha: 0.1,
            conditional: ConditionalMode::default(),
            n: 150,
            b: 25,
            seed,
            workers: 2,
        }
    }
}

/// Prepared benchmark state: corpora chunked, auxiliary models trained.
/// Reused across methods, subset multipliers, and run seeds so curves are
/// comparable.
pub struct Benchmark {
    pub cfg: BenchmarkConfig,
    pub train: Vec<TokenSequence>,
    pub down: Vec<TokenSequence>,
    pub eval_down: Vec<TokenSequence>,
    pub eval_train: Vec<TokenSequence>,
    /// seq_id -> ground-truth domain label for the candidate pool.
    pub labels: HashMap<String, String>,
    /// Marginal: trained on the prior corpus only.
    pub prior: NGramModel,
    /// Conditional: prior adapted toward the downstream corpus.
    pub cond: Model,
    /// Conditional trained on the downstream corpus alone (no prior).
    pub cond_down_only: Model,
}

impl Benchmark {
    pub fn prepare(cfg: BenchmarkConfig) -> Result<Self> {
        let corpora = gen_synth(&cfg.spec)?;
        let c = cfg.context_length;
        let train = chunk_corpus(&corpora.train, c)?;
        let prior_seqs = chunk_corpus(&corpora.prior, c)?;
        let down = chunk_corpus(&corpora.down, c)?;
        let eval_down = chunk_corpus(&corpora.eval_down, c)?;
        let eval_train = chunk_corpus(&corpora.eval_train, c)?;
        if train.is_empty() || down.is_empty() {
            return Err(Error::EmptyCorpus(
                "document length too short for the context length".into(),
            ));
        }
        let labels = train
            .iter()
            .filter_map(|s| {
                s.source_domain
                    .as_ref()
                    .map(|d| (s.seq_id.clone(), d.clone()))
            })
            .collect();
        let vocab = Vocab::byte_level();
        let prior = NGramModel::train(&prior_seqs, cfg.k_aux, cfg.alpha, vocab)?;
        let cond = make_conditional(&prior, &down, cfg.conditional)?;
        let cond_down_only =
            Model::NGram(NGramModel::train(&down, cfg.k_aux, cfg.alpha, vocab)?);
        Ok(Benchmark {
            cfg,
            train,
            down,
            eval_down,
            eval_train,
            labels,
            prior,
            cond,
            cond_down_only,
        })
    }

    fn seq_by_id(&self) -> HashMap<&str, &TokenSequence> {
        self.train.iter().map(|s| (s.seq_id.as_str(), s)).collect()
    }

    /// Materializes a selection back into sequences, in selection order.
    pub fn materialize(&self, selection: &SelectionResult) -> Result<Vec<TokenSequence>> {
        let by_id = self.seq_by_id();
        selection
            .selected
            .iter()
            .map(|id| {
                by_id
                    .get(id.as_str())
                    .map(|&s| s.clone())
                    .ok_or_else(|| Error::MissingLabel(id.clone()))
            })
            .collect()
    }

    /// Scores the candidate pool of size `tau * n` for a run seed. Records
    /// are returned in pool (stream) order, so a prefix of the pool for a
    /// smaller tau maps to a prefix of the records.
    pub fn score_pool(&self, tau: u32, run_seed: u64) -> Result<Vec<ScoreRecord>> {
        let pool_size = self.cfg.n * tau as usize;
        let pool = sample_subset(
            self.train.len(),
            pool_size,
            substream(run_seed, "subset-sampling"),
        )?;
        let pool_seqs: Vec<TokenSequence> =
            pool.iter().map(|&i| self.train[i].clone()).collect();
        let marg = Model::NGram(self.prior.clone());
        let sorted = score_sequences(&self.cond, &marg, &pool_seqs, self.cfg.workers)?;
        // Back to pool order for prefix nesting.
        let by_id: HashMap<&str, &ScoreRecord> =
            sorted.iter().map(|r| (r.seq_id.as_str(), r)).collect();
        Ok(pool_seqs
            .iter()
            .map(|s| (*by_id[s.seq_id.as_str()]).clone())
            .collect())
    }

    /// Runs one method at one subset multiplier and evaluates the result.
    pub fn run(&self, method: Method, tau: u32, run_seed: u64) -> Result<EvalReport> {
        let (selection, pool_records) = self.select(method, tau, run_seed)?;
        self.evaluate(&selection, tau, run_seed, pool_records.as_deref())
    }

    /// Produces the selection for a method; pool score records are returned
    /// for methods that score a pool up front.
    pub fn select(
        &self,
        method: Method,
        tau: u32,
        run_seed: u64,
    ) -> Result<(SelectionResult, Option<Vec<ScoreRecord>>)> {
        let cfg = &self.cfg;
        let stream_seed = substream(run_seed, "subset-sampling");
        let batch = BatchParams {
            n: cfg.n,
            tau,
            b: cfg.b,
            seed: stream_seed,
        };
        match method {
            Method::ColorFilter => {
                let records = self.score_pool(tau, run_seed)?;
                let mut sel = select_color_filter(&records, cfg.n)?;
                sel.tau = Some(tau);
                sel.seed = Some(run_seed);
                Ok((sel, Some(records)))
            }
            Method::ConditionalOnly => {
                let records = self.score_pool(tau, run_seed)?;
                let mut sel = select_conditional_only(&records, cfg.n)?;
                sel.tau = Some(tau);
                sel.seed = Some(run_seed);
                Ok((sel, Some(records)))
            }
            Method::Random => {
                let mut sel = select_random(&self.train, cfg.n, stream_seed)?;
                sel.tau = Some(tau);
                Ok((sel, None))
            }
            Method::RhoDown => {
                let marg = NGramModel::empty(cfg.k_aux, cfg.alpha, Vocab::byte_level())?;
                let (sel, _) = select_rho_down(
                    &self.cond_down_only,
                    marg,
                    &self.train,
                    &batch,
                    Method::RhoDown,
                )?;
                Ok((sel, None))
            }
            Method::RhoDownPrior => {
                let marg = NGramModel::empty(cfg.k_aux, cfg.alpha, Vocab::byte_level())?;
                let (sel, _) = select_rho_down(
                    &self.cond,
                    marg,
                    &self.train,
                    &batch,
                    Method::RhoDownPrior,
                )?;
                Ok((sel, None))
            }
            Method::ColorFilterBatchwise => {
                let marg = Model::NGram(self.prior.clone());
                let sel = select_color_batchwise(&self.cond, &marg, &self.train, &batch)?;
                Ok((sel, None))
            }
            Method::Dsir => {
                let params = DsirParams {
                    n: cfg.n,
                    seed: substream(run_seed, "dsir-gumbel"),
                    ..DsirParams::default()
                };
                let mut sel = select_dsir(&self.train, &self.down, &params)?;
                sel.tau = Some(tau);
                Ok((sel, None))
            }
            Method::OnlineColor => {
                let lambda = match cfg.conditional {
                    ConditionalMode::Interpolate { lambda } => lambda.min(0.999),
                    ConditionalMode::CountAdd { .. } => 0.5,
                };
                let (sel, _) =
                    select_online_color(&self.prior, &self.down, &self.train, &batch, lambda)?;
                Ok((sel, None))
            }
        }
    }

    fn evaluate(
        &self,
        selection: &SelectionResult,
        tau: u32,
        run_seed: u64,
        pool_records: Option<&[ScoreRecord]>,
    ) -> Result<EvalReport> {
        selection.validate()?;
        let selected_seqs = self.materialize(selection)?;
        let target = train_target(
            &selected_seqs,
            self.cfg.k_target,
            self.cfg.alpha,
            Vocab::byte_level(),
        )?;
        let target = Model::NGram(target);
        let cdf: Option<CdfReport> = match pool_records {
            Some(records) => Some(score_cdf(records, &[], None)?),
            None => None,
        };
        Ok(EvalReport {
            method: selection.method,
            tau,
            n: selection.n,
            seed: run_seed,
            ce_eval_down: held_out_ce(&target, &self.eval_down)?,
            ce_eval_train: held_out_ce(&target, &self.eval_train)?,
            precision: selection_precision(&selection.selected, &self.labels, TARGET_DOMAIN)?,
            mean_color: cdf.as_ref().map(|c| c.mean),
            frac_color_below_zero: cdf.as_ref().map(|c| c.frac_below_zero),
            cutoff: selection.threshold,
            tokens_trained: selected_seqs
                .iter()
                .map(|s| s.tokens.len() as u64)
                .sum(),
        })
    }

    /// Sweeps the subset multiplier with shared pools: the candidate pool
    /// for a smaller tau is a prefix of the pool for a larger one, and
    /// pool-scoring methods score the largest pool once.
    pub fn tau_sweep(&self, method: Method, taus: &[u32], run_seed: u64) -> Result<Vec<EvalReport>> {
        if taus.is_empty() {
            return Err(Error::InvalidParam("tau sweep needs at least one value".into()));
        }
        let mut reports = Vec::with_capacity(taus.len());
        match method {
            Method::ColorFilter | Method::ConditionalOnly => {
                let tau_max = *taus.iter().max().expect("non-empty");
                let records = self.score_pool(tau_max, run_seed)?;
                for &tau in taus {
                    let prefix = &records[..self.cfg.n * tau as usize];
                    let mut sel = match method {
                        Method::ColorFilter => select_color_filter(prefix, self.cfg.n)?,
                        _ => select_conditional_only(prefix, self.cfg.n)?,
                    };
                    sel.tau = Some(tau);
                    sel.seed = Some(run_seed);
                    reports.push(self.evaluate(&sel, tau, run_seed, Some(prefix))?);
                }
            }
            _ => {
                for &tau in taus {
                    reports.push(self.run(method, tau, run_seed)?);
                }
            }
        }
        Ok(reports)
    }
}

/// CE at increasing prefixes of the selection, in the given order. Returns
/// `(tokens_trained, nats/token)` at each checkpoint (counts of sequences).
pub fn learning_curve(
    selection: &[TokenSequence],
    eval: &[TokenSequence],
    checkpoints: &[usize],
    order: usize,
    alpha: f64,
    vocab: Vocab,
) -> Result<Vec<(u64, f64)>> {
    if selection.is_empty() {
        return Err(Error::EmptyCorpus("selection".into()));
    }
    let mut points: Vec<usize> = checkpoints
        .iter()
        .copied()
        .filter(|&c| c > 0 && c <= selection.len())
        .collect();
    points.sort_unstable();
    points.dedup();
    if points.is_empty() {
        return Err(Error::InvalidParam(
            "no checkpoint within the selection size".into(),
        ));
    }
    let mut model = NGramModel::empty(order, alpha, vocab)?;
    let mut curve = Vec::with_capacity(points.len());
    let mut consumed = 0usize;
    let mut tokens = 0u64;
    for &cp in &points {
        for s in &selection[consumed..cp] {
            model.add_sequence(&s.tokens);
            tokens += s.tokens.len() as u64;
        }
        consumed = cp;
        let ce = held_out_ce(&Model::NGram(model.clone()), eval)?;
        curve.push((tokens, ce));
    }
    Ok(curve)
}

/// Deterministically shuffled copy of a selection, for shuffled-order curves.
pub fn shuffled_selection(seqs: &[TokenSequence], seed: u64) -> Vec<TokenSequence> {
    let order = sample_subset(seqs.len(), seqs.len(), seed).expect("full permutation");
    order.into_iter().map(|i| seqs[i].clone()).collect()
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "-".to_string(),
    }
}

/// One row per run; plot-ready TSV.
pub fn write_results_tsv(
    path: impl AsRef<Path>,
    reports: &[EvalReport],
    meta: &FileMeta,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    meta.write_header(&mut w).map_err(io_err(path))?;
    writeln!(
        w,
        "method\ttau\tn\tseed\tce_eval_down\tce_eval_train\tprecision\tmean_color\tfrac_color_below_zero\tcutoff\ttokens_trained"
    )
    .map_err(io_err(path))?;
    for r in reports {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}",
            r.method,
            r.tau,
            r.n,
            r.seed,
            r.ce_eval_down,
            r.ce_eval_train,
            r.precision,
            fmt_opt(r.mean_color),
            fmt_opt(r.frac_color_below_zero),
            fmt_opt(r.cutoff),
            r.tokens_trained,
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_curve_tsv(
    path: impl AsRef<Path>,
    curve: &[(u64, f64)],
    meta: &FileMeta,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    meta.write_header(&mut w).map_err(io_err(path))?;
    writeln!(w, "tokens_trained\tce").map_err(io_err(path))?;
    for (tokens, ce) in curve {
        writeln!(w, "{tokens}\t{ce:.6}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_cdf_tsv(path: impl AsRef<Path>, cdf: &CdfReport, meta: &FileMeta) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    meta.write_header(&mut w).map_err(io_err(path))?;
    writeln!(w, "# count={}", cdf.count).map_err(io_err(path))?;
    writeln!(w, "# mean={:.9}", cdf.mean).map_err(io_err(path))?;
    writeln!(w, "# frac_below_zero={:.9}", cdf.frac_below_zero).map_err(io_err(path))?;
    if let Some(cut) = cdf.cutoff {
        writeln!(w, "# cutoff={cut:.9}").map_err(io_err(path))?;
    }
    writeln!(w, "quantile\tcolor").map_err(io_err(path))?;
    for (q, v) in &cdf.quantiles {
        writeln!(w, "{q:.4}\t{v:.9}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::UniformModel;
    use approx::assert_relative_eq;

    fn seq(id: &str, tokens: &[u32]) -> TokenSequence {
        TokenSequence {
            seq_id: id.into(),
            tokens: tokens.to_vec(),
            source_domain: None,
        }
    }

    #[test]
    fn uniform_model_ce_is_log_v() {
        let eval: Vec<TokenSequence> = (0..10)
            .map(|i| seq(&format!("e{i:03}:00000"), &[i % 7, (i + 1) % 7, (i + 2) % 7]))
            .collect();
        let model = Model::Uniform(UniformModel {
            vocab: Vocab::toy(7),
        });
        let ce = held_out_ce(&model, &eval).unwrap();
        assert_relative_eq!(ce, 7.0_f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn training_on_eval_data_beats_zero_count_model() {
        let vocab = Vocab::toy(5);
        let eval: Vec<TokenSequence> = (0..40)
            .map(|i| {
                seq(
                    &format!("e{i:03}:00000"),
                    &[(i % 5) as u32, ((i + 1) % 5) as u32, ((i * 2) % 5) as u32, (i % 5) as u32],
                )
            })
            .collect();
        let trained = Model::NGram(NGramModel::train(&eval, 2, 0.1, vocab).unwrap());
        let empty = Model::NGram(NGramModel::empty(2, 0.1, vocab).unwrap());
        assert!(
            held_out_ce(&trained, &eval).unwrap() < held_out_ce(&empty, &eval).unwrap()
        );
    }

    #[test]
    fn precision_counts_target_labels() {
        let labels: HashMap<String, String> = [
            ("a".to_string(), "domain-B".to_string()),
            ("b".to_string(), "domain-A".to_string()),
            ("c".to_string(), "domain-B".to_string()),
        ]
        .into();
        let selected = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let p = selection_precision(&selected, &labels, "domain-B").unwrap();
        assert_relative_eq!(p, 2.0 / 3.0);
        assert!(matches!(
            selection_precision(&["zz".to_string()], &labels, "domain-B"),
            Err(Error::MissingLabel(_))
        ));
    }

    #[test]
    fn all_target_selection_has_precision_one() {
        let labels: HashMap<String, String> =
            [("a".to_string(), "domain-B".to_string())].into();
        let p = selection_precision(&["a".to_string()], &labels, "domain-B").unwrap();
        assert_eq!(p, 1.0);
    }

    // Oracle: binomial confidence interval for random selection on a
    // 50/50 mixture.
    #[test]
    fn random_precision_matches_mixture_rate() {
        let mut cfg = BenchmarkConfig::small(404);
        cfg.spec.mixture = [0.5, 0.5];
        cfg.n = 200;
        let bench = Benchmark::prepare(cfg).unwrap();
        let (sel, _) = bench.select(Method::Random, 1, 404).unwrap();
        let p = selection_precision(&sel.selected, &bench.labels, TARGET_DOMAIN).unwrap();
        let sigma = (0.5 * 0.5 / 200.0_f64).sqrt();
        assert!(
            (p - 0.5).abs() <= 3.0 * sigma + 0.05,
            "precision {p} too far from 0.5"
        );
    }

    #[test]
    fn tau_one_filter_matches_its_pool_precision() {
        let cfg = BenchmarkConfig::small(7);
        let bench = Benchmark::prepare(cfg).unwrap();
        let (sel, records) = bench.select(Method::ColorFilter, 1, 7).unwrap();
        let records = records.unwrap();
        // Budget equals pool: everything is selected.
        let mut pool_ids: Vec<String> = records.iter().map(|r| r.seq_id.clone()).collect();
        pool_ids.sort();
        let mut sel_ids = sel.selected.clone();
        sel_ids.sort();
        assert_eq!(pool_ids, sel_ids);
        let pool_precision = pool_ids
            .iter()
            .filter(|id| bench.labels[*id] == TARGET_DOMAIN)
            .count() as f64
            / pool_ids.len() as f64;
        let p = selection_precision(&sel.selected, &bench.labels, TARGET_DOMAIN).unwrap();
        assert_relative_eq!(p, pool_precision);
    }

    #[test]
    fn filter_beats_random_on_target_domain() {
        let bench = Benchmark::prepare(BenchmarkConfig::small(21)).unwrap();
        let filter = bench.run(Method::ColorFilter, 4, 21).unwrap();
        let random = bench.run(Method::Random, 4, 21).unwrap();
        assert!(
            filter.precision > random.precision + 0.2,
            "filter precision {} vs random {}",
            filter.precision,
            random.precision
        );
        assert!(
            filter.ce_eval_down < random.ce_eval_down - 0.05,
            "filter CE {} vs random {}",
            filter.ce_eval_down,
            random.ce_eval_down
        );
    }

    #[test]
    fn learning_curve_is_monotone_in_prefix_size() {
        let bench = Benchmark::prepare(BenchmarkConfig::small(33)).unwrap();
        let (sel, _) = bench.select(Method::ColorFilter, 4, 33).unwrap();
        let seqs = bench.materialize(&sel).unwrap();
        let curve = learning_curve(
            &seqs,
            &bench.eval_down,
            &[10, 50, 150],
            bench.cfg.k_target,
            bench.cfg.alpha,
            Vocab::byte_level(),
        )
        .unwrap();
        assert_eq!(curve.len(), 3);
        assert!(curve[0].0 < curve[2].0);
        // More selected data should help the target-domain CE here.
        assert!(curve[2].1 < curve[0].1);
    }

    #[test]
    fn curve_checkpoints_validate() {
        let bench = Benchmark::prepare(BenchmarkConfig::small(3)).unwrap();
        let seqs = bench.train[..10].to_vec();
        assert!(learning_curve(
            &seqs,
            &bench.eval_down,
            &[1000],
            3,
            0.1,
            Vocab::byte_level()
        )
        .is_err());
    }

    #[test]
    fn shuffled_selection_is_a_permutation() {
        let bench = Benchmark::prepare(BenchmarkConfig::small(5)).unwrap();
        let seqs = bench.train[..20].to_vec();
        let shuffled = shuffled_selection(&seqs, 9);
        assert_eq!(shuffled.len(), seqs.len());
        let mut a: Vec<&str> = seqs.iter().map(|s| s.seq_id.as_str()).collect();
        let mut b: Vec<&str> = shuffled.iter().map(|s| s.seq_id.as_str()).collect();
        assert_ne!(a, b);
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn results_tsv_writes_one_row_per_run() {
        let bench = Benchmark::prepare(BenchmarkConfig::small(13)).unwrap();
        let reports = vec![
            bench.run(Method::Random, 2, 13).unwrap(),
            bench.run(Method::ColorFilter, 2, 13).unwrap(),
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_results_tsv(f.path(), &reports, &FileMeta::adhoc(13)).unwrap();
        let content = std::fs::read_to_string(f.path()).unwrap();
        let rows: Vec<&str> = content
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("method"))
            .collect();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].starts_with("random\t2\t"));
        assert!(rows[1].starts_with("color_filter\t2\t"));
    }
}
