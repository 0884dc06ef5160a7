//! Conditional loss reduction scoring.
//!
//! Each sequence gets a record `(nll_cond, nll_marg, color)` where
//! `color = nll_cond - nll_marg`; lower means more preferred. Scoring is
//! embarrassingly parallel over read-only models; a single merge step writes
//! records in canonical seq_id order so output bytes are invariant to worker
//! count and input arrival order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};
use crate::meta::{read_header, FileMeta};
use crate::ngram::Model;

/// Default number of sequences held in memory at once by streaming scoring.
pub const DEFAULT_BATCH: usize = 4096;

const SCORE_HEADER: &str = "seq_id\tnll_cond\tnll_marg\tcolor\tcolor_per_tok";

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub seq_id: String,
    /// -ln P(x | conditional), >= 0.
    pub nll_cond: f64,
    /// -ln P(x | marginal), >= 0.
    pub nll_marg: f64,
    /// nll_cond - nll_marg, exactly as stored.
    pub color: f64,
}

/// Scores one sequence under a conditional/marginal model pair.
pub fn color_score(cond: &Model, marg: &Model, seq: &TokenSequence) -> Result<ScoreRecord> {
    if cond.vocab().size != marg.vocab().size {
        return Err(Error::VocabMismatch {
            cond: cond.vocab().size,
            marg: marg.vocab().size,
        });
    }
    let nll_cond = -cond.log_prob(&seq.tokens)?;
    let nll_marg = -marg.log_prob(&seq.tokens)?;
    Ok(ScoreRecord {
        seq_id: seq.seq_id.clone(),
        nll_cond,
        nll_marg,
        color: nll_cond - nll_marg,
    })
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::InvalidParam("workers must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))
}

fn sort_and_check(mut records: Vec<ScoreRecord>) -> Result<Vec<ScoreRecord>> {
    records.sort_by(|a, b| a.seq_id.cmp(&b.seq_id));
    for pair in records.windows(2) {
        if pair[0].seq_id == pair[1].seq_id {
            return Err(Error::DuplicateSeqId(pair[0].seq_id.clone()));
        }
    }
    Ok(records)
}

/// Scores a slice of sequences in parallel. Output is sorted by seq_id and
/// byte-identical for any worker count.
pub fn score_sequences(
    cond: &Model,
    marg: &Model,
    seqs: &[TokenSequence],
    workers: usize,
) -> Result<Vec<ScoreRecord>> {
    let pool = build_pool(workers)?;
    let records: Result<Vec<ScoreRecord>> = pool.install(|| {
        seqs.par_iter()
            .map(|s| color_score(cond, marg, s))
            .collect()
    });
    sort_and_check(records?)
}

/// Streaming variant: pulls at most `batch` sequences from the iterator at a
/// time, so live-sequence memory stays bounded by the batch size while only
/// the small records accumulate. `progress` is called with the running
/// record count after each batch.
pub fn score_stream<I>(
    cond: &Model,
    marg: &Model,
    seqs: I,
    workers: usize,
    batch: usize,
    mut progress: impl FnMut(usize),
) -> Result<Vec<ScoreRecord>>
where
    I: Iterator<Item = TokenSequence>,
{
    if batch == 0 {
        return Err(Error::InvalidParam("batch size must be >= 1".into()));
    }
    let pool = build_pool(workers)?;
    let mut records: Vec<ScoreRecord> = Vec::new();
    let mut seqs = seqs.peekable();
    while seqs.peek().is_some() {
        let chunk: Vec<TokenSequence> = seqs.by_ref().take(batch).collect();
        let scored: Result<Vec<ScoreRecord>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|s| color_score(cond, marg, s))
                .collect()
        });
        records.extend(scored?);
        progress(records.len());
    }
    sort_and_check(records)
}

fn fmt_f64(x: f64) -> String {
    // 17 significant digits: round-trips f64 exactly.
    format!("{x:.16e}")
}

/// Writes a score file: `#` metadata header, column header, one TSV row per
/// record with floats at 17 significant digits for bit-stable re-ranking.
/// The per-token column is diagnostic only; ranking uses the raw color.
pub fn write_scores(
    path: impl AsRef<Path>,
    records: &[ScoreRecord],
    context_length: usize,
    meta: &FileMeta,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    meta.write_header(&mut w).map_err(io)?;
    writeln!(w, "# context_length={context_length}").map_err(io)?;
    writeln!(w, "{SCORE_HEADER}").map_err(io)?;
    let c = context_length as f64;
    for r in records {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            r.seq_id,
            fmt_f64(r.nll_cond),
            fmt_f64(r.nll_marg),
            fmt_f64(r.color),
            fmt_f64(r.color / c),
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a score file written by [`write_scores`].
pub fn read_scores(path: impl AsRef<Path>) -> Result<(Vec<ScoreRecord>, FileMeta)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let (meta, first, mut line_no) = read_header(&mut reader, path)?;
    match first.as_deref() {
        Some(SCORE_HEADER) => {}
        other => {
            return Err(Error::parse(
                path,
                line_no,
                format!("bad column header {other:?}"),
            ))
        }
    }
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        line_no += 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 5 columns, got {}", cols.len()),
            ));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(path, line_no, format!("bad float {s:?}")))
        };
        records.push(ScoreRecord {
            seq_id: cols[0].to_string(),
            nll_cond: num(cols[1])?,
            nll_marg: num(cols[2])?,
            color: num(cols[3])?,
        });
    }
    Ok((records, meta))
}

/// Distribution summary of the color scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfReport {
    /// (quantile, value) pairs using nearest-rank (lower) order statistics.
    pub quantiles: Vec<(f64, f64)>,
    pub mean: f64,
    pub frac_below_zero: f64,
    /// Bottom-n cut value when a budget was given: the n-th smallest color.
    pub cutoff: Option<f64>,
    pub count: usize,
}

/// Exact order statistics over the color column. `budget` additionally
/// reports the selection threshold (the value separating the best `n`
/// records from the rest of the pool).
pub fn score_cdf(
    records: &[ScoreRecord],
    quantiles: &[f64],
    budget: Option<usize>,
) -> Result<CdfReport> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus("score records".into()));
    }
    let mut colors: Vec<f64> = records.iter().map(|r| r.color).collect();
    colors.sort_by(f64::total_cmp);
    let n = colors.len();
    let mut out = Vec::with_capacity(quantiles.len());
    for &q in quantiles {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParam(format!("quantile {q} outside [0, 1]")));
        }
        // Nearest-rank, lower: the ceil(q*n)-th smallest, clamped to [1, n].
        let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
        out.push((q, colors[rank - 1]));
    }
    let mean = colors.iter().sum::<f64>() / n as f64;
    let below = colors.iter().filter(|&&c| c < 0.0).count();
    let cutoff = match budget {
        None => None,
        Some(b) => {
            if b == 0 || b > n {
                return Err(Error::BudgetExceedsPool { n: b, pool: n });
            }
            Some(colors[b - 1])
        }
    };
    Ok(CdfReport {
        quantiles: out,
        mean,
        frac_below_zero: below as f64 / n as f64,
        cutoff,
        count: n,
    })
}
