//! Compute-cost accounting in "model forwards".
//!
//! One model forward is a forward pass of one token through an auxiliary
//! model; a backward pass costs [`BACKWARD_FORWARD_RATIO`] forwards. With
//! ratio r, training on x tokens costs (1+r)x forwards. `m` (prior corpus
//! size) and `n` (selection budget) are in the same token units; totals come
//! out in forwards of those units. `L` is the forward-cost ratio of the
//! target model over the auxiliaries, so training the target costs (1+r)nL.
//!
//! Per-method accounting, with r = 2:
//!
//! | method                 | prior | serial    | parallel | training |
//! |------------------------|-------|-----------|----------|----------|
//! | color_filter           | 3m    | 0         | 2 tau n  | 3 n L    |
//! | conditional_only       | 3m    | 0         | tau n    | 3 n L    |
//! | rho_down               | 0     | tau n + 2n| tau n    | 3 n L    |
//! | rho_down_prior         | 3m    | tau n + 2n| tau n    | 3 n L    |
//! | online_color           | 3m    | 2 tau n+4n| 0        | 3 n L    |
//! | random                 | 0     | 0         | 0        | 3 n L    |
//!
//! The serial column is work that must happen inside the selection loop
//! (online marginal evaluation plus its update backward); the parallel
//! column can be precomputed offline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selector::Method;

/// A backward pass costs this many forward passes. Encoded once; every
/// formula below derives from it.
pub const BACKWARD_FORWARD_RATIO: f64 = 2.0;

/// FLOPs of one auxiliary-model forward of a single token.
pub const DEFAULT_FLOPS_PER_FORWARD: f64 = 5e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Prior-corpus size, same token units as `n`.
    pub m: f64,
    /// Selection budget in tokens.
    pub n: f64,
    /// Subset size multiplier.
    pub tau: f64,
    /// Target/auxiliary forward-cost ratio.
    pub l: f64,
    pub method: Method,
}

impl CostParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("n", self.n), ("L", self.l)] {
            if !(v >= 0.0) {
                return Err(Error::InvalidParam(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.tau >= 1.0) {
            return Err(Error::InvalidParam(format!(
                "tau must be >= 1, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Cost breakdown in model forwards. `total` is always the sum of the four
/// components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub prior_cost: f64,
    pub serial_cost: f64,
    pub parallel_cost: f64,
    pub training_cost: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(prior: f64, serial: f64, parallel: f64, training: f64) -> Self {
        CostBreakdown {
            prior_cost: prior,
            serial_cost: serial,
            parallel_cost: parallel,
            training_cost: training,
            total: prior + serial + parallel + training,
        }
    }

    /// Everything except target training: the cost of choosing the data.
    pub fn selection_cost(&self) -> f64 {
        self.prior_cost + self.serial_cost + self.parallel_cost
    }
}

/// Cost of running a selection method plus training the target on the
/// selected data.
pub fn cost(params: &CostParams) -> Result<CostBreakdown> {
    cost_with_ratio(params, BACKWARD_FORWARD_RATIO)
}

/// Same accounting with an explicit backward:forward ratio, so alternative
/// assumptions regenerate consistent tables.
pub fn cost_with_ratio(params: &CostParams, ratio: f64) -> Result<CostBreakdown> {
    params.validate()?;
    if !(ratio > 0.0) {
        return Err(Error::InvalidParam(format!(
            "backward:forward ratio must be > 0, got {ratio}"
        )));
    }
    let CostParams { m, n, tau, l, .. } = *params;
    let train_factor = 1.0 + ratio; // forward + backward per trained token
    let prior = train_factor * m;
    let training = train_factor * n * l;
    let breakdown = match params.method {
        // Two models forward over the tau*n pool, all offline.
        Method::ColorFilter => CostBreakdown::new(prior, 0.0, 2.0 * tau * n, training),
        // One model forward over the pool.
        Method::ConditionalOnly => CostBreakdown::new(prior, 0.0, tau * n, training),
        // Marginal forwards are serial (it trains as it goes) and its update
        // backward costs ratio*n; the fixed conditional runs offline.
        Method::RhoDown => {
            CostBreakdown::new(0.0, tau * n + ratio * n, tau * n, training)
        }
        Method::RhoDownPrior => {
            CostBreakdown::new(prior, tau * n + ratio * n, tau * n, training)
        }
        // Both models are online: two forwards over the pool plus two
        // update backwards, nothing precomputable.
        Method::OnlineColor => {
            CostBreakdown::new(prior, 2.0 * tau * n + 2.0 * ratio * n, 0.0, training)
        }
        Method::Random => CostBreakdown::new(0.0, 0.0, 0.0, training),
        other => return Err(Error::UnknownMethod(other.as_str().to_string())),
    };
    Ok(breakdown)
}

/// Converts forwards to FLOPs.
pub fn flops(forwards: f64, flops_per_forward: f64) -> f64 {
    forwards * flops_per_forward
}

/// A learning curve: (tokens_trained, metric) points in training order,
/// where lower metric is better (held-out cross-entropy).
pub type LearningCurve = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPoint {
    pub tau: f64,
    /// Tokens at which the curve first reaches the baseline, if ever.
    pub tokens: Option<f64>,
    /// Selection-side FLOPs (prior + serial + parallel) spent by then.
    pub scoring_flops: Option<f64>,
    /// Target-training FLOPs spent by then.
    pub training_flops: Option<f64>,
    pub total_flops: Option<f64>,
}

/// For each (tau, curve), finds the earliest point at or below the
/// baseline's final metric and splits the cost spent by then into scoring
/// and training FLOPs. Curves that never reach the baseline report `None`.
pub fn cost_to_match(
    curves: &[(f64, LearningCurve)],
    baseline_final: f64,
    params: &CostParams,
    flops_per_forward: f64,
) -> Result<Vec<MatchPoint>> {
    let mut out = Vec::with_capacity(curves.len());
    for (tau, curve) in curves {
        let reached = curve
            .iter()
            .find(|&&(_, metric)| metric <= baseline_final)
            .map(|&(tokens, _)| tokens);
        let point = match reached {
            None => MatchPoint {
                tau: *tau,
                tokens: None,
                scoring_flops: None,
                training_flops: None,
                total_flops: None,
            },
            Some(tokens) => {
                let at = CostParams {
                    n: tokens,
                    tau: *tau,
                    ..*params
                };
                let breakdown = cost(&at)?;
                let scoring = flops(breakdown.selection_cost(), flops_per_forward);
                let training = flops(breakdown.training_cost, flops_per_forward);
                MatchPoint {
                    tau: *tau,
                    tokens: Some(tokens),
                    scoring_flops: Some(scoring),
                    training_flops: Some(training),
                    total_flops: Some(scoring + training),
                }
            }
        };
        out.push(point);
    }
    Ok(out)
}
