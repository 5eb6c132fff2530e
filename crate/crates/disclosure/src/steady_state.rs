//! Per-state Markov kernels over truncated histories, the contraction
//! fixed-point solver, closed forms for constant-threshold strategies, and
//! Bayesian belief maps with off-path completion.

use std::collections::HashMap;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::histories::{History, HistorySpace};
use crate::model::{GameConfig, SignalModel, State};
use crate::strategy::{Strategy, StrategyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyStateError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("fixed-point iteration did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("history {0:?} has mass outside the first {1} coordinates")]
    UnsupportedHistory(History, usize),
    #[error("truncation tail mass {0:.3e} exceeds tolerance {1:.3e}; raise T")]
    TailTooLarge(f64, f64),
}

/// Sparse row-stochastic kernel over a truncated history space, with one
/// extra absorbing-style row collecting mass that would leave the space.
#[derive(Debug, Clone)]
pub struct Kernel {
    /// `rows[r]` lists `(column, probability)`; length is `space.len() + 1`,
    /// the last row being the overflow bucket.
    rows: Vec<Vec<(usize, f64)>>,
    overflow: usize,
    /// Contraction modulus: the maximal success rate over messages.
    modulus: f64,
    /// Iteration floor so mass reaches every state of the truncated space
    /// before the stopping rule may fire; otherwise remote low-probability
    /// states would read as exactly zero and be misclassified as off-path.
    min_iters: usize,
}

impl Kernel {
    pub fn overflow_index(&self) -> usize {
        self.overflow
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }
}

/// Builds the one-step kernel under `strategy` conditional on `state`.
///
/// From history `h`, with probability `f_{theta,i}` the private signal is
/// `s_i`; the disclosed message reaches the successor with the message's
/// success rate, otherwise the successor starts from the empty history.
/// Messages leaving the truncated space flow into the overflow bucket.
pub fn transition_kernel(
    model: &SignalModel,
    strategy: &Strategy,
    state: State,
    config: &GameConfig,
    space: &HistorySpace,
) -> Result<Kernel, SteadyStateError> {
    let n = space.len();
    let overflow = n;
    let zero = space.zero_index();
    let mut rows = Vec::with_capacity(n + 1);
    for r in 0..n {
        let h = space.history(r);
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for i in 0..model.l() {
            let p_sig = model.f(state, i);
            let msg = strategy.disclose(h, i, config.cap)?;
            let d = config.friction.delta_for_len(msg.total() as usize);
            let target = space.index_of(&msg).unwrap_or(overflow);
            *acc.entry(target).or_insert(0.0) += p_sig * d;
            *acc.entry(zero).or_insert(0.0) += p_sig * (1.0 - d);
        }
        let mut row: Vec<(usize, f64)> = acc.into_iter().collect();
        row.sort_unstable_by_key(|&(c, _)| c);
        rows.push(row);
    }
    // Overflow bucket: conservatively keep mass there at the maximal success
    // rate; everything else resets. This upper-bounds the true tail.
    let modulus = config.friction.delta_max();
    rows.push(vec![(zero, 1.0 - modulus), (overflow, modulus)]);
    Ok(Kernel {
        rows,
        overflow,
        modulus,
        min_iters: config.truncation + 1,
    })
}

/// Steady-state distribution over the truncated space for one world state.
#[derive(Debug, Clone, Serialize)]
pub struct StateDistribution {
    /// Probabilities aligned with the history space enumeration.
    pub probs: Vec<f64>,
    /// Upper bound on mass beyond the truncation (the overflow bucket).
    pub tail_mass_bound: f64,
    pub state: State,
}

impl StateDistribution {
    pub fn prob(&self, idx: usize) -> f64 {
        self.probs[idx]
    }
}

/// Solves the fixed point by plain iteration from the point mass at the
/// empty history. The chain contracts in total variation at rate equal to
/// the maximal success rate, so the iteration count is predictable.
pub fn stationary_distribution(
    kernel: &Kernel,
    state: State,
    tol: f64,
) -> Result<StateDistribution, SteadyStateError> {
    let n = kernel.n_states();
    let modulus = kernel.modulus();
    // Successive-iterate gap g bounds the fixed-point distance by
    // g * modulus / (1 - modulus).
    let gap_target = tol * (1.0 - modulus) / modulus;
    let budget = ((gap_target.ln() / modulus.ln()).ceil() as usize)
        .saturating_add(64)
        .max(kernel.min_iters + 1);

    let mut cur = vec![0.0f64; n];
    cur[0] = 1.0;
    let mut next = vec![0.0f64; n];
    for it in 0..budget {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (r, &mass) in cur.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for &(c, p) in kernel.row(r) {
                next[c] += mass * p;
            }
        }
        let gap = 0.5
            * cur
                .iter()
                .zip(next.iter())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        std::mem::swap(&mut cur, &mut next);
        if gap < gap_target && it + 1 >= kernel.min_iters {
            let tail = cur[kernel.overflow_index()];
            let probs = cur[..kernel.overflow_index()].to_vec();
            return Ok(StateDistribution {
                probs,
                tail_mass_bound: tail,
                state,
            });
        }
    }
    Err(SteadyStateError::NonConvergence(budget))
}

/// Convenience: kernel construction plus fixed-point solve.
pub fn solve_stationary(
    model: &SignalModel,
    strategy: &Strategy,
    state: State,
    config: &GameConfig,
    space: &HistorySpace,
) -> Result<StateDistribution, SteadyStateError> {
    let kernel = transition_kernel(model, strategy, state, config, space)?;
    stationary_distribution(&kernel, state, config.tolerances.fixed_point_tv)
}

fn check_support(h: &History, n: usize) -> Result<(), SteadyStateError> {
    if h.counts().iter().skip(n).any(|&c| c > 0) {
        return Err(SteadyStateError::UnsupportedHistory(h.clone(), n));
    }
    Ok(())
}

/// Log of the closed-form steady-state probability of history `h` under a
/// constant threshold `n`:
/// `(1-delta) delta^hbar (1-delta(1-q))^-(hbar+1) * hbar!/(h_1!..h_n!) * prod f_i^h_i`.
pub fn constant_threshold_log_probability(
    model: &SignalModel,
    n: usize,
    delta: f64,
    h: &History,
    state: State,
) -> Result<f64, SteadyStateError> {
    check_support(h, n)?;
    let hbar = h.total() as f64;
    let q = model.q(state, n);
    let mut logp = (1.0 - delta).ln() + hbar * delta.ln()
        - (hbar + 1.0) * (1.0 - delta * (1.0 - q)).ln()
        + ln_gamma(hbar + 1.0);
    for i in 0..n {
        let hi = h.get(i) as f64;
        logp -= ln_gamma(hi + 1.0);
        if h.get(i) > 0 {
            logp += hi * model.f(state, i).ln();
        }
    }
    Ok(logp)
}

/// Closed-form steady-state probability of `h` under constant threshold `n`.
pub fn constant_threshold_probability(
    model: &SignalModel,
    n: usize,
    delta: f64,
    h: &History,
    state: State,
) -> Result<f64, SteadyStateError> {
    Ok(constant_threshold_log_probability(model, n, delta, h, state)?.exp())
}

/// Closed-form posterior odds of the high state at `h` under constant
/// threshold `n`: prior odds times the per-bad-subsequence factor to the
/// power `hbar + 1` times the product of likelihood ratios.
pub fn belief_odds_constant_threshold(
    model: &SignalModel,
    n: usize,
    delta: f64,
    h: &History,
) -> Result<f64, SteadyStateError> {
    check_support(h, n)?;
    let hbar = h.total() as f64;
    let q_high = model.q(State::High, n);
    let q_low = model.q(State::Low, n);
    let friction_factor = (1.0 - delta * (1.0 - q_low)) / (1.0 - delta * (1.0 - q_high));
    let mut log_odds = model.prior_odds().ln() + (hbar + 1.0) * friction_factor.ln();
    for i in 0..n {
        if h.get(i) > 0 {
            log_odds += h.get(i) as f64 * model.ratios()[i].ln();
        }
    }
    Ok(log_odds.exp())
}

pub fn odds_to_belief(odds: f64) -> f64 {
    if odds.is_infinite() {
        1.0
    } else {
        odds / (1.0 + odds)
    }
}

/// Off-path belief completion rule.
#[derive(Debug, Clone, PartialEq)]
pub enum OffPathRule {
    /// Every zero-probability history gets a value strictly below the belief
    /// at the empty history.
    PessimisticBelowZero,
    /// Explicit per-history values; histories absent from the table fall back
    /// to the pessimistic default.
    Custom(HashMap<History, f64>),
}

/// Belief map over a truncated space: Bayes on the support union, an
/// off-path completion elsewhere.
#[derive(Debug, Clone)]
pub struct BeliefMap {
    values: Vec<f64>,
    /// Posterior log-odds per history. Beliefs near 0 or 1 saturate in
    /// floating point; log-odds keep their resolution, so strictness
    /// comparisons use these where the ordering is the same.
    log_odds: Vec<f64>,
    on_path: Vec<bool>,
    pub off_path_default: f64,
}

impl BeliefMap {
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn log_odds(&self, idx: usize) -> f64 {
        self.log_odds[idx]
    }

    pub fn is_on_path(&self, idx: usize) -> bool {
        self.on_path[idx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at_zero(&self) -> f64 {
        self.values[0]
    }
}

/// Bayes posterior of the high state on the support of the unconditional
/// distribution; off-path histories get the rule's value.
pub fn belief_map(
    space: &HistorySpace,
    mu_high: &StateDistribution,
    mu_low: &StateDistribution,
    prior: f64,
    rule: &OffPathRule,
    strict_margin: f64,
) -> BeliefMap {
    let n = space.len();
    let mut values = vec![0.0f64; n];
    let mut log_odds = vec![0.0f64; n];
    let mut on_path = vec![false; n];
    for idx in 0..n {
        let num = prior * mu_high.prob(idx);
        let alt = (1.0 - prior) * mu_low.prob(idx);
        let den = num + alt;
        if den > 0.0 {
            values[idx] = num / den;
            log_odds[idx] = num.ln() - alt.ln();
            on_path[idx] = true;
        }
    }
    let pi_zero = values[space.zero_index()];
    let default = (pi_zero - 10.0 * strict_margin).max(0.0);
    let logit = |p: f64| p.ln() - (1.0 - p).ln();
    for idx in 0..n {
        if !on_path[idx] {
            values[idx] = match rule {
                OffPathRule::PessimisticBelowZero => default,
                OffPathRule::Custom(table) => {
                    table.get(space.history(idx)).copied().unwrap_or(default)
                }
            };
            log_odds[idx] = logit(values[idx]);
        }
    }
    BeliefMap {
        values,
        log_odds,
        on_path,
        off_path_default: default,
    }
}
