//! Mutual information between the world state and the steady-state history
//! under the most informative constant-threshold equilibrium, with sweeps
//! over the communication success rate.

use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::{delta_n, CutoffResult, EquilibriumError};
use crate::histories::enumerate_truncated;
use crate::model::{truncation_for_tail, SignalModel, State};
use crate::steady_state::{
    belief_odds_constant_threshold, constant_threshold_log_probability, odds_to_belief,
    SteadyStateError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error(transparent)]
    SteadyState(#[from] SteadyStateError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Space(#[from] crate::histories::HistoryError),
    #[error("truncation tail bound {0:.3e} exceeds tolerance {1:.3e}")]
    TailTooLarge(f64, f64),
}

/// Binary entropy in nats, with the continuity convention at 0 and 1.
pub fn entropy(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MIResult {
    /// Mutual information in nats.
    pub value: f64,
    /// Upper bound on the truncation error.
    pub tail_bound: f64,
}

/// Mutual information `I(state; history)` in the constant-threshold-`n`
/// steady state: the prior entropy minus the expected posterior entropy,
/// summed over histories supported on the first `n` signals with total at
/// most `t`. The neglected tail carries at most `entropy(prior) * delta^(t+1)`.
pub fn mutual_information(
    model: &SignalModel,
    n: usize,
    delta: f64,
    t: usize,
    tail_tol: f64,
) -> Result<MIResult, InfoError> {
    let prior = model.prior();
    let g0 = entropy(prior);
    if n == 0 {
        return Ok(MIResult {
            value: 0.0,
            tail_bound: 0.0,
        });
    }
    let tail_bound = g0 * delta.powi(t as i32 + 1);
    if tail_bound > tail_tol {
        return Err(InfoError::TailTooLarge(tail_bound, tail_tol));
    }
    let mut expected_posterior_entropy = 0.0;
    for support in enumerate_truncated(n, t)? {
        // Embed the n-coordinate support vector into the full signal space.
        let mut counts = vec![0u32; model.l()];
        counts[..n].copy_from_slice(support.counts());
        let full = crate::histories::History::new(counts);
        let p_high = constant_threshold_log_probability(model, n, delta, &full, State::High)?.exp();
        let p_low = constant_threshold_log_probability(model, n, delta, &full, State::Low)?.exp();
        let p = prior * p_high + (1.0 - prior) * p_low;
        if p == 0.0 {
            continue;
        }
        let belief = odds_to_belief(belief_odds_constant_threshold(model, n, delta, &full)?);
        expected_posterior_entropy += p * entropy(belief);
    }
    Ok(MIResult {
        value: (g0 - expected_posterior_entropy).max(0.0),
        tail_bound,
    })
}

/// As [`mutual_information`] with the truncation depth chosen from the tail
/// tolerance.
pub fn mutual_information_auto(
    model: &SignalModel,
    n: usize,
    delta: f64,
    tail_tol: f64,
) -> Result<MIResult, InfoError> {
    let t = truncation_for_tail(delta, tail_tol);
    mutual_information(model, n, delta, t, tail_tol)
}

/// The largest admissible constant threshold at `delta`: the largest `n`
/// whose likelihood ratio exceeds 1 and whose cutoff is at or above `delta`.
/// A small tolerance keeps grid points that sit exactly on a cutoff in the
/// more informative regime.
pub fn selected_n(model: &SignalModel, delta: f64) -> Result<usize, EquilibriumError> {
    const BOUNDARY_TOL: f64 = 1e-12;
    for n in (1..=model.l()).rev() {
        if model.ratios()[n - 1] <= 1.0 {
            continue;
        }
        let admissible = match delta_n(model, n)? {
            CutoffResult::AlwaysExists => true,
            CutoffResult::NeverExists => false,
            CutoffResult::Cutoff(d) => delta <= d + BOUNDARY_TOL,
        };
        if admissible {
            return Ok(n);
        }
    }
    Ok(0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MISweepRow {
    pub delta: f64,
    pub selected_n: usize,
    pub mutual_information: f64,
    pub tail_bound: f64,
}

/// Mutual information of the most informative constant-threshold equilibrium
/// at each grid point.
pub fn mi_sweep(
    model: &SignalModel,
    grid: &[f64],
    tail_tol: f64,
) -> Result<Vec<MISweepRow>, InfoError> {
    let mut rows = Vec::with_capacity(grid.len());
    for &delta in grid {
        assert!(delta > 0.0 && delta < 1.0, "grid must lie in (0,1)");
        let n = selected_n(model, delta)?;
        let mi = mutual_information_auto(model, n, delta, tail_tol)?;
        rows.push(MISweepRow {
            delta,
            selected_n: n,
            mutual_information: mi.value,
            tail_bound: mi.tail_bound,
        });
    }
    Ok(rows)
}
