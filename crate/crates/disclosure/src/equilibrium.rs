//! Equilibrium cutoffs and verifiers: constant-threshold cutoffs, the
//! high-success-rate bounds for threshold and monotone refinements, single
//! binding-constraint checks, brute-force best-response verification, and
//! belief-monotonicity scans.

use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::histories::{feasible_disclosures, monotone_dominates, History, HistorySpace};
use crate::model::{ExactModel, Friction, GameConfig, SignalModel, State};
use crate::steady_state::{belief_map, solve_stationary, BeliefMap, OffPathRule, SteadyStateError};
use crate::strategy::{describe, Strategy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error(transparent)]
    SteadyState(#[from] SteadyStateError),
    #[error(transparent)]
    Space(#[from] crate::histories::HistoryError),
    #[error("threshold {0} out of range 1..={1}")]
    IndexOutOfRange(usize, usize),
    #[error("closed form {closed} and bisection {bisected} disagree beyond 1e-10")]
    RouteDisagreement { closed: f64, bisected: f64 },
    #[error("tail mass bound {0} exceeds tolerance {1}; verdict would be unreliable")]
    TailTooLarge(f64, f64),
    #[error("no history in the support has a positive entry at index {0}")]
    EmptyFilter(usize),
    #[error("no positive friction scale satisfies the bound: {0}")]
    NoPositiveDelta(String),
}

/// Cutoff for disclosing signal `n` in a constant-threshold equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CutoffResult {
    /// Equilibrium with this threshold exists iff the success rate is at
    /// most the cutoff.
    Cutoff(f64),
    /// Exists for every success rate in (0,1).
    AlwaysExists,
    /// Exists for no success rate.
    NeverExists,
}

/// Margin of the binding disclosure constraint for constant threshold `n`
/// (1-based): `L_n * (1 - delta(1 - q_low_n)) / (1 - delta(1 - q_high_n)) - 1`.
/// Positive margin means threshold `n` is sustainable at `delta`.
pub fn threshold_margin(model: &SignalModel, n: usize, delta: f64) -> f64 {
    let q_high = model.q(State::High, n);
    let q_low = model.q(State::Low, n);
    let ratio = (1.0 - delta * (1.0 - q_low)) / (1.0 - delta * (1.0 - q_high));
    model.ratios()[n - 1] * ratio - 1.0
}

/// Whether a constant-threshold-`n` equilibrium exists at `delta`, with the
/// binding-constraint margin. Sufficiency of the single constraint follows
/// from the decreasing likelihood ratios. `n = 0` always exists.
pub fn constant_threshold_equilibrium_exists(
    model: &SignalModel,
    n: usize,
    delta: f64,
) -> (bool, f64) {
    if n == 0 {
        return (true, f64::INFINITY);
    }
    let margin = threshold_margin(model, n, delta);
    (margin >= 0.0, margin)
}

const ROUTE_AGREEMENT: f64 = 1e-10;

/// Bisects a decreasing margin function on (0,1); requires a sign change.
fn bisect_decreasing(mut f: impl FnMut(f64) -> f64, tol: f64) -> Option<f64> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if f(1e-12) <= 0.0 || f(1.0 - 1e-12) >= 0.0 {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn dual_route(
    closed: f64,
    margin: impl FnMut(f64) -> f64,
    tol: f64,
) -> Result<f64, EquilibriumError> {
    let bisected = bisect_decreasing(margin, tol).ok_or(EquilibriumError::RouteDisagreement {
        closed,
        bisected: f64::NAN,
    })?;
    if (closed - bisected).abs() > ROUTE_AGREEMENT {
        return Err(EquilibriumError::RouteDisagreement { closed, bisected });
    }
    Ok(closed)
}

fn delta_n_closed_form(model: &SignalModel, n: usize) -> f64 {
    let fh = model.f(State::High, n - 1);
    let fl = model.f(State::Low, n - 1);
    let sum_h = model.q(State::High, n);
    let sum_l = model.q(State::Low, n);
    let inv_minus_one = (fl * sum_h - fh * sum_l) / (fh - fl);
    1.0 / (1.0 + inv_minus_one)
}

/// Success-rate cutoff for disclosing signal `n` (1-based) in a
/// constant-threshold equilibrium. Solved by the closed form and
/// independently by bisection on the binding constraint; the two must agree.
pub fn delta_n(model: &SignalModel, n: usize) -> Result<CutoffResult, EquilibriumError> {
    let l = model.l();
    if n < 1 || n > l {
        return Err(EquilibriumError::IndexOutOfRange(n, l));
    }
    if model.ratios()[n - 1] <= 1.0 {
        return Ok(CutoffResult::NeverExists);
    }
    // With all signals (or only the first) disclosed, the friction ratio in
    // the constraint cannot push the margin negative: direct evaluation of
    // the constraint shows it holds for every success rate.
    if n == 1 || n == l {
        return Ok(CutoffResult::AlwaysExists);
    }
    let closed = delta_n_closed_form(model, n);
    let tol = 1e-13;
    let value = dual_route(closed, |d| threshold_margin(model, n, d), tol)?;
    Ok(CutoffResult::Cutoff(value))
}

/// Exact-rational cutoff for signal `n`, when the model carries a rational
/// mirror. Mirrors the closed form; `None` when the cutoff is not interior
/// (ratio at most 1, or `n` at the edges).
pub fn delta_n_exact(exact: &ExactModel, n: usize) -> Option<BigRational> {
    let l = exact.f_high.len();
    if n < 2 || n >= l || exact.ratio(n - 1) <= BigRational::one() {
        return None;
    }
    let fh = &exact.f_high[n - 1];
    let fl = &exact.f_low[n - 1];
    let sum_h: BigRational = exact.f_high[..n].iter().sum();
    let sum_l: BigRational = exact.f_low[..n].iter().sum();
    let inv_minus_one = (fl * &sum_h - fh * &sum_l) / (fh - fl);
    Some(BigRational::one() / (BigRational::one() + inv_minus_one))
}

/// Success-rate bound above which no strict threshold equilibrium discloses
/// any signal beyond the first: the largest root, over thresholds `j >= 2`,
/// of the binding disclosure constraint. Zero when the constraint fails for
/// every success rate.
pub fn delta_star_threshold(model: &SignalModel) -> Result<f64, EquilibriumError> {
    let mut star: f64 = 0.0;
    for j in 2..=model.l() {
        if model.ratios()[j - 1] <= 1.0 {
            continue;
        }
        if j == model.l() {
            // All signals disclosed: the constraint ratio is identically 1
            // and the margin keeps the sign of L_l - 1; no interior root.
            continue;
        }
        let closed = delta_n_closed_form(model, j);
        let root = dual_route(closed, |d| threshold_margin(model, j, d), 1e-13)?;
        star = star.max(root);
    }
    Ok(star)
}

fn subset_margin(model: &SignalModel, j: usize, d_set: &[usize], delta: f64) -> f64 {
    let sum_h: f64 = d_set.iter().map(|&i| model.f(State::High, i)).sum();
    let sum_l: f64 = d_set.iter().map(|&i| model.f(State::Low, i)).sum();
    let ratio = (1.0 - delta * (1.0 - sum_l)) / (1.0 - delta * (1.0 - sum_h));
    model.ratios()[j - 1] * ratio - 1.0
}

/// Success-rate bound above which no strict monotone equilibrium discloses
/// any signal beyond the first: the largest root over `j >= 2` and departure
/// sets `D` with `1 in D`, `max D <= j`, of the disclosure constraint with
/// sums over `D`. Enumerates the `2^(j-1)` candidate sets per `j`, which is
/// fine at desk scale (small `l`).
pub fn delta_star_monotone(model: &SignalModel) -> Result<f64, EquilibriumError> {
    let mut star: f64 = 0.0;
    for j in 2..=model.l() {
        let lj = model.ratios()[j - 1];
        if lj <= 1.0 {
            continue;
        }
        // D ranges over subsets of {1..j} (0-based {0..j-1}) containing 0.
        for mask in 0..(1u32 << (j - 1)) {
            let mut d_set = vec![0usize];
            for b in 0..j - 1 {
                if mask & (1 << b) != 0 {
                    d_set.push(b + 1);
                }
            }
            let sum_h: f64 = d_set.iter().map(|&i| model.f(State::High, i)).sum();
            let sum_l: f64 = d_set.iter().map(|&i| model.f(State::Low, i)).sum();
            // With 1 in D, the denominator is positive, so the root is
            // interior whenever L_j > 1.
            let closed = (lj - 1.0) / ((lj - 1.0) + sum_h - lj * sum_l);
            let root = dual_route(closed, |d| subset_margin(model, j, &d_set, d), 1e-13)?;
            star = star.max(root);
        }
    }
    Ok(star)
}

/// Friction-scale bound for the message-dependent extension: the largest
/// scale below which no strict monotone equilibrium discloses any signal
/// beyond the first, uniformly over the success rates the scale can induce.
/// Infinite when the monotone bound is zero. The closed form
/// `-ln(delta_star) / p_upper` is cross-checked by bisection on the uniform
/// constraint.
pub fn delta_star_frictions(
    model: &SignalModel,
    p_lower: f64,
    p_upper: f64,
) -> Result<f64, EquilibriumError> {
    if !(p_upper >= p_lower && p_lower > 0.0) {
        return Err(EquilibriumError::NoPositiveDelta(format!(
            "need 0 < p_lower <= p_upper, got [{p_lower}, {p_upper}]"
        )));
    }
    let star = delta_star_monotone(model)?;
    if star <= 0.0 {
        return Ok(f64::INFINITY);
    }
    if star >= 1.0 {
        return Err(EquilibriumError::NoPositiveDelta(format!(
            "monotone bound {star} leaves no room below 1"
        )));
    }
    let closed = -star.ln() / p_upper;
    // Independent route: the constraints hold uniformly over induced success
    // rates iff the worst case, the smallest rate exp(-scale * p_upper),
    // stays above the monotone bound. Margin decreasing in the scale.
    let hi = 2.0 * closed + 1.0;
    let (mut lo, mut hi) = (0.0f64, hi);
    let ok = |scale: f64| (-scale * p_upper).exp() > star;
    if !ok(hi * 1e-12) {
        return Err(EquilibriumError::NoPositiveDelta(
            "constraint fails for arbitrarily small scales".into(),
        ));
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let bisected = 0.5 * (lo + hi);
    if (closed - bisected).abs() > ROUTE_AGREEMENT {
        return Err(EquilibriumError::RouteDisagreement { closed, bisected });
    }
    Ok(closed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    StrictEquilibrium,
    WeakEquilibrium,
    NotEquilibrium,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub h: History,
    /// 1-based signal index.
    pub signal: usize,
    pub better: History,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub strategy: String,
    pub delta: f64,
    pub verdict: Verdict,
    pub worst_margin: f64,
    pub witnesses: Vec<Witness>,
    pub tail_bound: f64,
    /// True when the scan stopped early after collecting enough rejection
    /// witnesses; `worst_margin` then covers only the scanned prefix.
    /// Strict and weak verdicts always come from a complete scan.
    pub scan_truncated: bool,
}

/// Brute-force best-response verification on the truncated space.
///
/// Computes the stationary distributions and the Bayes/off-path belief map,
/// then compares the strategy's disclosure at every on-path history-signal
/// pair against every feasible alternative. Under message-dependent
/// frictions the comparison uses the expected objective
/// `delta(h') pi(h') + (1 - delta(h')) pi(0)`; under a constant success rate
/// it reduces to comparing beliefs directly. Histories at the truncation
/// boundary are skipped (their alternatives may leave the space); the tail
/// bound in the report covers them.
pub fn verify_equilibrium(
    model: &SignalModel,
    strategy: &Strategy,
    config: &GameConfig,
    rule: &OffPathRule,
) -> Result<EquilibriumReport, EquilibriumError> {
    let space = HistorySpace::new(model.l(), config.truncation)?;
    let mu_high = solve_stationary(model, strategy, State::High, config, &space)?;
    let mu_low = solve_stationary(model, strategy, State::Low, config, &space)?;
    let tail = mu_high.tail_mass_bound.max(mu_low.tail_mass_bound);
    if tail > config.tolerances.tail {
        return Err(EquilibriumError::TailTooLarge(tail, config.tolerances.tail));
    }
    let beliefs = belief_map(
        &space,
        &mu_high,
        &mu_low,
        model.prior(),
        rule,
        config.tolerances.strict_margin,
    );
    let (verdict, worst_margin, witnesses, scan_truncated) =
        best_response_scan(model, strategy, config, &space, &beliefs)?;
    Ok(EquilibriumReport {
        strategy: describe(strategy),
        delta: config.friction.delta_max(),
        verdict,
        worst_margin,
        witnesses,
        tail_bound: tail,
        scan_truncated,
    })
}

fn objective(beliefs: &BeliefMap, friction: &Friction, idx: usize, msg_len: u32) -> f64 {
    if friction.is_constant() {
        // Ordering beliefs is the same as ordering log-odds, and log-odds
        // retain resolution where beliefs saturate at the float boundary.
        beliefs.log_odds(idx)
    } else {
        let d = friction.delta_for_len(msg_len as usize);
        d * beliefs.value(idx) + (1.0 - d) * beliefs.at_zero()
    }
}

fn best_response_scan(
    model: &SignalModel,
    strategy: &Strategy,
    config: &GameConfig,
    space: &HistorySpace,
    beliefs: &BeliefMap,
) -> Result<(Verdict, f64, Vec<Witness>, bool), EquilibriumError> {
    // Rejection needs only the existence of improving deviations; once this
    // many are in hand the remaining (possibly enormous) scan adds nothing
    // to the verdict. Strictness always requires the full scan, and gets it:
    // truncation can only trigger after a witness is found.
    const MAX_WITNESSES: usize = 32;
    let eps = config.tolerances.strict_margin;
    let mut worst = f64::INFINITY;
    let mut witnesses = Vec::new();
    let mut truncated = false;
    'scan: for idx in 0..space.len() {
        if !beliefs.is_on_path(idx) {
            continue;
        }
        let h = space.history(idx);
        if h.total() as usize >= config.truncation {
            continue; // alternatives could leave the truncated space
        }
        for i in 0..model.l() {
            let chosen = strategy
                .disclose(h, i, config.cap)
                .map_err(SteadyStateError::from)?;
            let chosen_idx = space
                .index_of(&chosen)
                .expect("disclosure of an interior history stays in the space");
            let chosen_value = objective(beliefs, &config.friction, chosen_idx, chosen.total());
            let mut best_alt: Option<(History, f64)> = None;
            for alt in feasible_disclosures(h, i, config.cap) {
                if alt == chosen {
                    continue;
                }
                let alt_idx = space
                    .index_of(&alt)
                    .expect("feasible alternative of an interior history stays in the space");
                let v = objective(beliefs, &config.friction, alt_idx, alt.total());
                if best_alt.as_ref().is_none_or(|(_, b)| v > *b) {
                    best_alt = Some((alt, v));
                }
            }
            let Some((alt, alt_value)) = best_alt else {
                continue;
            };
            let margin = chosen_value - alt_value;
            if margin < worst {
                worst = margin;
            }
            if margin < -eps {
                witnesses.push(Witness {
                    h: h.clone(),
                    signal: i + 1,
                    better: alt,
                    margin,
                });
                if witnesses.len() >= MAX_WITNESSES {
                    truncated = true;
                    break 'scan;
                }
            }
        }
    }
    let verdict = if !witnesses.is_empty() {
        Verdict::NotEquilibrium
    } else if worst > eps {
        Verdict::StrictEquilibrium
    } else {
        Verdict::WeakEquilibrium
    };
    Ok((verdict, worst, witnesses, truncated))
}

/// Checks the single-signal cap construction directly: the posterior odds at
/// `m` copies of signal `i` (0-based) must be strictly increasing in `m`
/// below the cap, and the truncated-tail lower bound at the cap must exceed
/// the odds one step below it. True exactly when the signal's likelihood
/// ratio exceeds 1.
pub fn check_prop1(model: &SignalModel, i: usize, n: Option<u32>, delta: f64) -> bool {
    let fh = model.f(State::High, i);
    let fl = model.f(State::Low, i);
    let ratio = model.ratios()[i];
    let friction_factor = (1.0 - delta * (1.0 - fl)) / (1.0 - delta * (1.0 - fh));
    let log_odds =
        |m: f64| model.prior_odds().ln() + (m + 1.0) * friction_factor.ln() + m * ratio.ln();
    let horizon = n.map_or(64, |n| n.min(64));
    let mut prev = log_odds(0.0);
    for m in 1..=horizon {
        let cur = log_odds(m as f64);
        if cur <= prev {
            return false;
        }
        prev = cur;
    }
    if let Some(n) = n {
        if (1..=64).contains(&n) {
            // Lower bound on the odds at the absorbing cap: the bound equals
            // the one-copy-extrapolated odds and must beat the m = n-1 odds.
            if log_odds(n as f64) <= log_odds(n as f64 - 1.0) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneViolation {
    pub dominant: History,
    pub dominated: History,
    pub belief_dominant: f64,
    pub belief_dominated: f64,
}

/// Scans all equal-length ordered pairs of the truncated space: whenever `h`
/// strictly dominates `h*` in prefix sums, a monotone belief map must give
/// `h` the strictly higher belief.
pub fn check_monotone_beliefs(beliefs: &BeliefMap, space: &HistorySpace) -> Vec<MonotoneViolation> {
    let mut out = Vec::new();
    for a in 0..space.len() {
        for b in 0..space.len() {
            if a == b {
                continue;
            }
            let (h, h_star) = (space.history(a), space.history(b));
            if h.total() != h_star.total() {
                continue;
            }
            if monotone_dominates(h, h_star).unwrap() && beliefs.value(a) <= beliefs.value(b) {
                out.push(MonotoneViolation {
                    dominant: h.clone(),
                    dominated: h_star.clone(),
                    belief_dominant: beliefs.value(a),
                    belief_dominated: beliefs.value(b),
                });
            }
        }
    }
    out
}

/// The distinguished history of the support: among members whose entry at
/// `j` (1-based) equals 1, iteratively keep the minimizers of the prefix sum
/// `h_1 + ... + h_i` for `i` from `j - 1` down to 1. The survivor is unique.
pub fn extract_hstar(support: &[History], j: usize) -> Result<History, EquilibriumError> {
    let mut pool: Vec<&History> = support.iter().filter(|h| h.get(j - 1) == 1).collect();
    if pool.is_empty() {
        return Err(EquilibriumError::EmptyFilter(j));
    }
    for i in (1..j).rev() {
        let min_sum = pool
            .iter()
            .map(|h| (0..i).map(|k| h.get(k)).sum::<u32>())
            .min()
            .unwrap();
        pool.retain(|h| (0..i).map(|k| h.get(k)).sum::<u32>() == min_sum);
    }
    debug_assert!(
        pool.windows(2).all(|w| w[0] == w[1]),
        "nested minimization should single out one vector: {pool:?}"
    );
    Ok(pool[0].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_model, GameConfig};

    fn model_a() -> SignalModel {
        validate_model(2, vec![0.7, 0.3], vec![0.3, 0.7], 0.5).unwrap()
    }

    fn model_b() -> SignalModel {
        validate_model(3, vec![0.5, 0.3, 0.2], vec![0.25, 0.25, 0.5], 0.5).unwrap()
    }

    fn h(v: &[u32]) -> History {
        History::new(v.to_vec())
    }

    #[test]
    fn delta_2_model_b_is_half() {
        match delta_n(&model_b(), 2).unwrap() {
            CutoffResult::Cutoff(d) => assert!((d - 0.5).abs() < 1e-12, "{d}"),
            other => panic!("expected cutoff, got {other:?}"),
        }
    }

    #[test]
    fn delta_n_edges() {
        assert_eq!(delta_n(&model_b(), 3).unwrap(), CutoffResult::NeverExists);
        assert_eq!(delta_n(&model_b(), 1).unwrap(), CutoffResult::AlwaysExists);
        assert!(matches!(
            delta_n(&model_b(), 4),
            Err(EquilibriumError::IndexOutOfRange(4, 3))
        ));
        assert!(matches!(
            delta_n(&model_b(), 0),
            Err(EquilibriumError::IndexOutOfRange(0, 3))
        ));
    }

    #[test]
    fn delta_n_exact_model_b() {
        use num_bigint::BigInt;
        let exact = ExactModel {
            f_high: [(1, 2), (3, 10), (1, 5)]
                .iter()
                .map(|&(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
                .collect(),
            f_low: [(1, 4), (1, 4), (1, 2)]
                .iter()
                .map(|&(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
                .collect(),
            prior: BigRational::new(BigInt::from(1), BigInt::from(2)),
        };
        let d2 = delta_n_exact(&exact, 2).unwrap();
        assert_eq!(d2, BigRational::new(BigInt::from(1), BigInt::from(2)));
        assert!(delta_n_exact(&exact, 3).is_none());
    }

    #[test]
    fn existence_check_straddles_cutoff() {
        let m = model_b();
        let (ok, margin) = constant_threshold_equilibrium_exists(&m, 2, 0.4);
        assert!(ok && margin > 0.0);
        let (ok, margin) = constant_threshold_equilibrium_exists(&m, 2, 0.6);
        assert!(!ok && margin < 0.0);
        let (ok, margin) = constant_threshold_equilibrium_exists(&m, 0, 0.9);
        assert!(ok && margin.is_infinite());
    }

    #[test]
    fn delta_star_threshold_examples() {
        assert!((delta_star_threshold(&model_b()).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(delta_star_threshold(&model_a()).unwrap(), 0.0);
    }

    #[test]
    fn delta_star_monotone_examples() {
        assert!((delta_star_monotone(&model_b()).unwrap() - 0.5).abs() < 1e-12);
        let m = validate_model(2, vec![0.6, 0.4], vec![0.3, 0.7], 0.5).unwrap();
        assert_eq!(delta_star_monotone(&m).unwrap(), 0.0);
        // No dependence on the prior.
        let m2 = validate_model(3, vec![0.5, 0.3, 0.2], vec![0.25, 0.25, 0.5], 0.9).unwrap();
        assert!(
            (delta_star_monotone(&m2).unwrap() - delta_star_monotone(&model_b()).unwrap()).abs()
                < 1e-15
        );
    }

    #[test]
    fn frictions_bound_model_b() {
        let d = delta_star_frictions(&model_b(), 1.0, 1.0).unwrap();
        assert!((d - 0.5f64.ln().abs()).abs() < 1e-10, "{d}");
        // Larger upper load weakly shrinks the bound.
        let d2 = delta_star_frictions(&model_b(), 1.0, 2.0).unwrap();
        assert!(d2 < d);
        // Zero monotone bound means every scale works.
        assert!(delta_star_frictions(&model_a(), 1.0, 2.0)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn verify_cap_strategy_is_strict() {
        let m = model_a();
        let t = crate::model::truncation_for_tail(0.9, 1e-8);
        let config = GameConfig::with_constant_delta(0.9, t);
        let report = verify_equilibrium(
            &m,
            &Strategy::Cap {
                signal: 0,
                limit: None,
            },
            &config,
            &OffPathRule::PessimisticBelowZero,
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::StrictEquilibrium, "{report:?}");
        assert!(report.worst_margin > 0.0);
    }

    #[test]
    fn verify_threshold_two_fails_above_cutoff() {
        let m = model_b();
        let t = crate::model::truncation_for_tail(0.6, 1e-8);
        let config = GameConfig::with_constant_delta(0.6, t);
        let report = verify_equilibrium(
            &m,
            &Strategy::ConstantThreshold(2),
            &config,
            &OffPathRule::PessimisticBelowZero,
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::NotEquilibrium);
        // Some witness should conceal the second signal: the better
        // disclosure drops the count at coordinate 2.
        assert!(report
            .witnesses
            .iter()
            .any(|w| w.better.get(1) < w.h.plus_signal(w.signal - 1).get(1)));
    }

    #[test]
    fn verify_threshold_two_holds_below_cutoff() {
        let m = model_b();
        let t = crate::model::truncation_for_tail(0.4, 1e-8);
        let config = GameConfig::with_constant_delta(0.4, t);
        let report = verify_equilibrium(
            &m,
            &Strategy::ConstantThreshold(2),
            &config,
            &OffPathRule::PessimisticBelowZero,
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::StrictEquilibrium, "{report:?}");
    }

    #[test]
    fn verify_no_disclosure_is_strict() {
        let m = model_a();
        let config = GameConfig::with_constant_delta(0.7, 10);
        let report = verify_equilibrium(
            &m,
            &Strategy::ConstantThreshold(0),
            &config,
            &OffPathRule::PessimisticBelowZero,
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::StrictEquilibrium);
    }

    #[test]
    fn prop1_checks() {
        let m = model_a();
        assert!(check_prop1(&m, 0, Some(3), 0.5));
        assert!(check_prop1(&m, 0, None, 0.5));
        assert!(!check_prop1(&m, 1, Some(3), 0.5));
        assert!(!check_prop1(&m, 1, None, 0.9));
    }

    #[test]
    fn monotone_scan_full_disclosure_clean() {
        use crate::steady_state::solve_stationary;
        let m = model_b();
        let config = GameConfig::with_constant_delta(0.5, 6);
        let space = HistorySpace::new(3, 6).unwrap();
        let s = Strategy::ConstantThreshold(3);
        let mu_h = solve_stationary(&m, &s, State::High, &config, &space).unwrap();
        let mu_l = solve_stationary(&m, &s, State::Low, &config, &space).unwrap();
        let beliefs = belief_map(
            &space,
            &mu_h,
            &mu_l,
            0.5,
            &OffPathRule::PessimisticBelowZero,
            1e-9,
        );
        assert!(check_monotone_beliefs(&beliefs, &space).is_empty());
    }

    #[test]
    fn monotone_scan_cap_strategy_dirty() {
        use crate::steady_state::solve_stationary;
        let m = model_b();
        let config = GameConfig::with_constant_delta(0.5, 6);
        let space = HistorySpace::new(3, 6).unwrap();
        let s = Strategy::Cap {
            signal: 1,
            limit: None,
        };
        let mu_h = solve_stationary(&m, &s, State::High, &config, &space).unwrap();
        let mu_l = solve_stationary(&m, &s, State::Low, &config, &space).unwrap();
        let beliefs = belief_map(
            &space,
            &mu_h,
            &mu_l,
            0.5,
            &OffPathRule::PessimisticBelowZero,
            1e-9,
        );
        let violations = check_monotone_beliefs(&beliefs, &space);
        assert!(violations
            .iter()
            .any(|v| v.dominant == h(&[1, 0, 0]) && v.dominated == h(&[0, 1, 0])));
    }

    #[test]
    fn hstar_examples() {
        let support = vec![h(&[1, 1, 0]), h(&[0, 1, 0]), h(&[2, 1, 0])];
        assert_eq!(extract_hstar(&support, 2).unwrap(), h(&[0, 1, 0]));
        assert_eq!(extract_hstar(&[h(&[0, 0, 1])], 3).unwrap(), h(&[0, 0, 1]));
        assert!(matches!(
            extract_hstar(&[h(&[1, 0, 0])], 3),
            Err(EquilibriumError::EmptyFilter(3))
        ));
    }

    #[test]
    fn hstar_prefix_minimality() {
        let support = vec![h(&[2, 0, 1]), h(&[1, 1, 1]), h(&[0, 2, 1]), h(&[1, 0, 1])];
        let star = extract_hstar(&support, 3).unwrap();
        assert_eq!(star, h(&[1, 0, 1]));
        // Every member of the j-filter with the same length weakly dominates
        // the extracted vector in prefix sums.
        for m in &support {
            if m.get(2) == 1 && m.total() == star.total() && *m != star {
                assert!(monotone_dominates(m, &star).unwrap() || *m == star);
            }
        }
    }

    #[test]
    fn delta_n_monotone_small_sample() {
        use crate::model::random_model;
        for seed in 0..50 {
            let m = random_model(seed, 4, 0.05).unwrap();
            let mut prev: Option<f64> = None;
            for n in 2..4 {
                if m.ratios()[n - 1] <= 1.0 {
                    break;
                }
                let CutoffResult::Cutoff(d) = delta_n(&m, n).unwrap() else {
                    continue;
                };
                if let Some(p) = prev {
                    assert!(
                        p > d,
                        "seed {seed}: delta_{} = {p} <= delta_{n} = {d}",
                        n - 1
                    );
                }
                prev = Some(d);
            }
        }
    }
}
