//! Monte Carlo oracle: forward-simulates the overlapping-generations chain,
//! collects empirical history distributions, and checks path properties on
//! realized trajectories.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

use crate::histories::History;
use crate::model::{Friction, SignalModel, State};
use crate::strategy::{Strategy, StrategyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("malformed trajectory: {0}")]
    MalformedTrajectory(String),
}

/// Total variation distance between two distributions on a shared support.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "tv_distance needs a shared support");
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    /// Keep the per-period trajectory for path diagnostics.
    pub record_trace: bool,
    /// Keep the realized signal sequence of each complete-history segment.
    pub record_segments: bool,
}

impl SimOptions {
    pub fn new(steps: u64, seed: u64) -> Self {
        SimOptions {
            steps,
            burn_in: 10_000,
            seed,
            record_trace: false,
            record_segments: false,
        }
    }
}

/// One recorded period: the history received and whether the delivery into
/// this period failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub received: History,
    pub failed_delivery: bool,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct LengthStats {
    pub count: u64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub state: State,
    pub steps: u64,
    pub seed: u64,
    /// Empirical frequency of each received history over recorded periods.
    #[serde(serialize_with = "serialize_empirical")]
    pub empirical: BTreeMap<History, f64>,
    /// Signals observed since the last communication failure, per period.
    pub complete_history_lengths: LengthStats,
    #[serde(skip)]
    pub trace: Option<Vec<TraceStep>>,
    /// Realized signal index sequences between communication failures.
    #[serde(skip)]
    pub segments: Option<Vec<Vec<usize>>>,
}

/// Keys as space-separated count vectors, so the map survives JSON's
/// string-key restriction.
fn serialize_empirical<S: serde::Serializer>(
    map: &BTreeMap<History, f64>,
    ser: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = ser.serialize_map(Some(map.len()))?;
    for (h, freq) in map {
        let key = h
            .counts()
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(" ");
        m.serialize_entry(&key, freq)?;
    }
    m.end()
}

impl SimResult {
    /// Empirical probabilities aligned with a history enumeration; histories
    /// never observed get zero.
    pub fn frequencies_on(&self, histories: &[History]) -> Vec<f64> {
        histories
            .iter()
            .map(|h| self.empirical.get(h).copied().unwrap_or(0.0))
            .collect()
    }
}

fn draw_signal(rng: &mut ChaCha12Rng, f: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in f.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    f.len() - 1
}

/// Forward-simulates the chain conditional on one world state.
///
/// Per period: draw the private signal, apply the strategy's disclosure,
/// then deliver with the message's success rate (reset to the empty history
/// on failure). Received histories are recorded after burn-in. The RNG is a
/// ChaCha12 stream seeded from `seed`, so results are reproducible.
pub fn simulate_chain(
    model: &SignalModel,
    strategy: &Strategy,
    state: State,
    friction: &Friction,
    cap: Option<u32>,
    opts: &SimOptions,
) -> Result<SimResult, SimError> {
    assert!(opts.steps >= 1, "steps must be at least 1");
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let f = model.f_vec(state);
    let l = model.l();

    let mut h = History::zero(l);
    let mut since_failure: u64 = 0;
    let mut counts: BTreeMap<History, u64> = BTreeMap::new();
    let mut trace = opts.record_trace.then(Vec::new);
    let mut segments = opts.record_segments.then(|| vec![Vec::new()]);
    let mut failed_into_period = true;
    let mut len_sum = 0.0f64;
    let mut len_sumsq = 0.0f64;
    let mut recorded = 0u64;

    for step in 0..opts.burn_in + opts.steps {
        if step >= opts.burn_in {
            *counts.entry(h.clone()).or_insert(0) += 1;
            recorded += 1;
            let len = since_failure as f64;
            len_sum += len;
            len_sumsq += len * len;
            if let Some(t) = trace.as_mut() {
                t.push(TraceStep {
                    received: h.clone(),
                    failed_delivery: failed_into_period,
                });
            }
        }
        let i = draw_signal(&mut rng, f);
        if let Some(segs) = segments.as_mut() {
            segs.last_mut().unwrap().push(i);
        }
        let msg = strategy.disclose(&h, i, cap)?;
        let d = friction.delta_for_len(msg.total() as usize);
        let success = rng.gen::<f64>() < d;
        if success {
            h = msg;
            since_failure += 1;
            failed_into_period = false;
        } else {
            h = History::zero(l);
            since_failure = 0;
            failed_into_period = true;
            if let Some(segs) = segments.as_mut() {
                segs.push(Vec::new());
            }
        }
    }

    let n = recorded as f64;
    let mean = len_sum / n;
    let var = (len_sumsq / n - mean * mean).max(0.0);
    let empirical = counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect();
    Ok(SimResult {
        state,
        steps: opts.steps,
        seed: opts.seed,
        empirical,
        complete_history_lengths: LengthStats {
            count: recorded,
            mean,
            std_error: (var / n).sqrt(),
        },
        trace,
        segments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// More than one coordinate grew, or a coordinate grew by more than one,
    /// across a failure-free transition.
    Gradualism,
    /// A strictly smaller history followed a realized one with no failure in
    /// between.
    NoTurningBack,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathViolation {
    pub kind: ViolationKind,
    pub earlier_period: usize,
    pub later_period: usize,
    pub earlier: History,
    pub later: History,
}

/// Scans a trajectory of received histories for gradualism and
/// no-turning-back violations. Every history appearing in the trajectory is
/// on-path by construction, so no external support set is needed.
pub fn path_diagnostics(trace: &[TraceStep]) -> Result<Vec<PathViolation>, SimError> {
    if trace.is_empty() {
        return Ok(Vec::new());
    }
    let l = trace[0].received.l();
    if trace.iter().any(|s| s.received.l() != l) {
        return Err(SimError::MalformedTrajectory(
            "histories of differing dimension".into(),
        ));
    }
    let mut violations = Vec::new();
    // segment_start marks the first period after the most recent failure.
    let mut segment_start = 0usize;
    for t in 1..trace.len() {
        if trace[t].failed_delivery {
            segment_start = t;
            continue;
        }
        let prev = &trace[t - 1].received;
        let cur = &trace[t].received;
        let grew: Vec<usize> = (0..l).filter(|&i| cur.get(i) > prev.get(i)).collect();
        if grew.len() > 1 || grew.iter().any(|&i| cur.get(i) > prev.get(i) + 1) {
            violations.push(PathViolation {
                kind: ViolationKind::Gradualism,
                earlier_period: t - 1,
                later_period: t,
                earlier: prev.clone(),
                later: cur.clone(),
            });
        }
        for (s, step) in trace.iter().enumerate().take(t).skip(segment_start) {
            if cur.lt(&step.received) {
                violations.push(PathViolation {
                    kind: ViolationKind::NoTurningBack,
                    earlier_period: s,
                    later_period: t,
                    earlier: step.received.clone(),
                    later: cur.clone(),
                });
            }
        }
    }
    Ok(violations)
}

/// Counts good signals and bad subsequences (maximal, possibly empty, runs
/// of bad signals) in one complete-history segment.
pub fn bad_subsequence_counts(segment: &[usize], is_good: impl Fn(usize) -> bool) -> (u64, u64) {
    let mut goods = 0u64;
    let mut bad_runs = 0u64;
    for &s in segment {
        if is_good(s) {
            goods += 1;
            bad_runs += 1; // closes the run preceding this good signal
        }
    }
    bad_runs += 1; // the run after the last good signal
    (goods, bad_runs)
}
