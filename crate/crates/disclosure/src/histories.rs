//! The history lattice: count vectors, prefix and truncation operators,
//! feasible disclosures, and the prefix-sum dominance order.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistoryError {
    #[error("prefix index {0} out of range 0..={1}")]
    IndexOutOfRange(usize, usize),
    #[error("dominance compares equal-length histories only (totals {0} vs {1})")]
    LengthMismatch(u32, u32),
    #[error("truncated space of {0} histories exceeds the configured maximum {1}")]
    CapacityExceeded(u128, u128),
}

/// A history: the count of each signal received, `(h_1, ..., h_l)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct History(Vec<u32>);

impl fmt::Debug for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl History {
    pub fn new(counts: Vec<u32>) -> Self {
        History(counts)
    }

    pub fn zero(l: usize) -> Self {
        History(vec![0; l])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn l(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// Total number of signals, `h_1 + ... + h_l`.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// The history plus one copy of signal `i`.
    pub fn plus_signal(&self, i: usize) -> History {
        let mut c = self.0.clone();
        c[i] += 1;
        History(c)
    }

    /// First `j` entries kept, the rest zeroed.
    pub fn prefix(&self, j: usize) -> Result<History, HistoryError> {
        if j > self.l() {
            return Err(HistoryError::IndexOutOfRange(j, self.l()));
        }
        let mut c = vec![0; self.l()];
        c[..j].copy_from_slice(&self.0[..j]);
        Ok(History(c))
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &History) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Componentwise `self <= other` with at least one strict entry.
    pub fn lt(&self, other: &History) -> bool {
        self.le(other) && self != other
    }
}

/// All feasible disclosures at history `h` with private signal `i` (0-based):
/// every `h' <= h + 1_i` componentwise, filtered by the optional cap on the
/// total number of signals disclosed.
pub fn feasible_disclosures(h: &History, i: usize, cap: Option<u32>) -> Vec<History> {
    let endowment = h.plus_signal(i);
    let mut out = Vec::new();
    let mut current = vec![0u32; h.l()];
    loop {
        let total: u32 = current.iter().sum();
        if cap.is_none_or(|n| total <= n) {
            out.push(History(current.clone()));
        }
        // odometer over 0..=endowment componentwise
        let mut k = 0;
        loop {
            if k == current.len() {
                return out;
            }
            if current[k] < endowment.get(k) {
                current[k] += 1;
                break;
            }
            current[k] = 0;
            k += 1;
        }
    }
}

/// Strict prefix-sum dominance between equal-length histories: every prefix
/// sum of `h` weakly exceeds that of `h_star`, strictly for at least one
/// index below `l`.
pub fn monotone_dominates(h: &History, h_star: &History) -> Result<bool, HistoryError> {
    if h.total() != h_star.total() {
        return Err(HistoryError::LengthMismatch(h.total(), h_star.total()));
    }
    let mut sum_h = 0i64;
    let mut sum_star = 0i64;
    let mut strict = false;
    for n in 0..h.l() - 1 {
        sum_h += h.get(n) as i64;
        sum_star += h_star.get(n) as i64;
        if sum_h < sum_star {
            return Ok(false);
        }
        if sum_h > sum_star {
            strict = true;
        }
    }
    Ok(strict)
}

/// Number of histories with `l` coordinates and total at most `t`:
/// `C(t + l, l)`.
fn truncated_count(l: usize, t: usize) -> u128 {
    let mut c: u128 = 1;
    for k in 1..=l as u128 {
        c = c.saturating_mul(t as u128 + k) / k;
    }
    c
}

pub const DEFAULT_CAPACITY: u128 = 10_000_000;

/// All histories with total at most `t`, graded by total and lexicographic
/// (first coordinate largest first) within each grade. The order is
/// deterministic so downstream matrices and exports are reproducible.
pub fn enumerate_truncated(l: usize, t: usize) -> Result<Vec<History>, HistoryError> {
    enumerate_truncated_capped(l, t, DEFAULT_CAPACITY)
}

pub fn enumerate_truncated_capped(
    l: usize,
    t: usize,
    capacity: u128,
) -> Result<Vec<History>, HistoryError> {
    let count = truncated_count(l, t);
    if count > capacity {
        return Err(HistoryError::CapacityExceeded(count, capacity));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut scratch = vec![0u32; l];
    for total in 0..=t as u32 {
        compositions(&mut scratch, 0, total, &mut out);
    }
    Ok(out)
}

fn compositions(scratch: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<History>) {
    if pos == scratch.len() - 1 {
        scratch[pos] = remaining;
        out.push(History(scratch.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        scratch[pos] = v;
        compositions(scratch, pos + 1, remaining - v, out);
    }
}

/// The truncated state space with an index for kernel rows and exports.
#[derive(Debug, Clone)]
pub struct HistorySpace {
    histories: Vec<History>,
    index: HashMap<History, usize>,
    l: usize,
    truncation: usize,
}

impl HistorySpace {
    pub fn new(l: usize, truncation: usize) -> Result<Self, HistoryError> {
        let histories = enumerate_truncated(l, truncation)?;
        let index = histories
            .iter()
            .enumerate()
            .map(|(i, h)| (h.clone(), i))
            .collect();
        Ok(HistorySpace {
            histories,
            index,
            l,
            truncation,
        })
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn histories(&self) -> &[History] {
        &self.histories
    }

    pub fn history(&self, idx: usize) -> &History {
        &self.histories[idx]
    }

    /// Index of a history, or `None` when it lies beyond the truncation.
    pub fn index_of(&self, h: &History) -> Option<usize> {
        self.index.get(h).copied()
    }

    /// Index of the empty history; it is always the first entry.
    pub fn zero_index(&self) -> usize {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: &[u32]) -> History {
        History::new(v.to_vec())
    }

    #[test]
    fn prefix_examples() {
        assert_eq!(h(&[2, 1, 3]).prefix(1).unwrap(), h(&[2, 0, 0]));
        assert_eq!(h(&[2, 1, 3]).prefix(3).unwrap(), h(&[2, 1, 3]));
        assert_eq!(h(&[0, 0, 0]).prefix(2).unwrap(), h(&[0, 0, 0]));
        assert_eq!(h(&[2, 1]).prefix(0).unwrap(), h(&[0, 0]));
        assert!(h(&[2, 1]).prefix(3).is_err());
    }

    #[test]
    fn prefix_idempotent() {
        let x = h(&[3, 1, 2]);
        for j in 0..=3 {
            let once = x.prefix(j).unwrap();
            assert_eq!(once.prefix(j).unwrap(), once);
        }
    }

    #[test]
    fn feasible_examples() {
        let set = feasible_disclosures(&h(&[1, 0]), 1, None);
        let expect: Vec<History> = [[0, 0], [1, 0], [0, 1], [1, 1]]
            .iter()
            .map(|v| h(v))
            .collect();
        assert_eq!(set.len(), 4);
        for e in &expect {
            assert!(set.contains(e));
        }

        let capped = feasible_disclosures(&h(&[1, 0]), 1, Some(1));
        assert_eq!(capped.len(), 3);
        assert!(!capped.contains(&h(&[1, 1])));

        let own = feasible_disclosures(&h(&[0, 0, 0]), 0, None);
        assert_eq!(own.len(), 2);
        assert!(own.contains(&h(&[0, 0, 0])));
        assert!(own.contains(&h(&[1, 0, 0])));
    }

    #[test]
    fn feasible_cardinality_uncapped() {
        let x = h(&[2, 1, 0]);
        for i in 0..3 {
            let set = feasible_disclosures(&x, i, None);
            let expect: u32 = (0..3).map(|k| x.get(k) + u32::from(k == i) + 1).product();
            assert_eq!(set.len() as u32, expect);
        }
    }

    #[test]
    fn dominance_examples() {
        assert!(monotone_dominates(&h(&[2, 0, 1]), &h(&[1, 1, 1])).unwrap());
        assert!(!monotone_dominates(&h(&[1, 1, 1]), &h(&[1, 1, 1])).unwrap());
        assert!(matches!(
            monotone_dominates(&h(&[1, 0]), &h(&[0, 2])),
            Err(HistoryError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn dominance_is_strict_partial_order() {
        // Exhaustive irreflexivity/transitivity check on l=3, T<=4.
        let all = enumerate_truncated(3, 4).unwrap();
        for a in &all {
            assert!(!monotone_dominates(a, a).unwrap());
        }
        for a in &all {
            for b in &all {
                if a.total() != b.total() {
                    continue;
                }
                for c in &all {
                    if c.total() != a.total() {
                        continue;
                    }
                    if monotone_dominates(a, b).unwrap() && monotone_dominates(b, c).unwrap() {
                        assert!(monotone_dominates(a, c).unwrap());
                    }
                }
            }
        }
        // Antisymmetry follows from irreflexivity + transitivity; spot check:
        for a in &all {
            for b in &all {
                if a.total() == b.total() && monotone_dominates(a, b).unwrap() {
                    assert!(!monotone_dominates(b, a).unwrap());
                }
            }
        }
    }

    #[test]
    fn enumeration_examples() {
        let t1 = enumerate_truncated(2, 1).unwrap();
        assert_eq!(t1, vec![h(&[0, 0]), h(&[1, 0]), h(&[0, 1])]);
        assert_eq!(enumerate_truncated(2, 2).unwrap().len(), 6);
        assert_eq!(enumerate_truncated(3, 0).unwrap(), vec![h(&[0, 0, 0])]);
    }

    #[test]
    fn enumeration_capacity() {
        let err = enumerate_truncated_capped(4, 1000, 1000).unwrap_err();
        assert!(matches!(err, HistoryError::CapacityExceeded(_, _)));
    }

    #[test]
    fn space_index_roundtrip() {
        let space = HistorySpace::new(3, 5).unwrap();
        assert!(space.history(space.zero_index()).is_zero());
        for (i, hh) in space.histories().iter().enumerate() {
            assert_eq!(space.index_of(hh), Some(i));
        }
        assert_eq!(space.index_of(&h(&[6, 0, 0])), None);
    }
}
