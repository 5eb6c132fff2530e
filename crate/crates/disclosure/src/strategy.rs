//! Disclosure strategies: constant-threshold, history-dependent threshold,
//! single-signal cap strategies, and general table-backed rules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::histories::History;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("strategy table has no entry for history {0:?} with signal {1}")]
    OutOfDomain(History, usize),
    #[error("table entry at history {0:?}, signal {1} discloses infeasible {2:?}")]
    InfeasibleEntry(History, usize, History),
    #[error("signal index {0} out of range for {1} signals")]
    SignalOutOfRange(usize, usize),
}

pub type TableKey = (History, usize);

/// A disclosure strategy. Signal indices are 0-based in code; the JSON
/// serialization uses the conventional 1-based indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Disclose the first `j` signal kinds of `h + 1_i`, at every information set.
    ConstantThreshold(usize),
    /// Disclose a prefix whose cutoff depends on the information set.
    Threshold(BTreeMap<TableKey, usize>),
    /// Disclose only signal `signal`, up to `limit` copies (`None` = unbounded).
    Cap { signal: usize, limit: Option<u32> },
    /// Explicit disclosure table on the truncated domain.
    General(BTreeMap<TableKey, History>),
}

impl Strategy {
    /// The disclosed history at `(h, s_i)`, honoring the optional cap `N` on
    /// disclosed totals. Table-backed strategies error outside their domain.
    pub fn disclose(
        &self,
        h: &History,
        i: usize,
        cap: Option<u32>,
    ) -> Result<History, StrategyError> {
        if i >= h.l() {
            return Err(StrategyError::SignalOutOfRange(i, h.l()));
        }
        let endowment = h.plus_signal(i);
        let out = match self {
            Strategy::ConstantThreshold(j) => endowment
                .prefix((*j).min(h.l()))
                .expect("prefix index within range"),
            Strategy::Threshold(table) => {
                let j = *table
                    .get(&(h.clone(), i))
                    .ok_or_else(|| StrategyError::OutOfDomain(h.clone(), i))?;
                endowment
                    .prefix(j.min(h.l()))
                    .expect("prefix index within range")
            }
            Strategy::Cap { signal, limit } => {
                let available = endowment.get(*signal);
                let n = limit.map_or(available, |n| n.min(available));
                let mut counts = vec![0u32; h.l()];
                counts[*signal] = n;
                History::new(counts)
            }
            Strategy::General(table) => {
                let out = table
                    .get(&(h.clone(), i))
                    .ok_or_else(|| StrategyError::OutOfDomain(h.clone(), i))?
                    .clone();
                if !out.le(&endowment) {
                    return Err(StrategyError::InfeasibleEntry(h.clone(), i, out));
                }
                out
            }
        };
        if let Some(n) = cap {
            if out.total() > n {
                return Err(StrategyError::InfeasibleEntry(h.clone(), i, out));
            }
        }
        debug_assert!(out.le(&endowment), "disclosure must never fabricate");
        Ok(out)
    }

    /// Materializes the strategy as an explicit table over `domain`.
    pub fn to_table(
        &self,
        domain: &[History],
        cap: Option<u32>,
    ) -> Result<BTreeMap<TableKey, History>, StrategyError> {
        let mut table = BTreeMap::new();
        for h in domain {
            for i in 0..h.l() {
                table.insert((h.clone(), i), self.disclose(h, i, cap)?);
            }
        }
        Ok(table)
    }
}

/// Entry witnessing that a table is not of threshold form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonThresholdWitness {
    pub history: History,
    pub signal: usize,
    pub disclosed: History,
}

/// Recovers the threshold representation `J` of a disclosure table, if every
/// entry is a prefix of `h + 1_i`; otherwise reports a witnessing entry.
pub fn as_threshold(
    table: &BTreeMap<TableKey, History>,
) -> Result<BTreeMap<TableKey, usize>, NonThresholdWitness> {
    let mut j_map = BTreeMap::new();
    for ((h, i), disclosed) in table {
        let endowment = h.plus_signal(*i);
        let l = h.l();
        let j = (0..=l).find(|&j| endowment.prefix(j).unwrap() == *disclosed);
        match j {
            Some(j) => {
                j_map.insert((h.clone(), *i), j);
            }
            None => {
                return Err(NonThresholdWitness {
                    history: h.clone(),
                    signal: *i,
                    disclosed: disclosed.clone(),
                })
            }
        }
    }
    Ok(j_map)
}

// --- JSON schema ------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyFile {
    Constant {
        j: usize,
    },
    Cap {
        /// 1-based signal index.
        i: usize,
        /// Maximum copies disclosed; absent means unbounded.
        #[serde(skip_serializing_if = "Option::is_none")]
        n: Option<u32>,
    },
    Table {
        entries: Vec<TableEntry>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TableEntry {
    pub h: Vec<u32>,
    /// 1-based signal index.
    pub s: usize,
    pub disclose: Vec<u32>,
}

impl StrategyFile {
    pub fn into_strategy(self) -> Result<Strategy, String> {
        match self {
            StrategyFile::Constant { j } => Ok(Strategy::ConstantThreshold(j)),
            StrategyFile::Cap { i, n } => {
                if i == 0 {
                    return Err("cap strategy signal index is 1-based".into());
                }
                Ok(Strategy::Cap {
                    signal: i - 1,
                    limit: n,
                })
            }
            StrategyFile::Table { entries } => {
                let mut table = BTreeMap::new();
                for e in entries {
                    if e.s == 0 {
                        return Err("table entry signal index is 1-based".into());
                    }
                    table.insert((History::new(e.h), e.s - 1), History::new(e.disclose));
                }
                Ok(Strategy::General(table))
            }
        }
    }
}

pub fn load_strategy(path: &std::path::Path) -> Result<Strategy, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read strategy file {}: {e}", path.display()))?;
    let file: StrategyFile = serde_json::from_str(&text)
        .map_err(|e| format!("malformed strategy file {}: {e}", path.display()))?;
    file.into_strategy()
}

/// Strategy description for reports.
pub fn describe(strategy: &Strategy) -> String {
    match strategy {
        Strategy::ConstantThreshold(j) => format!("constant-threshold({j})"),
        Strategy::Threshold(_) => "threshold(table)".to_string(),
        Strategy::Cap { signal, limit } => match limit {
            Some(n) => format!("cap(signal {}, n={})", signal + 1, n),
            None => format!("cap(signal {}, unbounded)", signal + 1),
        },
        Strategy::General(_) => "general(table)".to_string(),
    }
}
