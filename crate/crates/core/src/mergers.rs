//! First-common-value bookkeeping across sequences committed in ascending
//! start order.
//!
//! A sequence merges with the smallest earlier sequence that produced its
//! first already-seen value, provided that value occurs no later than the
//! merging sequence's (first) maximum. Junctions past the maximum are kept
//! as "tail" events for auditing but do not affect main designations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{SequenceRecord, Status};
use crate::error::{Error, Result};
use crate::natural::Natural;

/// Values at or above this bound are not indexed by default.
pub const DEFAULT_INDEX_LIMIT: u64 = 1_000_000_000_000;

/// Owner and step index of every indexed value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValueIndex {
    limit: u64,
    entries: HashMap<u64, (u64, u32)>,
}

impl ValueIndex {
    pub fn new(limit: u64) -> Self {
        ValueIndex { limit, entries: HashMap::new() }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn key(&self, value: &Natural) -> Option<u64> {
        value.to_u64().filter(|v| *v < self.limit)
    }

    /// `(owner_start, step_index)` for an indexed value.
    pub fn get(&self, value: &Natural) -> Option<(u64, u64)> {
        let key = self.key(value)?;
        self.entries.get(&key).map(|&(owner, idx)| (owner, idx as u64))
    }

    /// Records `value` as first produced by `owner`; existing entries win.
    fn insert(&mut self, value: &Natural, owner: u64, idx: u64) {
        if let Some(key) = self.key(value) {
            self.entries.entry(key).or_insert((owner, idx as u32));
        }
    }

    /// Entries sorted by value, for deterministic serialization.
    pub fn sorted_entries(&self) -> Vec<(u64, u64, u32)> {
        let mut v: Vec<_> = self.entries.iter().map(|(&k, &(o, i))| (k, o, i)).collect();
        v.sort_unstable();
        v
    }

    pub fn from_entries(limit: u64, entries: impl IntoIterator<Item = (u64, u64, u32)>) -> Self {
        ValueIndex { limit, entries: entries.into_iter().map(|(k, o, i)| (k, (o, i))).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergerEvent {
    pub merging_start: Natural,
    pub owner_start: Natural,
    pub common_value: Natural,
    pub idx_in_merging: u64,
    pub idx_in_owner: u64,
    /// The common value occurs at or before the merging sequence's maximum.
    pub clause_satisfied: bool,
}

impl MergerEvent {
    /// `S:i=T:j=x` junction notation.
    pub fn junction(&self) -> String {
        format_junction(
            &self.merging_start,
            self.idx_in_merging,
            &self.owner_start,
            self.idx_in_owner,
            &self.common_value,
        )
    }

    /// One event-log line: junction, tab, `1` for a merger or `0` for a
    /// tail junction.
    pub fn log_line(&self) -> String {
        format!("{}\t{}", self.junction(), u8::from(self.clause_satisfied))
    }

    pub fn parse_log_line(line: &str) -> Result<Self> {
        let (junction, flag) = line
            .trim_end()
            .split_once('\t')
            .ok_or_else(|| Error::Parse(format!("event line without flag: {line:?}")))?;
        let j: Junction = junction.parse()?;
        let clause_satisfied = match flag {
            "1" => true,
            "0" => false,
            other => return Err(Error::Parse(format!("bad clause flag {other:?}"))),
        };
        Ok(MergerEvent {
            merging_start: j.merging_start,
            owner_start: j.owner_start,
            common_value: j.common_value,
            idx_in_merging: j.idx_in_merging,
            idx_in_owner: j.idx_in_owner,
            clause_satisfied,
        })
    }
}

pub fn format_junction(merging: &Natural, i: u64, owner: &Natural, j: u64, value: &Natural) -> String {
    format!("{merging}:{i}={owner}:{j}={value}")
}

/// Parsed junction notation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Junction {
    pub merging_start: Natural,
    pub idx_in_merging: u64,
    pub owner_start: Natural,
    pub idx_in_owner: u64,
    pub common_value: Natural,
}

impl FromStr for Junction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad junction {s:?}"));
        let mut parts = s.split('=');
        let (left, right, value) = (parts.next(), parts.next(), parts.next());
        if parts.next().is_some() {
            return Err(bad());
        }
        let (left, right, value) = (left.ok_or_else(bad)?, right.ok_or_else(bad)?, value.ok_or_else(bad)?);
        let (ms, mi) = left.split_once(':').ok_or_else(bad)?;
        let (os, oi) = right.split_once(':').ok_or_else(bad)?;
        Ok(Junction {
            merging_start: ms.parse()?,
            idx_in_merging: mi.parse().map_err(|_| bad())?,
            owner_start: os.parse()?,
            idx_in_owner: oi.parse().map_err(|_| bad())?,
            common_value: value.parse()?,
        })
    }
}

impl fmt::Display for Junction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_junction(
            &self.merging_start,
            self.idx_in_merging,
            &self.owner_start,
            self.idx_in_owner,
            &self.common_value,
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MainDesignation {
    pub start: Natural,
    pub is_main: bool,
    pub main_root: Natural,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitOutcome {
    pub designation: MainDesignation,
    pub event: Option<MergerEvent>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Designation {
    is_main: bool,
    main_root: u64,
}

/// Serial commit state: value index plus main designations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergerBook {
    index: ValueIndex,
    designations: BTreeMap<u64, Designation>,
    last_committed: Option<u64>,
}

/// Serializable snapshot of a [`MergerBook`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergerBookState {
    pub index_limit: u64,
    pub index: Vec<(u64, u64, u32)>,
    pub designations: Vec<(u64, bool, u64)>,
    pub last_committed: Option<u64>,
}

impl MergerBook {
    pub fn new(index_limit: u64) -> Self {
        MergerBook { index: ValueIndex::new(index_limit), designations: BTreeMap::new(), last_committed: None }
    }

    pub fn index(&self) -> &ValueIndex {
        &self.index
    }

    pub fn last_committed(&self) -> Option<u64> {
        self.last_committed
    }

    /// Commits the next sequence; starts must arrive in strictly ascending order.
    pub fn commit(&mut self, record: &SequenceRecord) -> Result<CommitOutcome> {
        let start = record
            .start
            .to_u64()
            .ok_or_else(|| Error::InvalidInput(format!("start {} does not fit a machine word", record.start)))?;
        if let Some(last) = self.last_committed {
            if start <= last {
                return Err(Error::CommitOrderViolation {
                    start: record.start.clone(),
                    last_committed: Natural::from_u64(last),
                });
            }
        }
        if matches!(record.status, Status::Aborted { .. }) {
            return Err(Error::InvalidInput(format!("aborted record {} cannot be committed", record.start)));
        }
        // Entries past the last counted one (the closing repeat of a cycle)
        // add nothing new.
        let last_counted = record.length;
        let mut event = None;
        let mut pending: Vec<(&Natural, u64)> = Vec::new();
        for (idx, value) in record.trajectory.indexed_values() {
            if idx > last_counted {
                break;
            }
            if let Some((owner, owner_idx)) = self.index.get(value) {
                event = Some(MergerEvent {
                    merging_start: record.start.clone(),
                    owner_start: Natural::from_u64(owner),
                    common_value: value.clone(),
                    idx_in_merging: idx,
                    idx_in_owner: owner_idx,
                    clause_satisfied: idx <= record.max_index,
                });
                break;
            }
            pending.push((value, idx));
        }
        for (value, idx) in pending {
            self.index.insert(value, start, idx);
        }
        let designation = match &event {
            Some(e) if e.clause_satisfied => {
                let owner = e.owner_start.to_u64().expect("indexed owners are words");
                let root = self.designations.get(&owner).map_or(owner, |d| d.main_root);
                Designation { is_main: false, main_root: root }
            }
            _ => Designation { is_main: true, main_root: start },
        };
        self.designations.insert(start, designation);
        self.last_committed = Some(start);
        Ok(CommitOutcome {
            designation: MainDesignation {
                start: record.start.clone(),
                is_main: designation.is_main,
                main_root: Natural::from_u64(designation.main_root),
            },
            event,
        })
    }

    pub fn designation(&self, start: &Natural) -> Result<MainDesignation> {
        let key = start.to_u64().ok_or_else(|| Error::UnknownStart(start.clone()))?;
        let d = self.designations.get(&key).ok_or_else(|| Error::UnknownStart(start.clone()))?;
        Ok(MainDesignation { start: start.clone(), is_main: d.is_main, main_root: Natural::from_u64(d.main_root) })
    }

    /// Smallest main start reachable along the merger chain.
    pub fn main_root(&self, start: &Natural) -> Result<Natural> {
        self.designation(start).map(|d| d.main_root)
    }

    /// Number of merged starts whose chain ends at each main start.
    pub fn merger_counts(&self) -> BTreeMap<u64, u64> {
        let mut counts: BTreeMap<u64, u64> =
            self.designations.iter().filter(|(_, d)| d.is_main).map(|(s, _)| (*s, 0)).collect();
        for d in self.designations.values().filter(|d| !d.is_main) {
            *counts.entry(d.main_root).or_default() += 1;
        }
        counts
    }

    /// Designation table lines: start, is_main (1/0), main root, merger count.
    pub fn designation_lines(&self) -> Vec<String> {
        let counts = self.merger_counts();
        self.designations
            .iter()
            .map(|(s, d)| {
                let count = if d.is_main { counts.get(s).copied().unwrap_or(0) } else { 0 };
                format!("{s}\t{}\t{}\t{count}", u8::from(d.is_main), d.main_root)
            })
            .collect()
    }

    pub fn state(&self) -> MergerBookState {
        MergerBookState {
            index_limit: self.index.limit(),
            index: self.index.sorted_entries(),
            designations: self.designations.iter().map(|(s, d)| (*s, d.is_main, d.main_root)).collect(),
            last_committed: self.last_committed,
        }
    }

    pub fn from_state(state: MergerBookState) -> Self {
        MergerBook {
            index: ValueIndex::from_entries(state.index_limit, state.index),
            designations: state
                .designations
                .into_iter()
                .map(|(s, is_main, main_root)| (s, Designation { is_main, main_root }))
                .collect(),
            last_committed: state.last_committed,
        }
    }
}

/// Whether two trajectories coincide from their junction onward.
pub fn merge_point_agrees(event: &MergerEvent, merging: &[Natural], owner: &[Natural]) -> bool {
    let (i, j) = (event.idx_in_merging as usize, event.idx_in_owner as usize);
    if i >= merging.len() || j >= owner.len() || merging[i] != event.common_value {
        return false;
    }
    let (a, b) = (&merging[i..], &owner[j..]);
    let n = a.len().min(b.len());
    a[..n] == b[..n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Engine, EngineConfig};

    fn nat(v: u64) -> Natural {
        Natural::from_u64(v)
    }

    fn synthetic(values: &[u64]) -> SequenceRecord {
        let values: Vec<Natural> = values.iter().copied().map(nat).collect();
        SequenceRecord::from_values(values, Status::Terminated { penultimate_prime: None }, 20).unwrap()
    }

    #[test]
    fn first_sequence_is_main() {
        let e = Engine::new(EngineConfig::new(10)).unwrap();
        let mut book = MergerBook::new(DEFAULT_INDEX_LIMIT);
        let out = book.commit(&e.run_sequence(&nat(6)).unwrap()).unwrap();
        assert!(out.designation.is_main);
        assert_eq!(out.event, None);
        assert_eq!(book.main_root(&nat(6)).unwrap(), nat(6));
    }

    #[test]
    fn merge_into_855855() {
        let e = Engine::new(EngineConfig::new(10)).unwrap();
        let mut book = MergerBook::new(DEFAULT_INDEX_LIMIT);
        book.commit(&e.run_sequence(&nat(855855)).unwrap()).unwrap();
        let later = e.run_sequence(&nat(886545)).unwrap();
        assert_eq!((later.max_value.clone(), later.max_index), (nat(1574721), 4));
        let out = book.commit(&later).unwrap();
        let event = out.event.unwrap();
        assert_eq!(event.common_value, nat(855855));
        assert_eq!((event.idx_in_merging, event.idx_in_owner), (1, 0));
        assert!(event.clause_satisfied);
        assert_eq!(event.junction(), "886545:1=855855:0=855855");
        assert_eq!(book.main_root(&nat(886545)).unwrap(), nat(855855));
    }

    #[test]
    fn commit_order_is_enforced() {
        let mut book = MergerBook::new(DEFAULT_INDEX_LIMIT);
        book.commit(&synthetic(&[10, 8, 7, 1])).unwrap();
        let err = book.commit(&synthetic(&[9, 4, 3, 1])).unwrap_err();
        assert!(matches!(err, Error::CommitOrderViolation { .. }));
        assert!(matches!(book.main_root(&nat(9)), Err(Error::UnknownStart(_))));
    }

    #[test]
    fn three_link_chain_resolves_to_the_smallest_main() {
        // c = 100 is main; b = 200 merges into c; a = 300 merges into b.
        let mut book = MergerBook::new(DEFAULT_INDEX_LIMIT);
        book.commit(&synthetic(&[100, 5000, 50, 1])).unwrap();
        let b = book.commit(&synthetic(&[200, 5000, 50, 1])).unwrap();
        assert_eq!(b.event.as_ref().unwrap().common_value, nat(5000));
        let a = book.commit(&synthetic(&[300, 200, 5000, 50, 1])).unwrap();
        let event = a.event.unwrap();
        assert_eq!((event.owner_start.clone(), event.common_value.clone()), (nat(200), nat(200)));
        assert_eq!(book.main_root(&nat(300)).unwrap(), nat(100));
        assert_eq!(book.main_root(&nat(200)).unwrap(), nat(100));
        assert_eq!(book.merger_counts().get(&100), Some(&2));
        assert_eq!(
            book.designation_lines(),
            vec!["100\t1\t100\t2", "200\t0\t100\t0", "300\t0\t100\t0"]
        );
    }

    #[test]
    fn tail_junctions_keep_the_sequence_main() {
        let mut book = MergerBook::new(DEFAULT_INDEX_LIMIT);
        book.commit(&synthetic(&[100, 7, 1])).unwrap();
        // Peaks at 900 (index 1) before reaching the shared value 7.
        let out = book.commit(&synthetic(&[150, 900, 7, 1])).unwrap();
        let event = out.event.unwrap();
        assert!(!event.clause_satisfied);
        assert!(out.designation.is_main);
        assert_eq!(event.log_line(), "150:2=100:1=7\t0");
    }

    #[test]
    fn index_limit_excludes_large_values() {
        let mut book = MergerBook::new(1000);
        book.commit(&synthetic(&[100, 5000, 7, 1])).unwrap();
        assert_eq!(book.index().get(&nat(5000)), None);
        let out = book.commit(&synthetic(&[200, 5000, 7, 1])).unwrap();
        assert_eq!(out.event.unwrap().common_value, nat(7));
    }

    #[test]
    fn junction_notation_round_trips() {
        let j: Junction = "472836:2284=32064:173=1358054".parse().unwrap();
        assert_eq!(
            (j.merging_start.clone(), j.idx_in_merging, j.owner_start.clone(), j.idx_in_owner, j.common_value.clone()),
            (nat(472836), 2284, nat(32064), 173, nat(1358054))
        );
        assert_eq!(j.to_string(), "472836:2284=32064:173=1358054");
        assert!("472836:2284=32064".parse::<Junction>().is_err());
        let e = MergerEvent::parse_log_line("886545:1=855855:0=855855\t1").unwrap();
        assert!(e.clause_satisfied);
        assert_eq!(e.log_line(), "886545:1=855855:0=855855\t1");
    }

    #[test]
    fn state_round_trips() {
        let e = Engine::new(EngineConfig::new(8)).unwrap();
        let mut book = MergerBook::new(DEFAULT_INDEX_LIMIT);
        for s in 2..300u64 {
            book.commit(&e.run_sequence(&nat(s)).unwrap()).unwrap();
        }
        assert_eq!(MergerBook::from_state(book.state()), book);
    }

    #[test]
    fn ownership_is_minimal_and_merges_agree() {
        let e = Engine::new(EngineConfig::new(8)).unwrap();
        let mut book = MergerBook::new(DEFAULT_INDEX_LIMIT);
        let mut records = BTreeMap::new();
        let mut events = Vec::new();
        for s in 1..1500u64 {
            let r = e.run_sequence(&nat(s)).unwrap();
            if let Some(ev) = book.commit(&r).unwrap().event {
                events.push(ev);
            }
            records.insert(s, r);
        }
        for (value, owner, _) in book.index().sorted_entries() {
            let first = records
                .iter()
                .find(|(_, r)| r.trajectory.full().unwrap()[..=r.length as usize].contains(&nat(value)))
                .map(|(s, _)| *s);
            assert_eq!(first, Some(owner), "value {value}");
        }
        assert!(!events.is_empty());
        for ev in &events {
            let a = records[&ev.merging_start.to_u64().unwrap()].trajectory.full().unwrap();
            let b = records[&ev.owner_start.to_u64().unwrap()].trajectory.full().unwrap();
            assert!(merge_point_agrees(ev, a, b), "{}", ev.junction());
        }
    }
}
