//! Catalog of aliquot cycles met during a campaign, keyed by smallest member,
//! with per-member entry counts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arithmetic::Factorizer;
use crate::engine::{SequenceRecord, Status};
use crate::error::{Error, Result};
use crate::natural::Natural;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CycleKind {
    Perfect,
    Amicable,
    Sociable,
}

impl CycleKind {
    pub fn for_period(c: usize) -> Self {
        match c {
            1 => CycleKind::Perfect,
            2 => CycleKind::Amicable,
            _ => CycleKind::Sociable,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// Members in iteration order, starting at the smallest.
    pub members: Vec<Natural>,
    pub kind: CycleKind,
    /// How often each member was the first cycle value a sequence reached.
    pub hit_counts: Vec<u64>,
    pub total: u64,
    pub main: u64,
    pub even: u64,
}

impl CycleRecord {
    pub fn period(&self) -> usize {
        self.members.len()
    }

    pub fn key(&self) -> &Natural {
        &self.members[0]
    }

    /// Members bracketed as `[ 220, 284 ]`.
    pub fn bracketed(&self) -> String {
        let list: Vec<String> = self.members.iter().map(|m| m.to_string()).collect();
        format!("[ {} ]", list.join(", "))
    }

    /// Entry counts joined as `3599|3965`.
    pub fn entry_column(&self) -> String {
        let list: Vec<String> = self.hit_counts.iter().map(|h| h.to_string()).collect();
        list.join("|")
    }
}

/// Tab-separated catalog row: members, total, `(main)`, even, entries.
impl fmt::Display for CycleRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t({})\t{}\t{}", self.bracketed(), self.total, self.main, self.even, self.entry_column())
    }
}

impl FromStr for CycleRecord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad cycle row {s:?}"));
        let fields: Vec<&str> = s.trim_end().split('\t').collect();
        let [members, total, main, even, entries] = fields[..] else {
            return Err(bad());
        };
        let inner = members.strip_prefix('[').and_then(|m| m.strip_suffix(']')).ok_or_else(bad)?;
        let members = inner.split(',').map(|m| m.trim().parse()).collect::<Result<Vec<Natural>>>()?;
        let main = main.strip_prefix('(').and_then(|m| m.strip_suffix(')')).ok_or_else(bad)?;
        let hit_counts = entries
            .split('|')
            .map(|h| h.parse::<u64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if members.is_empty() || hit_counts.len() != members.len() {
            return Err(bad());
        }
        Ok(CycleRecord {
            kind: CycleKind::for_period(members.len()),
            members,
            hit_counts,
            total: total.parse().map_err(|_| bad())?,
            main: main.parse().map_err(|_| bad())?,
            even: even.parse().map_err(|_| bad())?,
        })
    }
}

/// Rotation of `members` beginning at its smallest element.
pub fn rotate_to_min(members: &[Natural]) -> Vec<Natural> {
    let Some(pos) = members.iter().enumerate().min_by(|a, b| a.1.cmp(b.1)).map(|(i, _)| i) else {
        return Vec::new();
    };
    members[pos..].iter().chain(&members[..pos]).cloned().collect()
}

/// True iff `s` maps each member to the next, cyclically.
pub fn verify_cycle(members: &[Natural], factorizer: &Factorizer) -> Result<bool> {
    if members.is_empty() {
        return Ok(false);
    }
    for (i, m) in members.iter().enumerate() {
        if *m <= 1u64 {
            return Ok(false);
        }
        if factorizer.aliquot_step(m)? != members[(i + 1) % members.len()] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Verified, rotated, zero-tally record for a cycle.
pub fn canonicalize(members: &[Natural], factorizer: &Factorizer) -> Result<CycleRecord> {
    let mut sorted = members.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != members.len() || !verify_cycle(members, factorizer)? {
        let list: Vec<String> = members.iter().map(|m| m.to_string()).collect();
        return Err(Error::NotACycle(list.join(", ")));
    }
    let members = rotate_to_min(members);
    Ok(CycleRecord {
        kind: CycleKind::for_period(members.len()),
        hit_counts: vec![0; members.len()],
        members,
        total: 0,
        main: 0,
        even: 0,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleCatalog {
    cycles: BTreeMap<Natural, CycleRecord>,
}

impl CycleCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Cycles ordered by smallest member.
    pub fn cycles(&self) -> impl Iterator<Item = &CycleRecord> {
        self.cycles.values()
    }

    pub fn get(&self, key: &Natural) -> Option<&CycleRecord> {
        self.cycles.get(key)
    }

    /// Counts one cycling sequence. Other statuses are ignored.
    pub fn tally(&mut self, record: &SequenceRecord, is_main: bool, factorizer: &Factorizer) -> Result<()> {
        let Status::Cycled { members, .. } = &record.status else {
            return Ok(());
        };
        let key = members.iter().min().ok_or_else(|| Error::NotACycle(String::new()))?;
        if !self.cycles.contains_key(key) {
            let fresh = canonicalize(members, factorizer)?;
            self.cycles.insert(key.clone(), fresh);
        }
        let entry = self.cycles.get_mut(key).expect("inserted above");
        let pos = entry
            .members
            .iter()
            .position(|m| *m == members[0])
            .ok_or_else(|| Error::NotACycle(format!("entry {} not in cycle at {key}", members[0])))?;
        entry.hit_counts[pos] += 1;
        entry.total += 1;
        entry.main += u64::from(is_main);
        entry.even += u64::from(record.start.is_even());
        Ok(())
    }

    /// Catalog lines: header, then one row per cycle.
    pub fn lines(&self) -> Vec<String> {
        std::iter::once(CATALOG_HEADER.to_string()).chain(self.cycles().map(|c| c.to_string())).collect()
    }

    pub fn parse_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut catalog = CycleCatalog::new();
        for line in lines {
            if line.is_empty() || line == CATALOG_HEADER {
                continue;
            }
            let c: CycleRecord = line.parse()?;
            catalog.cycles.insert(c.key().clone(), c);
        }
        Ok(catalog)
    }
}

pub const CATALOG_HEADER: &str = "cycle\t#\t(#main)\teven\tentry";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::FactorBudget;
    use crate::engine::{Engine, EngineConfig};

    fn fz() -> Factorizer {
        Factorizer::new(FactorBudget::default()).unwrap()
    }

    fn nats(v: &[u64]) -> Vec<Natural> {
        v.iter().copied().map(Natural::from_u64).collect()
    }

    #[test]
    fn rotation_and_kind() {
        let c = canonicalize(&nats(&[284, 220]), &fz()).unwrap();
        assert_eq!(c.members, nats(&[220, 284]));
        assert_eq!(c.kind, CycleKind::Amicable);
        let c = canonicalize(&nats(&[14288, 15472, 14536, 14264, 12496]), &fz()).unwrap();
        assert_eq!(c.members, nats(&[12496, 14288, 15472, 14536, 14264]));
        assert_eq!((c.kind, c.period()), (CycleKind::Sociable, 5));
        let c = canonicalize(&nats(&[6]), &fz()).unwrap();
        assert_eq!((c.members, c.kind), (nats(&[6]), CycleKind::Perfect));
    }

    #[test]
    fn non_cycles_are_rejected() {
        assert!(matches!(canonicalize(&nats(&[220, 285]), &fz()), Err(Error::NotACycle(_))));
        assert!(matches!(canonicalize(&nats(&[6, 6]), &fz()), Err(Error::NotACycle(_))));
        assert!(!verify_cycle(&nats(&[284, 220, 284]), &fz()).unwrap());
        assert!(!verify_cycle(&[], &fz()).unwrap());
        assert!(verify_cycle(&nats(&[1264460, 1547860, 1727636, 1305184]), &fz()).unwrap());
    }

    #[test]
    fn tallies_follow_first_hit_members() {
        let e = Engine::new(EngineConfig::new(10)).unwrap();
        let mut cat = CycleCatalog::new();
        for s in [220u64, 284, 562] {
            cat.tally(&e.run_sequence(&Natural::from_u64(s)).unwrap(), s != 562, e.factorizer()).unwrap();
        }
        let c = cat.get(&Natural::from_u64(220)).unwrap();
        // s(562) = 284.
        assert_eq!(c.hit_counts, vec![1, 2]);
        assert_eq!((c.total, c.main, c.even), (3, 2, 3));
        assert_eq!(c.to_string(), "[ 220, 284 ]\t3\t(2)\t3\t1|2");

        let r = e.run_sequence(&Natural::from_u64(783225)).unwrap();
        cat.tally(&r, true, e.factorizer()).unwrap();
        let c = cat.get(&Natural::from_u64(1184)).unwrap();
        assert_eq!((c.hit_counts.clone(), c.even), (vec![1, 0], 0));
    }

    #[test]
    fn catalog_lines_round_trip() {
        let e = Engine::new(EngineConfig::new(10)).unwrap();
        let mut cat = CycleCatalog::new();
        for s in 2..3000u64 {
            cat.tally(&e.run_sequence(&Natural::from_u64(s)).unwrap(), s % 3 == 0, e.factorizer()).unwrap();
        }
        assert!(cat.len() >= 4);
        for c in cat.cycles() {
            assert_eq!(c.hit_counts.iter().sum::<u64>(), c.total);
        }
        let lines = cat.lines();
        let back = CycleCatalog::parse_lines(lines.iter().map(String::as_str)).unwrap();
        assert_eq!(back, cat);
    }

    #[test]
    fn tally_is_order_independent() {
        let e = Engine::new(EngineConfig::new(10)).unwrap();
        let records: Vec<_> = (200..1400u64).map(|s| e.run_sequence(&Natural::from_u64(s)).unwrap()).collect();
        let mut forward = CycleCatalog::new();
        let mut backward = CycleCatalog::new();
        for r in &records {
            forward.tally(r, r.start.is_odd(), e.factorizer()).unwrap();
        }
        for r in records.iter().rev() {
            backward.tally(r, r.start.is_odd(), e.factorizer()).unwrap();
        }
        assert_eq!(forward, backward);
    }
}
