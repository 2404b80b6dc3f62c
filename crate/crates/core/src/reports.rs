//! Tables and plot series regenerated from a finished [`RunArchive`].
//!
//! Each report has a typed form for programmatic checks and renders to a
//! [`Table`], which prints as aligned text or CSV.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::arithmetic::Factorizer;
use crate::campaign::RunArchive;
use crate::cycles::{CycleKind, CycleRecord, CATALOG_HEADER};
use crate::engine::{ParityClass, RecordSummary, SequenceRecord, StatusCode};
use crate::error::{Error, Result};
use crate::natural::Natural;

/// A rendered report: headers plus string cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Table { title: title.into(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Right-aligned columns, first column left-aligned.
    pub fn to_text(&self) -> String {
        let columns = self.rows.iter().map(Vec::len).chain([self.headers.len()]).max().unwrap_or(0);
        let mut widths = vec![0; columns];
        for row in std::iter::once(&self.headers).chain(&self.rows) {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        let mut out = format!("# {}\n", self.title);
        for row in std::iter::once(&self.headers).chain(&self.rows) {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = widths[i]) } else { format!("{c:>w$}", w = widths[i]) })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let quote = |c: &String| {
            if c.contains([',', '"', '\n']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.clone()
            }
        };
        let mut out = String::new();
        for row in std::iter::once(&self.headers).chain(&self.rows) {
            let cells: Vec<String> = row.iter().map(quote).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn main_lookup(archive: &RunArchive, start: &Natural) -> bool {
    start.to_u64().and_then(|s| archive.designation(s)).is_some_and(|d| d.is_main)
}

// ---------------------------------------------------------------------------
// Survival

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SurvivalRow {
    pub d: u32,
    pub terminating: u64,
    pub cycling: u64,
    pub open: u64,
}

fn check_bound(archive: &RunArchive, d: u32) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("digit bound must be at least 2, got {d}")));
    }
    if d > archive.digit_bound() {
        return Err(Error::BoundExceeded { requested: d, available: archive.digit_bound() });
    }
    Ok(())
}

/// Status counts had every sequence been stopped at `d` digits, for each `d`.
/// Aborted records are left out.
pub fn survival_table(archive: &RunArchive, d_list: &[u32]) -> Result<Vec<SurvivalRow>> {
    let bound = archive.digit_bound();
    d_list
        .iter()
        .map(|&d| {
            check_bound(archive, d)?;
            let mut row = SurvivalRow { d, terminating: 0, cycling: 0, open: 0 };
            for r in archive.records.iter().filter(|r| r.status != StatusCode::Aborted) {
                match r.classify_at(bound, d)? {
                    StatusCode::Terminated => row.terminating += 1,
                    StatusCode::Cycled => row.cycling += 1,
                    StatusCode::Open => row.open += 1,
                    StatusCode::Aborted => unreachable!("aborted records are skipped"),
                }
            }
            Ok(row)
        })
        .collect()
}

pub fn survival_text(rows: &[SurvivalRow]) -> Table {
    let mut t = Table::new("survival by digit bound", &["digits", "terminating", "cycle", "open"]);
    for r in rows {
        t.push(vec![r.d.to_string(), r.terminating.to_string(), r.cycling.to_string(), r.open.to_string()]);
    }
    t
}

/// Open counts of even starts per sub-interval, one row per digit bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubintervalSurvival {
    /// `[lo, hi)` per column.
    pub intervals: Vec<(u64, u64)>,
    /// `(d, per-interval open counts, total)`.
    pub rows: Vec<(u32, Vec<u64>, u64)>,
}

pub fn even_survival_by_subinterval(archive: &RunArchive, d_list: &[u32], width: u64) -> Result<SubintervalSurvival> {
    if width == 0 {
        return Err(Error::InvalidInput("sub-interval width must be positive".into()));
    }
    let (lo, hi) = (archive.meta.start_lo, archive.meta.start_hi);
    let first = lo / width;
    let intervals: Vec<(u64, u64)> =
        (first..hi.div_ceil(width)).map(|k| ((k * width).max(lo), ((k + 1) * width).min(hi))).collect();
    let bound = archive.digit_bound();
    let mut rows = Vec::new();
    for &d in d_list {
        check_bound(archive, d)?;
        let mut counts = vec![0u64; intervals.len()];
        for r in archive.records.iter().filter(|r| r.status != StatusCode::Aborted && r.start.is_even()) {
            if r.classify_at(bound, d)? == StatusCode::Open {
                let s = r.start.to_u64().expect("campaign starts are words");
                counts[(s / width - first) as usize] += 1;
            }
        }
        let total = counts.iter().sum();
        rows.push((d, counts, total));
    }
    Ok(SubintervalSurvival { intervals, rows })
}

impl SubintervalSurvival {
    pub fn table(&self) -> Table {
        let mut headers = vec!["d".to_string()];
        headers.extend(self.intervals.iter().map(|(_, hi)| format!("<{hi}")));
        headers.push("total".into());
        let mut t = Table { title: "open even starts by sub-interval".into(), headers, rows: Vec::new() };
        for (d, counts, total) in &self.rows {
            let mut row = vec![d.to_string()];
            row.extend(counts.iter().map(u64::to_string));
            row.push(total.to_string());
            t.push(row);
        }
        t
    }
}

// ---------------------------------------------------------------------------
// Parity

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParityRow {
    pub terminating: u64,
    pub cycling: u64,
    pub open: u64,
}

impl ParityRow {
    fn add(&mut self, code: StatusCode) {
        match code {
            StatusCode::Terminated => self.terminating += 1,
            StatusCode::Cycled => self.cycling += 1,
            StatusCode::Open => self.open += 1,
            StatusCode::Aborted => {}
        }
    }

    pub fn total(&self) -> u64 {
        self.terminating + self.cycling + self.open
    }
}

/// Status counts by start parity, at the archive's own bound.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParitySummary {
    pub odd: ParityRow,
    pub all_odd: ParityRow,
    pub even: ParityRow,
    pub all: ParityRow,
    /// Odd starts whose sequence reaches an even value.
    pub changeovers: u64,
    /// First odd square of each changeover, with its count.
    pub by_square: BTreeMap<Natural, u64>,
}

pub fn parity_summary(archive: &RunArchive) -> ParitySummary {
    let mut p = ParitySummary::default();
    for r in &archive.records {
        p.all.add(r.status);
        match &r.parity {
            ParityClass::EvenStart => p.even.add(r.status),
            ParityClass::AllOdd => {
                p.odd.add(r.status);
                p.all_odd.add(r.status);
            }
            ParityClass::OddToEven { square_value, .. } => {
                p.odd.add(r.status);
                p.changeovers += 1;
                *p.by_square.entry(square_value.clone()).or_default() += 1;
            }
        }
    }
    p
}

impl ParitySummary {
    pub fn table(&self) -> Table {
        let mut t = Table::new("status by parity", &["parity", "terminating", "cycle", "open"]);
        for (label, r) in [("odd", self.odd), ("all-odd", self.all_odd), ("even", self.even), ("all", self.all)] {
            t.push(vec![label.into(), r.terminating.to_string(), r.cycling.to_string(), r.open.to_string()]);
        }
        t
    }

    pub fn square_table(&self) -> Table {
        let mut t = Table::new(format!("first odd square of the {} changeovers", self.changeovers), &["square", "root", "count"]);
        for (sq, n) in &self.by_square {
            t.push(vec![sq.to_string(), sq.isqrt().to_string(), n.to_string()]);
        }
        t
    }
}

// ---------------------------------------------------------------------------
// Histograms

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordClass {
    All,
    Terminating,
    AllOddTerminating,
    OddToEvenTerminating,
    /// Terminators containing an even value: even starts and odd-to-even ones.
    EvenTerminating,
    Cycling,
    AllOddCycling,
    Open,
}

impl RecordClass {
    pub fn contains(self, r: &RecordSummary) -> bool {
        let all_odd = r.parity == ParityClass::AllOdd;
        match self {
            RecordClass::All => r.status != StatusCode::Aborted,
            RecordClass::Terminating => r.status == StatusCode::Terminated,
            RecordClass::AllOddTerminating => r.status == StatusCode::Terminated && all_odd,
            RecordClass::OddToEvenTerminating => {
                r.status == StatusCode::Terminated && matches!(r.parity, ParityClass::OddToEven { .. })
            }
            RecordClass::EvenTerminating => r.status == StatusCode::Terminated && !all_odd,
            RecordClass::Cycling => r.status == StatusCode::Cycled,
            RecordClass::AllOddCycling => r.status == StatusCode::Cycled && all_odd,
            RecordClass::Open => r.status == StatusCode::Open,
        }
    }
}

impl FromStr for RecordClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => RecordClass::All,
            "terminating" => RecordClass::Terminating,
            "all-odd-terminating" => RecordClass::AllOddTerminating,
            "odd-to-even-terminating" => RecordClass::OddToEvenTerminating,
            "even-terminating" => RecordClass::EvenTerminating,
            "cycling" => RecordClass::Cycling,
            "all-odd-cycling" => RecordClass::AllOddCycling,
            "open" => RecordClass::Open,
            _ => return Err(Error::Parse(format!("unknown record class {s:?}"))),
        })
    }
}

impl fmt::Display for RecordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordClass::All => "all",
            RecordClass::Terminating => "terminating",
            RecordClass::AllOddTerminating => "all-odd-terminating",
            RecordClass::OddToEvenTerminating => "odd-to-even-terminating",
            RecordClass::EvenTerminating => "even-terminating",
            RecordClass::Cycling => "cycling",
            RecordClass::AllOddCycling => "all-odd-cycling",
            RecordClass::Open => "open",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Length,
    /// Exact bit length of the maximum.
    HeightBits,
    /// Volume rounded up to an integer.
    Volume,
}

impl Metric {
    fn bin(self, r: &RecordSummary) -> u64 {
        match self {
            Metric::Length => r.length,
            Metric::HeightBits => r.height_bits,
            Metric::Volume => r.volume.ceil() as u64,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Metric::Length => "length",
            Metric::HeightBits => "height_bits",
            Metric::Volume => "volume",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    pub metric: String,
    pub class: String,
    pub bins: BTreeMap<u64, u64>,
}

impl Histogram {
    pub fn count(&self, bin: u64) -> u64 {
        self.bins.get(&bin).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(format!("{} of {}", self.metric, self.class), &[&self.metric, "number"]);
        for (b, n) in &self.bins {
            t.push(vec![b.to_string(), n.to_string()]);
        }
        t
    }
}

/// Distribution of `metric` over records in `class`, optionally main ones only.
pub fn histogram(archive: &RunArchive, class: RecordClass, main_only: bool, metric: Metric) -> Histogram {
    let mut bins = BTreeMap::new();
    for r in archive.records.iter().filter(|r| class.contains(r)) {
        if main_only && !main_lookup(archive, &r.start) {
            continue;
        }
        *bins.entry(metric.bin(r)).or_default() += 1;
    }
    let class = if main_only { format!("{class} (main)") } else { class.to_string() };
    Histogram { metric: metric.name().into(), class, bins }
}

pub fn length_distribution(archive: &RunArchive, class: RecordClass, main_only: bool) -> Histogram {
    histogram(archive, class, main_only, Metric::Length)
}

// ---------------------------------------------------------------------------
// Penultimate primes

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PenultimateTally {
    /// `(prime, count)`, most frequent first, ties by prime.
    pub counts: Vec<(Natural, u64)>,
    /// Primes reached from exactly one start other than themselves, with that start.
    pub solitary: Vec<(Natural, Natural)>,
    /// Primes seen only as their own start.
    pub self_only: u64,
}

pub fn penultimate_tally(archive: &RunArchive) -> PenultimateTally {
    let mut counts: HashMap<&Natural, u64> = HashMap::new();
    let mut others: HashMap<&Natural, (u64, &Natural)> = HashMap::new();
    for r in &archive.records {
        let Some(p) = r.penultimate() else { continue };
        *counts.entry(p).or_default() += 1;
        if *p != r.start {
            others.entry(p).or_insert((0, &r.start)).0 += 1;
        }
    }
    let self_only = counts.keys().filter(|p| !others.contains_key(*p)).count() as u64;
    let mut solitary: Vec<(Natural, Natural)> =
        others.into_iter().filter(|(_, (n, _))| *n == 1).map(|(p, (_, s))| (p.clone(), s.clone())).collect();
    solitary.sort();
    let mut counts: Vec<(Natural, u64)> = counts.into_iter().map(|(p, n)| (p.clone(), n)).collect();
    counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    PenultimateTally { counts, solitary, self_only }
}

impl PenultimateTally {
    pub fn count(&self, p: &Natural) -> u64 {
        self.counts.iter().find(|(q, _)| q == p).map_or(0, |(_, n)| *n)
    }

    pub fn table(&self, top: usize) -> Table {
        let mut t = Table::new(
            format!("penultimate primes ({} distinct, {} only as their own start)", self.counts.len(), self.self_only),
            &["prime", "count"],
        );
        for (p, n) in self.counts.iter().take(top) {
            t.push(vec![p.to_string(), n.to_string()]);
        }
        t
    }

    pub fn solitary_table(&self) -> Table {
        let mut t = Table::new("solitary penultimate primes", &["prime", "start"]);
        for (p, s) in &self.solitary {
            t.push(vec![p.to_string(), s.to_string()]);
        }
        t
    }
}

// ---------------------------------------------------------------------------
// Increasing odd runs

/// Every window of `run_length` strictly increasing consecutive values in
/// the odd begin segments of the sequences starting below `limit`,
/// deduplicated and sorted.
pub fn increasing_odd_runs(limit: u64, run_length: usize, factorizer: &Factorizer) -> Result<Vec<Vec<Natural>>> {
    if limit < 3 || run_length < 2 {
        return Err(Error::InvalidInput(format!("need limit >= 3 and run length >= 2, got {limit} and {run_length}")));
    }
    let mut runs = BTreeSet::new();
    let mut segment = Vec::new();
    let mut seen = HashSet::new();
    for start in (3..limit).step_by(2) {
        segment.clear();
        seen.clear();
        let mut n = Natural::from_u64(start);
        while n.is_odd() && n > 1u64 && seen.insert(n.clone()) {
            segment.push(n.clone());
            n = factorizer.aliquot_step(&n)?;
        }
        if n.is_odd() && n == 1u64 {
            segment.push(n);
        }
        let mut rising = 1;
        for i in 1..segment.len() {
            rising = if segment[i] > segment[i - 1] { rising + 1 } else { 1 };
            if rising >= run_length {
                runs.insert(segment[i + 1 - run_length..=i].to_vec());
            }
        }
    }
    Ok(runs.into_iter().collect())
}

/// Whether each value maps to the next under `s` and the values strictly increase.
pub fn verify_increasing_chain(values: &[Natural], factorizer: &Factorizer) -> Result<bool> {
    for w in values.windows(2) {
        if w[1] <= w[0] || factorizer.aliquot_step(&w[0])? != w[1] {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn runs_table(runs: &[Vec<Natural>]) -> Table {
    let mut t = Table::new(format!("{} increasing odd runs", runs.len()), &["run"]);
    for r in runs {
        let list: Vec<String> = r.iter().map(Natural::to_string).collect();
        t.push(vec![list.join(", ")]);
    }
    t
}

// ---------------------------------------------------------------------------
// Mergers

/// How many main sequences (optionally of one final status) have `k` mergers.
pub fn merger_histogram(archive: &RunArchive, status: Option<StatusCode>) -> Histogram {
    let mut bins = BTreeMap::new();
    for r in &archive.records {
        if status.is_some_and(|s| s != r.status) {
            continue;
        }
        let Some(d) = r.start.to_u64().and_then(|s| archive.designation(s)) else { continue };
        if d.is_main {
            *bins.entry(d.merger_count).or_default() += 1;
        }
    }
    let class = match status {
        Some(s) => format!("main sequences with status {}", s.letter()),
        None => "main sequences".into(),
    };
    Histogram { metric: "mergers".into(), class, bins }
}

/// Main starts with the most mergers, most first, ties by start.
pub fn top_merged(archive: &RunArchive, n: usize) -> Vec<(u64, u64)> {
    let mut mains: Vec<(u64, u64)> =
        archive.designations.iter().filter(|d| d.is_main).map(|d| (d.start, d.merger_count)).collect();
    mains.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    mains.truncate(n);
    mains
}

// ---------------------------------------------------------------------------
// Odd opens

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OddOpenReport {
    /// Number of odd values before the first even one, with counts.
    pub odd_lengths: BTreeMap<u64, u64>,
    /// Square root of the entry square, with count and the main roots reached.
    pub squares: BTreeMap<Natural, (u64, BTreeSet<u64>)>,
    /// Main root, with the entry square roots and count.
    pub per_main: BTreeMap<u64, (BTreeSet<Natural>, u64)>,
}

/// Entry squares of odd starts whose sequences are open.
pub fn odd_open_entry_squares(archive: &RunArchive) -> OddOpenReport {
    let mut rep = OddOpenReport::default();
    for r in archive.records.iter().filter(|r| r.status == StatusCode::Open) {
        let ParityClass::OddToEven { square_value, square_index } = &r.parity else { continue };
        *rep.odd_lengths.entry(square_index + 1).or_default() += 1;
        let root = square_value.isqrt();
        let main = r.start.to_u64().and_then(|s| archive.designation(s)).map(|d| d.main_root);
        let sq = rep.squares.entry(root.clone()).or_default();
        sq.0 += 1;
        if let Some(m) = main {
            sq.1.insert(m);
            let pm = rep.per_main.entry(m).or_default();
            pm.0.insert(root);
            pm.1 += 1;
        }
    }
    rep
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

impl OddOpenReport {
    pub fn tables(&self) -> Vec<Table> {
        let mut lengths = Table::new("odd steps before the first even value", &["odd length", "number"]);
        for (l, n) in &self.odd_lengths {
            lengths.push(vec![l.to_string(), n.to_string()]);
        }
        let mut squares = Table::new("entry squares", &["square of", "times", "merge with"]);
        for (root, (n, mains)) in &self.squares {
            squares.push(vec![root.to_string(), n.to_string(), join(mains, " ")]);
        }
        let mut mains = Table::new("open main sequences entered from odd starts", &["open start", "squares", "times"]);
        for (m, (roots, n)) in &self.per_main {
            let set = format!("{{ {} }}", join(roots.iter().map(|r| format!("{r}^2")), ", "));
            mains.push(vec![m.to_string(), set, n.to_string()]);
        }
        vec![lengths, squares, mains]
    }
}

// ---------------------------------------------------------------------------
// Cycles

/// Catalog rows split as perfect and sociable cycles, then amicable pairs,
/// each followed by a total row.
pub fn cycle_report(archive: &RunArchive) -> String {
    let mut out = String::new();
    let groups: [(&str, fn(&CycleRecord) -> bool); 2] = [
        ("perfect and sociable", |c| c.kind != CycleKind::Amicable),
        ("amicable", |c| c.kind == CycleKind::Amicable),
    ];
    for (name, keep) in groups {
        let rows: Vec<&CycleRecord> = archive.catalog.cycles().filter(|c| keep(c)).collect();
        out.push_str(&format!("# {name}: {} cycles\n{CATALOG_HEADER}\n", rows.len()));
        for c in &rows {
            out.push_str(&format!("{c}\n"));
        }
    }
    let (total, main, even) = archive
        .catalog
        .cycles()
        .fold((0, 0, 0), |(t, m, e), c| (t + c.total, m + c.main, e + c.even));
    out.push_str(&format!("total\t{total}\t({main})\t{even}\n"));
    out
}

/// Per cycle, odd starts reaching it as main and as merging sequences.
pub fn odd_cycler_table(archive: &RunArchive) -> Vec<(CycleRecord, u64, u64)> {
    let mut counts: BTreeMap<&Natural, (u64, u64)> = BTreeMap::new();
    for r in archive.records.iter().filter(|r| r.status == StatusCode::Cycled && r.start.is_odd()) {
        let Some((_, _, min)) = r.cycle() else { continue };
        let e = counts.entry(min).or_default();
        if main_lookup(archive, &r.start) {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    counts
        .into_iter()
        .filter_map(|(min, (m, g))| archive.catalog.get(min).map(|c| (c.clone(), m, g)))
        .collect()
}

pub fn odd_cycler_text(rows: &[(CycleRecord, u64, u64)]) -> Table {
    let mut t = Table::new("cycles reached from odd starts", &["cycle", "main", "merging"]);
    for (c, m, g) in rows {
        t.push(vec![c.bracketed(), m.to_string(), g.to_string()]);
    }
    let (m, g) = rows.iter().fold((0, 0), |(a, b), (_, m, g)| (a + m, b + g));
    t.push(vec![format!("{} cycles", rows.len()), m.to_string(), g.to_string()]);
    t
}

// ---------------------------------------------------------------------------
// Profiles

/// `(step, decimal digits)` for each entry, counting the closing repeat of a cycle.
pub fn profile_series(record: &SequenceRecord) -> Vec<(u64, u32)> {
    record.trajectory.digit_counts()
}

pub fn profile_table(record: &SequenceRecord) -> Table {
    let mut t = Table::new(format!("profile of {}", record.start), &["step", "digits"]);
    for (i, d) in profile_series(record) {
        t.push(vec![i.to_string(), d.to_string()]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::{aliquot_brute, FactorBudget};
    use crate::campaign::{run_campaign, CampaignConfig};
    use crate::engine::{Engine, EngineConfig};

    fn archive(lo: u64, hi: u64, d: u32) -> (tempfile::TempDir, RunArchive) {
        let dir = tempfile::tempdir().unwrap();
        let a = run_campaign(CampaignConfig::new(lo, hi, d, dir.path())).unwrap();
        (dir, a)
    }

    fn nat(v: u64) -> Natural {
        Natural::from_u64(v)
    }

    fn fz() -> Factorizer {
        Factorizer::new(FactorBudget::default()).unwrap()
    }

    #[test]
    fn survival_at_small_bound_matches_brute_iteration() {
        let (_d, a) = archive(2, 10, 10);
        let rows = survival_table(&a, &[2]).unwrap();
        // Iterate by brute force, stopping at a value with two digits.
        let (mut t, mut c, mut o) = (0, 0, 0);
        for start in 2..10u64 {
            let mut seen = vec![start];
            let mut n = start;
            loop {
                if n >= 10 {
                    o += 1;
                    break;
                }
                n = aliquot_brute(n).unwrap();
                if n == 1 {
                    t += 1;
                    break;
                }
                if seen.contains(&n) {
                    c += 1;
                    break;
                }
                seen.push(n);
            }
        }
        assert_eq!(rows[0], SurvivalRow { d: 2, terminating: t, cycling: c, open: o });
        assert_eq!(t + c + o, 8);
        assert!(matches!(survival_table(&a, &[11]), Err(Error::BoundExceeded { requested: 11, available: 10 })));
    }

    #[test]
    fn survival_at_own_bound_equals_final_tallies() {
        let (_d, a) = archive(1, 3000, 9);
        let row = survival_table(&a, &[9]).unwrap()[0];
        let t = &a.meta.tallies;
        assert_eq!((row.terminating, row.cycling, row.open), (t.terminated, t.cycled, t.open));
        let rows = survival_table(&a, &[3, 5, 7, 9]).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].open <= w[0].open);
        }
        // Sub-interval columns add up to the even open count.
        let sub = even_survival_by_subinterval(&a, &[9], 1000).unwrap();
        assert_eq!(sub.intervals, vec![(1, 1000), (1000, 2000), (2000, 3000)]);
        let even_open = a.records.iter().filter(|r| r.start.is_even() && r.status == StatusCode::Open).count();
        assert_eq!(sub.rows[0].2 as usize, even_open);
    }

    #[test]
    fn parity_rows_add_up() {
        let (_d, a) = archive(1, 5000, 10);
        let p = parity_summary(&a);
        assert_eq!(p.odd.total() + p.even.total(), p.all.total());
        assert_eq!(p.all.total(), 4999);
        assert_eq!(p.odd.total() - p.all_odd.total(), p.changeovers);
        assert_eq!(p.by_square.values().sum::<u64>(), p.changeovers);
        assert!(p.by_square.keys().all(|s| s.is_square() && s.is_odd()));
        assert_eq!(p.all_odd.open, 0);
        assert_eq!(p.table().rows.len(), 4);
    }

    #[test]
    fn histogram_totals_match_class_sizes() {
        let (_d, a) = archive(1, 5000, 10);
        for class in [RecordClass::AllOddTerminating, RecordClass::EvenTerminating, RecordClass::Cycling, RecordClass::Open] {
            let size = a.records.iter().filter(|r| class.contains(r)).count() as u64;
            for metric in [Metric::Length, Metric::HeightBits, Metric::Volume] {
                assert_eq!(histogram(&a, class, false, metric).total(), size);
            }
        }
        let h = length_distribution(&a, RecordClass::AllOddTerminating, false);
        // The odd primes below 5000 terminate in one step.
        assert_eq!(h.count(1), (3..5000u64).filter(|&n| crate::arithmetic::is_prime_u64(n)).count() as u64);
        assert_eq!(h.count(0), 1);
    }

    #[test]
    fn empty_archive_gives_empty_histograms() {
        let (_d, mut a) = archive(2, 4, 5);
        a.records.clear();
        assert_eq!(length_distribution(&a, RecordClass::All, false).total(), 0);
        assert!(odd_open_entry_squares(&a).squares.is_empty());
    }

    #[test]
    fn penultimate_counts() {
        let (_d, a) = archive(100_700, 100_800, 10);
        let t = penultimate_tally(&a);
        assert!(t.count(&nat(9173)) >= 1);
        assert!(t.solitary.contains(&(nat(9173), nat(100771))));
        let total: u64 = t.counts.iter().map(|(_, n)| n).sum();
        assert_eq!(total, a.meta.tallies.terminated);
    }

    #[test]
    fn primes_count_themselves() {
        let dir = tempfile::tempdir().unwrap();
        let a = run_campaign(CampaignConfig::new(2, 4, 5, dir.path())).unwrap();
        let t = penultimate_tally(&a);
        assert_eq!(t.counts, vec![(nat(2), 1), (nat(3), 1)]);
        assert_eq!(t.self_only, 2);
    }

    #[test]
    fn short_odd_runs_agree_with_brute_force() {
        let runs = increasing_odd_runs(15, 2, &fz()).unwrap();
        let mut expected = BTreeSet::new();
        for start in (3..15u64).step_by(2) {
            let mut n = start;
            let mut seen = HashSet::new();
            while n % 2 == 1 && n > 1 && seen.insert(n) {
                let next = aliquot_brute(n).unwrap();
                if next % 2 == 1 && next > n {
                    expected.insert(vec![nat(n), nat(next)]);
                }
                n = next;
            }
        }
        assert_eq!(runs, expected.into_iter().collect::<Vec<_>>());
        assert!(increasing_odd_runs(2, 2, &fz()).is_err());
    }

    #[test]
    fn chain_verification() {
        let fz = fz();
        assert!(verify_increasing_chain(&[38745, 41895, 47025, 49695].map(nat), &fz).unwrap());
        assert!(!verify_increasing_chain(&[41895, 38745].map(nat), &fz).unwrap());
        assert!(!verify_increasing_chain(&[38745, 41896].map(nat), &fz).unwrap());
    }

    #[test]
    fn merger_histogram_counts_each_main_once() {
        let (_d, a) = archive(1, 5000, 10);
        let h = merger_histogram(&a, None);
        assert_eq!(h.total() as usize, a.designations.iter().filter(|d| d.is_main).count());
        let merged: u64 = h.bins.iter().map(|(k, n)| k * n).sum();
        assert_eq!(merged as usize, a.designations.iter().filter(|d| !d.is_main).count());
        let top = top_merged(&a, 3);
        assert!(top.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn odd_open_squares_are_consistent() {
        let (_d, a) = archive(1, 20_000, 10);
        let rep = odd_open_entry_squares(&a);
        let odd_open = a.records.iter().filter(|r| r.start.is_odd() && r.status == StatusCode::Open).count() as u64;
        assert_eq!(rep.odd_lengths.values().sum::<u64>(), odd_open);
        assert_eq!(rep.squares.values().map(|(n, _)| n).sum::<u64>(), odd_open);
        for main in rep.per_main.keys() {
            assert!(a.designation(*main).unwrap().is_main);
        }
    }

    #[test]
    fn cycle_report_layout() {
        let (_d, a) = archive(1, 3000, 10);
        let text = cycle_report(&a);
        assert!(text.starts_with("# perfect and sociable"));
        assert!(text.contains("[ 6 ]\t"));
        assert!(text.contains("[ 220, 284 ]\t"));
        let (_e, mut empty) = archive(2, 3, 5);
        empty.catalog = Default::default();
        assert_eq!(
            cycle_report(&empty),
            format!("# perfect and sociable: 0 cycles\n{CATALOG_HEADER}\n# amicable: 0 cycles\n{CATALOG_HEADER}\ntotal\t0\t(0)\t0\n")
        );
        let odd = odd_cycler_table(&a);
        let odd_cyclers = a.records.iter().filter(|r| r.start.is_odd() && r.status == StatusCode::Cycled).count();
        assert_eq!(odd.iter().map(|(_, m, g)| m + g).sum::<u64>() as usize, odd_cyclers);
    }

    #[test]
    fn profiles() {
        let e = Engine::new(EngineConfig::new(10)).unwrap();
        let r = e.run_sequence(&nat(100771)).unwrap();
        assert_eq!(profile_series(&r), vec![(0, 6), (1, 4), (2, 1)]);
        let r = e.run_sequence(&nat(855441)).unwrap();
        let series = profile_series(&r);
        assert_eq!((series.len(), series[0]), (69, (0, 6)));
        let top = series.iter().map(|(_, d)| *d).max().unwrap();
        assert_eq!(top, r.max_value.decimal_digits());
    }

    #[test]
    fn tables_render() {
        let mut t = Table::new("demo", &["a", "bb"]);
        t.push(vec!["x,y".into(), "1".into()]);
        assert_eq!(t.to_text(), "# demo\na    bb\nx,y   1\n");
        assert_eq!(t.to_csv(), "a,bb\n\"x,y\",1\n");
    }
}
