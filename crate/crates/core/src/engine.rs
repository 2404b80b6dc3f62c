//! Running a single aliquot sequence to termination, a cycle, the digit
//! bound, or a factorization failure.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arithmetic::{is_prime, FactorBudget, Factorizer};
use crate::error::{Error, Result};
use crate::natural::Natural;

/// Values below this are kept as landmarks in compressed trajectories.
pub const DEFAULT_LANDMARK_LIMIT: u64 = 1_000_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Stop once an entry has at least this many decimal digits.
    pub digit_bound: u32,
    pub budget: FactorBudget,
    pub keep_full_trajectory: bool,
    /// Compressed trajectories keep every entry below this value.
    pub landmark_limit: u64,
}

impl EngineConfig {
    pub fn new(digit_bound: u32) -> Self {
        EngineConfig {
            digit_bound,
            budget: FactorBudget::default(),
            keep_full_trajectory: true,
            landmark_limit: DEFAULT_LANDMARK_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.digit_bound < 2 {
            return Err(Error::Config(format!("digit bound must be at least 2, got {}", self.digit_bound)));
        }
        self.budget.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    /// Reached 1. `penultimate_prime` is `None` only for the start 1.
    Terminated { penultimate_prime: Option<Natural> },
    /// `trajectory[k0 + c] == trajectory[k0]`; `members` lists the cycle
    /// from `trajectory[k0]` on, in iteration order.
    Cycled { k0: u64, c: u64, members: Vec<Natural> },
    /// An entry with at least `digit_bound` digits was produced.
    Open { digit_bound: u32 },
    /// Factoring `failed_value` exceeded the budget.
    Aborted { failed_value: Natural },
}

impl Status {
    pub fn code(&self) -> StatusCode {
        match self {
            Status::Terminated { .. } => StatusCode::Terminated,
            Status::Cycled { .. } => StatusCode::Cycled,
            Status::Open { .. } => StatusCode::Open,
            Status::Aborted { .. } => StatusCode::Aborted,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatusCode {
    Terminated,
    Cycled,
    Open,
    Aborted,
}

impl StatusCode {
    pub fn letter(self) -> char {
        match self {
            StatusCode::Terminated => 'T',
            StatusCode::Cycled => 'C',
            StatusCode::Open => 'O',
            StatusCode::Aborted => 'A',
        }
    }

    pub fn from_letter(c: &str) -> Result<Self> {
        match c {
            "T" => Ok(StatusCode::Terminated),
            "C" => Ok(StatusCode::Cycled),
            "O" => Ok(StatusCode::Open),
            "A" => Ok(StatusCode::Aborted),
            other => Err(Error::Parse(format!("unknown status code {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParityClass {
    AllOdd,
    /// Odd start that reaches an even value; `square_value` is the odd
    /// square immediately preceding the first even entry.
    OddToEven { square_value: Natural, square_index: u64 },
    EvenStart,
}

impl fmt::Display for ParityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParityClass::AllOdd => write!(f, "odd"),
            ParityClass::EvenStart => write!(f, "even"),
            ParityClass::OddToEven { square_value, square_index } => {
                write!(f, "odd>even:{square_value}@{square_index}")
            }
        }
    }
}

impl FromStr for ParityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "odd" => Ok(ParityClass::AllOdd),
            "even" => Ok(ParityClass::EvenStart),
            _ => {
                let rest = s
                    .strip_prefix("odd>even:")
                    .ok_or_else(|| Error::Parse(format!("unknown parity class {s:?}")))?;
                let (value, index) = rest
                    .split_once('@')
                    .ok_or_else(|| Error::Parse(format!("parity class without index: {s:?}")))?;
                Ok(ParityClass::OddToEven {
                    square_value: value.parse()?,
                    square_index: index.parse().map_err(|_| Error::Parse(format!("bad index in {s:?}")))?,
                })
            }
        }
    }
}

/// Bounded-memory form of a trajectory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressedTrajectory {
    /// Decimal digit count of every entry.
    pub digits: Vec<u32>,
    /// `(index, value)` for every entry below the landmark limit, plus the
    /// start and the first maximum.
    pub landmarks: Vec<(u64, Natural)>,
    /// The last (up to) three entries with their indices.
    pub tail: Vec<(u64, Natural)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trajectory {
    Full(Vec<Natural>),
    Compressed(CompressedTrajectory),
}

impl Trajectory {
    pub fn full(&self) -> Option<&[Natural]> {
        match self {
            Trajectory::Full(v) => Some(v),
            Trajectory::Compressed(_) => None,
        }
    }

    /// Number of stored steps, counting the closing repeat of a cycle.
    pub fn entry_count(&self) -> usize {
        match self {
            Trajectory::Full(v) => v.len(),
            Trajectory::Compressed(c) => c.digits.len(),
        }
    }

    /// `(step, decimal digits)` for every entry.
    pub fn digit_counts(&self) -> Vec<(u64, u32)> {
        match self {
            Trajectory::Full(v) => v.iter().enumerate().map(|(i, x)| (i as u64, x.decimal_digits())).collect(),
            Trajectory::Compressed(c) => c.digits.iter().enumerate().map(|(i, d)| (i as u64, *d)).collect(),
        }
    }

    /// Indexed entries available for merge detection, in trajectory order.
    pub fn indexed_values(&self) -> Box<dyn Iterator<Item = (u64, &Natural)> + '_> {
        match self {
            Trajectory::Full(v) => Box::new(v.iter().enumerate().map(|(i, x)| (i as u64, x))),
            Trajectory::Compressed(c) => Box::new(c.landmarks.iter().map(|(i, x)| (*i, x))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub length: u64,
    pub max_index: u64,
    pub height_digits: f64,
    pub height_bits: u64,
    pub volume: f64,
}

/// One computed aliquot sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRecord {
    pub start: Natural,
    pub digit_bound: u32,
    pub trajectory: Trajectory,
    pub status: Status,
    pub length: u64,
    pub max_value: Natural,
    pub max_index: u64,
    pub height_digits: f64,
    pub height_bits: u64,
    pub volume: f64,
    pub parity: ParityClass,
}

/// Running metrics over the entries that count towards length and volume.
struct MetricsAccumulator {
    count: u64,
    max_value: Natural,
    max_index: u64,
    volume: f64,
}

impl MetricsAccumulator {
    fn new(first: &Natural) -> Self {
        MetricsAccumulator { count: 1, max_value: first.clone(), max_index: 0, volume: first.log10() }
    }

    fn observe(&mut self, value: &Natural) {
        if *value > self.max_value {
            self.max_value = value.clone();
            self.max_index = self.count;
        }
        self.volume += value.log10();
        self.count += 1;
    }

    fn finish(self) -> (Natural, Metrics) {
        let metrics = Metrics {
            length: self.count - 1,
            max_index: self.max_index,
            height_digits: self.max_value.log10(),
            height_bits: self.max_value.bit_length(),
            volume: self.volume,
        };
        (self.max_value, metrics)
    }
}

/// Length, maximum, height and volume over `values` (all entries counted;
/// callers drop the closing repeat of a cycle first).
pub fn compute_metrics(values: &[Natural]) -> (Natural, Metrics) {
    let mut acc = MetricsAccumulator::new(&values[0]);
    for v in &values[1..] {
        acc.observe(v);
    }
    acc.finish()
}

/// Minimal preperiod `k0` and then minimal period `c` of the first repeat.
pub fn detect_cycle(trajectory: &[Natural]) -> Option<(u64, u64)> {
    let mut seen: HashMap<&Natural, usize> = HashMap::new();
    for (i, v) in trajectory.iter().enumerate() {
        if let Some(&j) = seen.get(v) {
            return Some((j as u64, (i - j) as u64));
        }
        seen.insert(v, i);
    }
    None
}

/// Parity class of a full trajectory.
pub fn parity_profile(trajectory: &[Natural]) -> ParityClass {
    match trajectory.first() {
        None => ParityClass::AllOdd,
        Some(start) if start.is_even() => ParityClass::EvenStart,
        Some(_) => match trajectory.iter().position(Natural::is_even) {
            None => ParityClass::AllOdd,
            Some(i) => ParityClass::OddToEven {
                square_value: trajectory[i - 1].clone(),
                square_index: (i - 1) as u64,
            },
        },
    }
}

impl SequenceRecord {
    /// Builds a record from explicit values; used for replaying stored
    /// trajectories and for constructing synthetic fixtures.
    pub fn from_values(values: Vec<Natural>, status: Status, digit_bound: u32) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty trajectory".into()));
        }
        let counted = match &status {
            Status::Cycled { k0, c, .. } => (*k0 + *c) as usize,
            _ => values.len(),
        };
        if counted == 0 || counted > values.len() {
            return Err(Error::InvalidInput("cycle indices outside the trajectory".into()));
        }
        let (max_value, m) = compute_metrics(&values[..counted]);
        let parity = parity_profile(&values);
        Ok(SequenceRecord {
            start: values[0].clone(),
            digit_bound,
            trajectory: Trajectory::Full(values),
            status,
            length: m.length,
            max_value,
            max_index: m.max_index,
            height_digits: m.height_digits,
            height_bits: m.height_bits,
            volume: m.volume,
            parity,
        })
    }

    pub fn is_main_candidate(&self) -> bool {
        !matches!(self.status, Status::Aborted { .. })
    }

    /// Classification had the sequence been stopped at `d` digits.
    pub fn classify_at(&self, d: u32) -> Result<StatusCode> {
        classify_summary(self.status.code(), &self.max_value, self.digit_bound, d)
    }

    pub fn summary(&self) -> RecordSummary {
        let detail = match &self.status {
            Status::Terminated { penultimate_prime: Some(p) } => Detail::Penultimate(p.clone()),
            Status::Terminated { penultimate_prime: None } => Detail::None,
            Status::Cycled { k0, c, members } => Detail::Cycle {
                k0: *k0,
                c: *c,
                min: members.iter().min().cloned().unwrap_or_default(),
            },
            Status::Open { digit_bound } => Detail::Bound(*digit_bound),
            Status::Aborted { failed_value } => Detail::Failed(failed_value.clone()),
        };
        RecordSummary {
            start: self.start.clone(),
            status: self.status.code(),
            length: self.length,
            height_digits: self.height_digits,
            height_bits: self.height_bits,
            volume: self.volume,
            parity: self.parity.clone(),
            detail,
            max_value: self.max_value.clone(),
            max_index: self.max_index,
        }
    }
}

fn classify_summary(status: StatusCode, max_value: &Natural, computed: u32, d: u32) -> Result<StatusCode> {
    if status == StatusCode::Aborted {
        return Err(Error::InvalidInput("aborted records have no classification".into()));
    }
    if d > computed {
        return Err(Error::InvalidInput(format!("digit bound {d} exceeds the computed bound {computed}")));
    }
    if max_value.decimal_digits() >= d {
        Ok(StatusCode::Open)
    } else {
        Ok(status)
    }
}

/// Runs sequences under a fixed configuration.
#[derive(Clone, Debug)]
pub struct Engine {
    config: EngineConfig,
    factorizer: Factorizer,
    threshold: Natural,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        let factorizer = Factorizer::new(config.budget)?;
        let threshold = Natural::pow10(config.digit_bound - 1);
        Ok(Engine { config, factorizer, threshold })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn factorizer(&self) -> &Factorizer {
        &self.factorizer
    }

    /// Iterates `s` from `start` until 1, a repeat, the digit bound, or a
    /// factorization failure, whichever comes first.
    pub fn run_sequence(&self, start: &Natural) -> Result<SequenceRecord> {
        if start.is_zero() {
            return Err(Error::InvalidInput("starting value must be at least 1".into()));
        }
        let mut builder = TrajectoryBuilder::new(start, &self.config);
        let mut seen: HashMap<Natural, u64> = HashMap::new();
        seen.insert(start.clone(), 0);

        let status = if start.is_one() {
            Status::Terminated { penultimate_prime: None }
        } else if *start >= self.threshold {
            Status::Open { digit_bound: self.config.digit_bound }
        } else {
            let mut current = start.clone();
            let mut index = 0u64;
            loop {
                let next = match self.factorizer.aliquot_step(&current) {
                    Ok(next) => next,
                    Err(Error::FactorFailure { .. } | Error::OversizeInput { .. }) => {
                        break Status::Aborted { failed_value: current };
                    }
                    Err(e) => return Err(e),
                };
                index += 1;
                if next.is_one() {
                    debug_assert!(is_prime(&current));
                    builder.push(&next, true);
                    break Status::Terminated { penultimate_prime: Some(current) };
                }
                if next >= self.threshold {
                    builder.push(&next, true);
                    break Status::Open { digit_bound: self.config.digit_bound };
                }
                if let Some(&k0) = seen.get(&next) {
                    // The closing repeat is stored but not counted.
                    builder.push(&next, false);
                    let mut members: Vec<(u64, Natural)> = seen
                        .into_iter()
                        .filter(|(_, i)| *i >= k0)
                        .map(|(v, i)| (i, v))
                        .collect();
                    members.sort_by_key(|(i, _)| *i);
                    let members = members.into_iter().map(|(_, v)| v).collect();
                    break Status::Cycled { k0, c: index - k0, members };
                }
                seen.insert(next.clone(), index);
                builder.push(&next, true);
                current = next;
            }
        };
        Ok(builder.finish(start, status, self.config.digit_bound))
    }
}

struct TrajectoryBuilder {
    full: Option<Vec<Natural>>,
    digits: Vec<u32>,
    landmarks: Vec<(u64, Natural)>,
    landmark_limit: u64,
    last: Vec<(u64, Natural)>,
    index: u64,
    metrics: MetricsAccumulator,
    parity: ParityClass,
    previous: Natural,
}

impl TrajectoryBuilder {
    fn new(start: &Natural, config: &EngineConfig) -> Self {
        let parity = if start.is_even() { ParityClass::EvenStart } else { ParityClass::AllOdd };
        let mut b = TrajectoryBuilder {
            full: config.keep_full_trajectory.then(|| vec![start.clone()]),
            digits: Vec::new(),
            landmarks: Vec::new(),
            landmark_limit: config.landmark_limit,
            last: Vec::new(),
            index: 0,
            metrics: MetricsAccumulator::new(start),
            parity,
            previous: start.clone(),
        };
        if b.full.is_none() {
            b.record_compressed(start);
            if *start >= b.landmark_limit {
                b.landmarks.push((0, start.clone()));
            }
        }
        b
    }

    fn record_compressed(&mut self, value: &Natural) {
        self.digits.push(value.decimal_digits());
        if *value < self.landmark_limit {
            self.landmarks.push((self.index, value.clone()));
        }
        if self.last.len() == 3 {
            self.last.remove(0);
        }
        self.last.push((self.index, value.clone()));
    }

    fn push(&mut self, value: &Natural, counted: bool) {
        self.index += 1;
        if matches!(self.parity, ParityClass::AllOdd) && value.is_even() {
            self.parity = ParityClass::OddToEven {
                square_value: self.previous.clone(),
                square_index: self.index - 1,
            };
        }
        if counted {
            self.metrics.observe(value);
        }
        match &mut self.full {
            Some(v) => v.push(value.clone()),
            None => self.record_compressed(value),
        }
        self.previous = value.clone();
    }

    fn finish(self, start: &Natural, status: Status, digit_bound: u32) -> SequenceRecord {
        let (max_value, m) = self.metrics.finish();
        let trajectory = match self.full {
            Some(v) => Trajectory::Full(v),
            None => {
                let mut landmarks = self.landmarks;
                if max_value >= self.landmark_limit {
                    landmarks.push((m.max_index, max_value.clone()));
                    landmarks.sort_by_key(|(i, _)| *i);
                }
                Trajectory::Compressed(CompressedTrajectory { digits: self.digits, landmarks, tail: self.last })
            }
        };
        SequenceRecord {
            start: start.clone(),
            digit_bound,
            trajectory,
            status,
            length: m.length,
            max_value,
            max_index: m.max_index,
            height_digits: m.height_digits,
            height_bits: m.height_bits,
            volume: m.volume,
            parity: self.parity,
        }
    }
}

/// Status-specific last field of a record line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Detail {
    None,
    Penultimate(Natural),
    Cycle { k0: u64, c: u64, min: Natural },
    Bound(u32),
    Failed(Natural),
}

/// The persisted, one-line form of a [`SequenceRecord`].
///
/// Tab-separated fields, in order: start, status letter (`T`/`C`/`O`/`A`),
/// length, height in decimal digits (4 decimals), height in bits, volume
/// (3 decimals), parity class (`odd`, `even` or `odd>even:SQUARE@INDEX`),
/// detail (penultimate prime or `-` for `T`; `k0,c,cycle-minimum` for `C`;
/// the digit bound for `O`; the unfactored value for `A`), maximum value,
/// index of the first maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordSummary {
    pub start: Natural,
    pub status: StatusCode,
    pub length: u64,
    pub height_digits: f64,
    pub height_bits: u64,
    pub volume: f64,
    pub parity: ParityClass,
    pub detail: Detail,
    pub max_value: Natural,
    pub max_index: u64,
}

impl RecordSummary {
    pub fn classify_at(&self, computed_bound: u32, d: u32) -> Result<StatusCode> {
        classify_summary(self.status, &self.max_value, computed_bound, d)
    }

    pub fn penultimate(&self) -> Option<&Natural> {
        match &self.detail {
            Detail::Penultimate(p) => Some(p),
            _ => None,
        }
    }

    pub fn cycle(&self) -> Option<(u64, u64, &Natural)> {
        match &self.detail {
            Detail::Cycle { k0, c, min } => Some((*k0, *c, min)),
            _ => None,
        }
    }
}

impl fmt::Display for RecordSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let detail = match &self.detail {
            Detail::None => "-".to_string(),
            Detail::Penultimate(p) => p.to_string(),
            Detail::Cycle { k0, c, min } => format!("{k0},{c},{min}"),
            Detail::Bound(d) => d.to_string(),
            Detail::Failed(v) => v.to_string(),
        };
        write!(
            f,
            "{}\t{}\t{}\t{:.4}\t{}\t{:.3}\t{}\t{}\t{}\t{}",
            self.start,
            self.status.letter(),
            self.length,
            self.height_digits,
            self.height_bits,
            self.volume,
            self.parity,
            detail,
            self.max_value,
            self.max_index
        )
    }
}

impl FromStr for RecordSummary {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim_end_matches(['\n', '\r']).split('\t').collect();
        if fields.len() != 10 {
            return Err(Error::Parse(format!("record line needs 10 fields, got {}: {line:?}", fields.len())));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| Error::Parse(format!("bad integer {s:?}")));
        let real = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad real {s:?}")));
        let status = StatusCode::from_letter(fields[1])?;
        let detail = match (status, fields[7]) {
            (StatusCode::Terminated, "-") => Detail::None,
            (StatusCode::Terminated, p) => Detail::Penultimate(p.parse()?),
            (StatusCode::Cycled, s) => {
                let parts: Vec<&str> = s.split(',').collect();
                if parts.len() != 3 {
                    return Err(Error::Parse(format!("bad cycle detail {s:?}")));
                }
                Detail::Cycle { k0: num(parts[0])?, c: num(parts[1])?, min: parts[2].parse()? }
            }
            (StatusCode::Open, s) => Detail::Bound(num(s)? as u32),
            (StatusCode::Aborted, s) => Detail::Failed(s.parse()?),
        };
        Ok(RecordSummary {
            start: fields[0].parse()?,
            status,
            length: num(fields[2])?,
            height_digits: real(fields[3])?,
            height_bits: num(fields[4])?,
            volume: real(fields[5])?,
            parity: fields[6].parse()?,
            detail,
            max_value: fields[8].parse()?,
            max_index: num(fields[9])?,
        })
    }
}
