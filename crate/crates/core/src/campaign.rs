//! Campaigns over ranges of starting values.
//!
//! Records are computed chunk by chunk on a worker pool and committed by a
//! single thread in ascending start order, so the archive does not depend
//! on the worker count. Progress can be checkpointed and resumed; a resumed
//! run produces the same archive bytes as an uninterrupted one.
//!
//! Archive layout (all inside the output directory):
//!
//! - `records.tsv`: one [`RecordSummary`] line per start
//! - `events.tsv`: merger event log, one junction plus clause flag per line
//! - `designations.tsv`: start, is_main, main root, merger count
//! - `cycles.txt`: the cycle catalog
//! - `meta.txt`: configuration and status totals
//!
//! Wall time goes to `run.log`, which is not part of the archive proper.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arithmetic::FactorBudget;
use crate::cycles::CycleCatalog;
use crate::engine::{Engine, EngineConfig, RecordSummary, Status, StatusCode};
use crate::error::{Error, Result};
use crate::mergers::{MergerBook, MergerBookState, MergerEvent, DEFAULT_INDEX_LIMIT};
use crate::natural::Natural;

pub const RECORDS_FILE: &str = "records.tsv";
pub const EVENTS_FILE: &str = "events.tsv";
pub const DESIGNATIONS_FILE: &str = "designations.tsv";
pub const CYCLES_FILE: &str = "cycles.txt";
pub const META_FILE: &str = "meta.txt";
pub const RUN_LOG_FILE: &str = "run.log";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

/// Archive files in digest order.
pub const ARCHIVE_FILES: [&str; 5] = [RECORDS_FILE, EVENTS_FILE, DESIGNATIONS_FILE, CYCLES_FILE, META_FILE];

const CHUNK: u64 = 4096;
const CHECKPOINT_MAGIC: &[u8; 8] = b"ALIQCKP1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParityFilter {
    All,
    Odd,
    Even,
}

impl ParityFilter {
    pub fn accepts(self, n: u64) -> bool {
        match self {
            ParityFilter::All => true,
            ParityFilter::Odd => n % 2 == 1,
            ParityFilter::Even => n % 2 == 0,
        }
    }
}

impl fmt::Display for ParityFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParityFilter::All => "all",
            ParityFilter::Odd => "odd",
            ParityFilter::Even => "even",
        })
    }
}

impl FromStr for ParityFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(ParityFilter::All),
            "odd" => Ok(ParityFilter::Odd),
            "even" => Ok(ParityFilter::Even),
            _ => Err(Error::Parse(format!("parity filter must be all, odd or even, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Inclusive.
    pub start_lo: u64,
    /// Exclusive.
    pub start_hi: u64,
    pub digit_bound: u32,
    pub budget: FactorBudget,
    pub parity_filter: ParityFilter,
    /// Starts between checkpoints; 0 disables periodic checkpoints.
    pub checkpoint_every: u64,
    pub worker_count: usize,
    pub output_dir: PathBuf,
    pub index_limit: u64,
}

impl CampaignConfig {
    pub fn new(start_lo: u64, start_hi: u64, digit_bound: u32, output_dir: impl Into<PathBuf>) -> Self {
        CampaignConfig {
            start_lo,
            start_hi,
            digit_bound,
            budget: FactorBudget::default(),
            parity_filter: ParityFilter::All,
            checkpoint_every: 0,
            worker_count: 1,
            output_dir: output_dir.into(),
            index_limit: DEFAULT_INDEX_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.start_lo < 1 || self.start_lo >= self.start_hi {
            return Err(Error::Config(format!(
                "need 1 <= lo < hi, got lo={} hi={}",
                self.start_lo, self.start_hi
            )));
        }
        if self.digit_bound < 2 {
            return Err(Error::Config(format!("digit bound must be at least 2, got {}", self.digit_bound)));
        }
        if self.worker_count < 1 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        if self.index_limit < 2 {
            return Err(Error::Config("index limit must be at least 2".into()));
        }
        self.budget.validate()
    }

    /// Settings that determine the archive contents, one `key=value` per line.
    fn result_settings(&self) -> String {
        format!(
            "lo={}\nhi={}\ndigits={}\nparity={}\ntrial_division_bound={}\nrho_iteration_cap={}\nmax_digits={}\nindex_limit={}\n",
            self.start_lo,
            self.start_hi,
            self.digit_bound,
            self.parity_filter,
            self.budget.trial_division_bound,
            self.budget.rho_iteration_cap,
            self.budget.max_digits,
            self.index_limit
        )
    }

    /// Hex SHA-256 of the result-determining settings. Worker count,
    /// checkpoint interval and output directory are excluded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.result_settings().as_bytes()))
    }

    fn engine_config(&self) -> EngineConfig {
        let mut c = EngineConfig::new(self.digit_bound);
        c.budget = self.budget;
        c.keep_full_trajectory = false;
        c.landmark_limit = self.index_limit;
        c
    }
}

/// Status totals over committed starts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tallies {
    pub terminated: u64,
    pub cycled: u64,
    pub open: u64,
    pub aborted: u64,
    pub aborted_starts: Vec<u64>,
}

impl Tallies {
    pub fn records(&self) -> u64 {
        self.terminated + self.cycled + self.open + self.aborted
    }

    fn add(&mut self, start: u64, code: StatusCode) {
        match code {
            StatusCode::Terminated => self.terminated += 1,
            StatusCode::Cycled => self.cycled += 1,
            StatusCode::Open => self.open += 1,
            StatusCode::Aborted => {
                self.aborted += 1;
                self.aborted_starts.push(start);
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointPayload {
    config: CampaignConfig,
    config_digest: String,
    next_start: u64,
    records_len: u64,
    events_len: u64,
    book: MergerBookState,
    catalog: CycleCatalog,
    tallies: Tallies,
}

/// Counting append-only writer.
struct Sink {
    path: PathBuf,
    out: BufWriter<File>,
    len: u64,
}

impl Sink {
    fn create(path: PathBuf) -> Result<Self> {
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Sink { path, out: BufWriter::new(file), len: 0 })
    }

    /// Reopens `path` cut back to `len` bytes.
    fn reopen(path: PathBuf, len: u64) -> Result<Self> {
        let file = OpenOptions::new().write(true).open(&path).map_err(|e| Error::io(&path, e))?;
        let actual = file.metadata().map_err(|e| Error::io(&path, e))?.len();
        if actual < len {
            return Err(Error::CorruptArchive {
                path,
                reason: format!("shorter ({actual} bytes) than the checkpoint offset {len}"),
            });
        }
        file.set_len(len).map_err(|e| Error::io(&path, e))?;
        let mut file = file;
        std::io::Seek::seek(&mut file, std::io::SeekFrom::End(0)).map_err(|e| Error::io(&path, e))?;
        Ok(Sink { path, out: BufWriter::new(file), len })
    }

    fn line(&mut self, text: &str) -> Result<()> {
        self.out
            .write_all(text.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| Error::io(&self.path, e))?;
        self.len += text.len() as u64 + 1;
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// A campaign in progress.
pub struct Campaign {
    config: CampaignConfig,
    engine: Engine,
    pool: rayon::ThreadPool,
    next_start: u64,
    book: MergerBook,
    catalog: CycleCatalog,
    tallies: Tallies,
    records: Sink,
    events: Sink,
    since_checkpoint: u64,
}

/// Result of [`Campaign::run_until`].
#[derive(Debug)]
pub enum Progress {
    Finished(RunArchive),
    /// Stopped early; the checkpoint holds the state.
    Interrupted { next_start: u64, checkpoint: PathBuf },
}

impl Campaign {
    /// Starts a fresh campaign, truncating any archive files in the output directory.
    pub fn start(config: CampaignConfig) -> Result<Self> {
        config.validate()?;
        let dir = &config.output_dir;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let records = Sink::create(dir.join(RECORDS_FILE))?;
        let events = Sink::create(dir.join(EVENTS_FILE))?;
        Self::assemble(config.clone(), config.start_lo, MergerBook::new(config.index_limit), CycleCatalog::new(), Tallies::default(), records, events)
    }

    /// Resumes from a checkpoint file. The archive directory is the one
    /// holding the checkpoint. If `expected` is given, its result-determining
    /// settings must match the checkpoint's; its worker count and
    /// checkpoint interval replace the stored ones.
    pub fn resume(checkpoint: &Path, expected: Option<&CampaignConfig>) -> Result<Self> {
        let payload = read_checkpoint(checkpoint)?;
        let mut config = payload.config;
        if let Some(expected) = expected {
            let found = expected.digest();
            if found != payload.config_digest {
                return Err(Error::DigestMismatch { expected: payload.config_digest, found });
            }
            config.worker_count = expected.worker_count;
            config.checkpoint_every = expected.checkpoint_every;
        }
        config.output_dir = checkpoint.parent().map(Path::to_path_buf).unwrap_or_default();
        config.validate()?;
        let dir = config.output_dir.clone();
        let records = Sink::reopen(dir.join(RECORDS_FILE), payload.records_len)?;
        let events = Sink::reopen(dir.join(EVENTS_FILE), payload.events_len)?;
        Self::assemble(
            config,
            payload.next_start,
            MergerBook::from_state(payload.book),
            payload.catalog,
            payload.tallies,
            records,
            events,
        )
    }

    fn assemble(
        config: CampaignConfig,
        next_start: u64,
        book: MergerBook,
        catalog: CycleCatalog,
        tallies: Tallies,
        records: Sink,
        events: Sink,
    ) -> Result<Self> {
        let engine = Engine::new(config.engine_config())?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.worker_count)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Campaign { config, engine, pool, next_start, book, catalog, tallies, records, events, since_checkpoint: 0 })
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.config
    }

    pub fn next_start(&self) -> u64 {
        self.next_start
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.config.output_dir.join(CHECKPOINT_FILE)
    }

    /// Runs to completion.
    pub fn run(self) -> Result<RunArchive> {
        match self.run_until(None)? {
            Progress::Finished(archive) => Ok(archive),
            Progress::Interrupted { .. } => unreachable!("no stop point was given"),
        }
    }

    /// Runs until every start below `stop_before` is committed (then
    /// checkpoints and returns), or to completion when `stop_before` is `None`.
    pub fn run_until(mut self, stop_before: Option<u64>) -> Result<Progress> {
        let clock = Instant::now();
        let hi = self.config.start_hi;
        let limit = stop_before.map_or(hi, |s| s.clamp(self.next_start, hi));
        while self.next_start < limit {
            let chunk_end = (self.next_start + CHUNK).min(limit);
            let starts: Vec<u64> =
                (self.next_start..chunk_end).filter(|&s| self.config.parity_filter.accepts(s)).collect();
            let engine = &self.engine;
            let computed: Vec<Result<_>> = self
                .pool
                .install(|| starts.par_iter().map(|&s| engine.run_sequence(&Natural::from_u64(s))).collect());
            for record in computed {
                self.commit(record?)?;
            }
            self.since_checkpoint += chunk_end - self.next_start;
            self.next_start = chunk_end;
            if self.config.checkpoint_every > 0 && self.since_checkpoint >= self.config.checkpoint_every {
                self.write_checkpoint()?;
            }
        }
        if self.next_start < hi {
            self.write_checkpoint()?;
            return Ok(Progress::Interrupted { next_start: self.next_start, checkpoint: self.checkpoint_path() });
        }
        if self.config.checkpoint_every > 0 {
            self.write_checkpoint()?;
        }
        let elapsed = clock.elapsed();
        let archive = self.finish()?;
        let log = archive.dir.join(RUN_LOG_FILE);
        let mut f = OpenOptions::new().create(true).append(true).open(&log).map_err(|e| Error::io(&log, e))?;
        writeln!(f, "segment_wall_seconds={:.3}\tdigest={}", elapsed.as_secs_f64(), archive.digest()?)
            .map_err(|e| Error::io(&log, e))?;
        Ok(Progress::Finished(archive))
    }

    fn commit(&mut self, record: crate::engine::SequenceRecord) -> Result<()> {
        let start = record.start.to_u64().expect("campaign starts are words");
        self.records.line(&record.summary().to_string())?;
        self.tallies.add(start, record.status.code());
        if matches!(record.status, Status::Aborted { .. }) {
            return Ok(());
        }
        let outcome = self.book.commit(&record)?;
        if let Some(event) = &outcome.event {
            self.events.line(&event.log_line())?;
        }
        self.catalog.tally(&record, outcome.designation.is_main, self.engine.factorizer())?;
        Ok(())
    }

    /// Flushes the archive files and atomically replaces the checkpoint.
    pub fn write_checkpoint(&mut self) -> Result<()> {
        self.records.flush()?;
        self.events.flush()?;
        let payload = CheckpointPayload {
            config: self.config.clone(),
            config_digest: self.config.digest(),
            next_start: self.next_start,
            records_len: self.records.len,
            events_len: self.events.len,
            book: self.book.state(),
            catalog: self.catalog.clone(),
            tallies: self.tallies.clone(),
        };
        let path = self.checkpoint_path();
        let body = bincode::serialize(&payload).map_err(|e| Error::CorruptCheckpoint {
            path: path.clone(),
            reason: format!("serialization failed: {e}"),
        })?;
        let mut bytes = Vec::with_capacity(body.len() + 40);
        bytes.extend_from_slice(CHECKPOINT_MAGIC);
        bytes.extend_from_slice(&Sha256::digest(&body));
        bytes.extend_from_slice(&body);
        let tmp = path.with_extension("bin.tmp");
        fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        self.since_checkpoint = 0;
        Ok(())
    }

    fn finish(mut self) -> Result<RunArchive> {
        self.records.flush()?;
        self.events.flush()?;
        let dir = self.config.output_dir.clone();
        let designations = self.book.designation_lines();
        write_lines(&dir.join(DESIGNATIONS_FILE), &designations)?;
        write_lines(&dir.join(CYCLES_FILE), &self.catalog.lines())?;
        let meta = ArchiveMeta::from_run(&self.config, &self.tallies);
        fs::write(dir.join(META_FILE), meta.to_string()).map_err(|e| Error::io(dir.join(META_FILE), e))?;
        RunArchive::load(&dir)
    }
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for l in lines {
        writeln!(out, "{l}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_checkpoint(path: &Path) -> Result<CheckpointPayload> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |reason: &str| Error::CorruptCheckpoint { path: path.to_path_buf(), reason: reason.to_string() };
    if bytes.len() < 40 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(corrupt("missing header"));
    }
    let body = &bytes[40..];
    if Sha256::digest(body).as_slice() != &bytes[8..40] {
        return Err(corrupt("checksum mismatch"));
    }
    let payload: CheckpointPayload =
        bincode::deserialize(body).map_err(|e| corrupt(&format!("undecodable payload: {e}")))?;
    if payload.config.digest() != payload.config_digest {
        return Err(corrupt("stored configuration does not match its digest"));
    }
    Ok(payload)
}

/// Configuration stored in a checkpoint, with the output directory set to
/// the checkpoint's directory.
pub fn checkpoint_config(checkpoint: &Path) -> Result<CampaignConfig> {
    let mut config = read_checkpoint(checkpoint)?.config;
    config.output_dir = checkpoint.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(config)
}

/// Runs a campaign from scratch to completion.
pub fn run_campaign(config: CampaignConfig) -> Result<RunArchive> {
    Campaign::start(config)?.run()
}

/// Resumes from `checkpoint` and runs to completion.
pub fn resume(checkpoint: &Path, expected: Option<&CampaignConfig>) -> Result<RunArchive> {
    Campaign::resume(checkpoint, expected)?.run()
}

/// Contents of `meta.txt`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchiveMeta {
    pub start_lo: u64,
    pub start_hi: u64,
    pub digit_bound: u32,
    pub parity_filter: ParityFilter,
    pub budget: FactorBudget,
    pub index_limit: u64,
    pub config_digest: String,
    pub tallies: Tallies,
}

impl ArchiveMeta {
    fn from_run(config: &CampaignConfig, tallies: &Tallies) -> Self {
        ArchiveMeta {
            start_lo: config.start_lo,
            start_hi: config.start_hi,
            digit_bound: config.digit_bound,
            parity_filter: config.parity_filter,
            budget: config.budget,
            index_limit: config.index_limit,
            config_digest: config.digest(),
            tallies: tallies.clone(),
        }
    }
}

impl fmt::Display for ArchiveMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.tallies;
        let aborted: Vec<String> = t.aborted_starts.iter().map(u64::to_string).collect();
        writeln!(f, "lo={}", self.start_lo)?;
        writeln!(f, "hi={}", self.start_hi)?;
        writeln!(f, "digits={}", self.digit_bound)?;
        writeln!(f, "parity={}", self.parity_filter)?;
        writeln!(f, "trial_division_bound={}", self.budget.trial_division_bound)?;
        writeln!(f, "rho_iteration_cap={}", self.budget.rho_iteration_cap)?;
        writeln!(f, "max_digits={}", self.budget.max_digits)?;
        writeln!(f, "index_limit={}", self.index_limit)?;
        writeln!(f, "config_digest={}", self.config_digest)?;
        writeln!(f, "records={}", t.records())?;
        writeln!(f, "terminated={}", t.terminated)?;
        writeln!(f, "cycled={}", t.cycled)?;
        writeln!(f, "open={}", t.open)?;
        writeln!(f, "aborted={}", t.aborted)?;
        writeln!(f, "aborted_starts={}", aborted.join(","))
    }
}

impl FromStr for ArchiveMeta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for line in s.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("bad meta line {line:?}")))?;
            map.insert(k, v);
        }
        let get = |k: &str| map.get(k).copied().ok_or_else(|| Error::Parse(format!("meta lacks {k}")));
        let num = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|_| Error::Parse(format!("bad meta {k}"))) };
        let aborted_starts = match get("aborted_starts")? {
            "" => Vec::new(),
            list => list
                .split(',')
                .map(|x| x.parse().map_err(|_| Error::Parse(format!("bad aborted start {x:?}"))))
                .collect::<Result<_>>()?,
        };
        Ok(ArchiveMeta {
            start_lo: num("lo")?,
            start_hi: num("hi")?,
            digit_bound: num("digits")? as u32,
            parity_filter: get("parity")?.parse()?,
            budget: FactorBudget {
                trial_division_bound: num("trial_division_bound")? as u32,
                rho_iteration_cap: num("rho_iteration_cap")?,
                max_digits: num("max_digits")? as u32,
            },
            index_limit: num("index_limit")?,
            config_digest: get("config_digest")?.to_string(),
            tallies: Tallies {
                terminated: num("terminated")?,
                cycled: num("cycled")?,
                open: num("open")?,
                aborted: num("aborted")?,
                aborted_starts,
            },
        })
    }
}

/// One row of `designations.tsv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DesignationRow {
    pub start: u64,
    pub is_main: bool,
    pub main_root: u64,
    pub merger_count: u64,
}

impl FromStr for DesignationRow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad designation row {s:?}"));
        let f: Vec<&str> = s.split('\t').collect();
        let [start, is_main, root, count] = f[..] else {
            return Err(bad());
        };
        Ok(DesignationRow {
            start: start.parse().map_err(|_| bad())?,
            is_main: match is_main {
                "1" => true,
                "0" => false,
                _ => return Err(bad()),
            },
            main_root: root.parse().map_err(|_| bad())?,
            merger_count: count.parse().map_err(|_| bad())?,
        })
    }
}

/// A finished campaign's archive, loaded from disk.
#[derive(Clone, Debug)]
pub struct RunArchive {
    pub dir: PathBuf,
    pub meta: ArchiveMeta,
    pub records: Vec<RecordSummary>,
    pub events: Vec<MergerEvent>,
    pub designations: Vec<DesignationRow>,
    pub catalog: CycleCatalog,
}

impl RunArchive {
    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join(META_FILE);
        let meta: ArchiveMeta =
            fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?.parse()?;
        let records = parse_file(&dir.join(RECORDS_FILE), |l| l.parse())?;
        let events = parse_file(&dir.join(EVENTS_FILE), MergerEvent::parse_log_line)?;
        let designations = parse_file(&dir.join(DESIGNATIONS_FILE), |l| l.parse())?;
        let cycles_path = dir.join(CYCLES_FILE);
        let text = fs::read_to_string(&cycles_path).map_err(|e| Error::io(&cycles_path, e))?;
        let catalog = CycleCatalog::parse_lines(text.lines())?;
        if records.len() as u64 != meta.tallies.records() {
            return Err(Error::CorruptArchive {
                path: dir.to_path_buf(),
                reason: format!("{} record lines, metadata says {}", records.len(), meta.tallies.records()),
            });
        }
        Ok(RunArchive { dir: dir.to_path_buf(), meta, records, events, designations, catalog })
    }

    pub fn digit_bound(&self) -> u32 {
        self.meta.digit_bound
    }

    /// Hex SHA-256 over the archive files, in a fixed order.
    pub fn digest(&self) -> Result<String> {
        archive_digest(&self.dir)
    }

    /// Designation of `start`, if it was committed.
    pub fn designation(&self, start: u64) -> Option<&DesignationRow> {
        self.designations.binary_search_by_key(&start, |d| d.start).ok().map(|i| &self.designations[i])
    }
}

/// Hex SHA-256 over the archive files of `dir` (run log and checkpoint excluded).
pub fn archive_digest(dir: &Path) -> Result<String> {
    let mut h = Sha256::new();
    for name in ARCHIVE_FILES {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

fn parse_file<T>(path: &Path, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        out.push(parse(&line).map_err(|e| Error::CorruptArchive {
            path: path.to_path_buf(),
            reason: format!("line {}: {e}", n + 1),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::aliquot_brute;
    use crate::engine::EngineConfig;
    use crate::mergers::merge_point_agrees;

    fn config(dir: &Path, lo: u64, hi: u64, d: u32) -> CampaignConfig {
        CampaignConfig::new(lo, hi, d, dir)
    }

    #[test]
    fn small_range_matches_single_runs() {
        let tmp = tempfile::tempdir().unwrap();
        let archive = run_campaign(config(tmp.path(), 2, 100, 10)).unwrap();
        assert_eq!(archive.records.len(), 98);
        assert_eq!(archive.meta.tallies.aborted, 0);
        let engine = Engine::new(EngineConfig::new(10)).unwrap();
        for r in &archive.records {
            assert_eq!(r.to_string(), engine.run_sequence(&r.start).unwrap().summary().to_string());
        }
        // Independent check of the terminating ones by brute-force iteration.
        for r in archive.records.iter().filter(|r| r.status == StatusCode::Terminated) {
            let mut n = r.start.to_u64().unwrap();
            let mut steps = 0;
            while n > 1 {
                n = aliquot_brute(n).unwrap();
                steps += 1;
            }
            assert_eq!(steps, r.length, "start {}", r.start);
        }
    }

    #[test]
    fn invalid_configs_are_rejected_before_work() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("never");
        for c in [config(&out, 0, 10, 10), config(&out, 10, 10, 10), config(&out, 1, 10, 1)] {
            assert!(matches!(Campaign::start(c), Err(Error::Config(_))));
        }
        let mut c = config(&out, 1, 10, 10);
        c.worker_count = 0;
        assert!(matches!(Campaign::start(c), Err(Error::Config(_))));
        assert!(!out.exists());
    }

    #[test]
    fn worker_count_does_not_change_the_archive() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let one = run_campaign(config(a.path(), 1, 6000, 8)).unwrap();
        let mut c = config(b.path(), 1, 6000, 8);
        c.worker_count = 4;
        let four = run_campaign(c).unwrap();
        assert_eq!(one.digest().unwrap(), four.digest().unwrap());
    }

    #[test]
    fn interrupted_and_resumed_runs_agree() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let whole = run_campaign(config(a.path(), 1, 10_000, 9)).unwrap();
        let mut c = config(b.path(), 1, 10_000, 9);
        c.checkpoint_every = 3000;
        let Progress::Interrupted { checkpoint, next_start } =
            Campaign::start(c.clone()).unwrap().run_until(Some(5000)).unwrap()
        else {
            panic!("expected an interruption")
        };
        assert_eq!(next_start, 5000);
        // Stray bytes past the checkpoint offsets are discarded on resume.
        let mut f = OpenOptions::new().append(true).open(b.path().join(RECORDS_FILE)).unwrap();
        writeln!(f, "garbage").unwrap();
        drop(f);
        let kept = b.path().join("kept.bin");
        fs::copy(&checkpoint, &kept).unwrap();
        let resumed = resume(&checkpoint, Some(&c)).unwrap();
        assert_eq!(resumed.digest().unwrap(), whole.digest().unwrap());
        fs::copy(&kept, &checkpoint).unwrap();
        let again = resume(&checkpoint, None).unwrap();
        assert_eq!(again.digest().unwrap(), whole.digest().unwrap());
    }

    #[test]
    fn resume_rejects_changed_settings_and_damage() {
        let tmp = tempfile::tempdir().unwrap();
        let c = config(tmp.path(), 1, 3000, 8);
        let Progress::Interrupted { checkpoint, .. } =
            Campaign::start(c.clone()).unwrap().run_until(Some(1000)).unwrap()
        else {
            panic!("expected an interruption")
        };
        let mut altered = c.clone();
        altered.digit_bound = 9;
        assert!(matches!(Campaign::resume(&checkpoint, Some(&altered)), Err(Error::DigestMismatch { .. })));
        let mut bytes = fs::read(&checkpoint).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        fs::write(&checkpoint, &bytes).unwrap();
        assert!(matches!(Campaign::resume(&checkpoint, None), Err(Error::CorruptCheckpoint { .. })));
        fs::write(&checkpoint, b"nope").unwrap();
        assert!(matches!(Campaign::resume(&checkpoint, None), Err(Error::CorruptCheckpoint { .. })));
    }

    #[test]
    fn archive_is_consistent() {
        let tmp = tempfile::tempdir().unwrap();
        let archive = run_campaign(config(tmp.path(), 1, 20_000, 10)).unwrap();
        let t = &archive.meta.tallies;
        assert_eq!(t.records(), 19_999);
        assert_eq!(archive.records.iter().filter(|r| r.status == StatusCode::Cycled).count() as u64, t.cycled);
        let cycled_total: u64 = archive.catalog.cycles().map(|c| c.total).sum();
        assert_eq!(cycled_total, t.cycled);
        assert_eq!(archive.designations.len() as u64, t.records() - t.aborted);
        // Mains plus clause-satisfied mergers account for every designation.
        let mergers = archive.events.iter().filter(|e| e.clause_satisfied).count();
        let mains = archive.designations.iter().filter(|d| d.is_main).count();
        assert_eq!(mains + mergers, archive.designations.len());
        let counted: u64 = archive.designations.iter().map(|d| d.merger_count).sum();
        assert_eq!(counted as usize, mergers);
        // Merge points agree with recomputed trajectories.
        let engine = Engine::new(EngineConfig::new(10)).unwrap();
        let full = |s: &Natural| engine.run_sequence(s).unwrap().trajectory.full().unwrap().to_vec();
        for e in archive.events.iter().step_by(25) {
            assert!(
                merge_point_agrees(e, &full(&e.merging_start), &full(&e.owner_start)),
                "{}",
                e.junction()
            );
        }
    }

    #[test]
    fn parity_filter_restricts_starts() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = config(tmp.path(), 1, 500, 8);
        c.parity_filter = ParityFilter::Odd;
        let archive = run_campaign(c).unwrap();
        assert_eq!(archive.records.len(), 250);
        assert!(archive.records.iter().all(|r| r.start.is_odd()));
    }
}
