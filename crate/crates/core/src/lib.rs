//! Aliquot sequence engine.
//!
//! Iterates the sum-of-proper-divisors function `s(n) = sigma(n) - n` from
//! ranges of starting values, classifies each sequence as terminating,
//! cyclic or open at a decimal-digit bound, keeps merger and cycle
//! bookkeeping, and regenerates summary tables from the resulting archives.

pub mod arithmetic;
pub mod campaign;
pub mod cycles;
pub mod engine;
pub mod error;
pub mod mergers;
pub mod natural;
pub mod reports;

pub use arithmetic::{Driver, FactorBudget, Factorization, Factorizer};
pub use campaign::{Campaign, CampaignConfig, ParityFilter, Progress, RunArchive};
pub use cycles::{CycleCatalog, CycleKind, CycleRecord};
pub use engine::{Engine, EngineConfig, ParityClass, RecordSummary, SequenceRecord, Status, StatusCode};
pub use error::{Error, Result};
pub use mergers::{MainDesignation, MergerBook, MergerEvent, ValueIndex};
pub use natural::Natural;
