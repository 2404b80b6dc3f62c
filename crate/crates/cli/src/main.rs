use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use aliquot_core::campaign::{checkpoint_config, Campaign, CampaignConfig, ParityFilter, Progress, RunArchive};
use aliquot_core::cycles::canonicalize;
use aliquot_core::engine::{Engine, EngineConfig, StatusCode};
use aliquot_core::reports::{self, Metric, RecordClass, Table};
use aliquot_core::{Error, FactorBudget, Factorizer, Natural};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "aliquot", version, about = "Aliquot sequence campaigns and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign over a range of starting values.
    Run(RunArgs),
    /// Continue a campaign from its checkpoint.
    Resume(ResumeArgs),
    /// Print one aliquot sequence.
    Seq {
        #[arg(long)]
        start: Natural,
        #[arg(long, default_value_t = 10)]
        digits: u32,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Check that a list of numbers is an aliquot cycle.
    VerifyCycle {
        /// Comma- or space-separated members.
        #[arg(long)]
        members: String,
    },
    /// Per-step decimal digit counts of one sequence.
    Profile {
        #[arg(long)]
        start: Natural,
        #[arg(long, default_value_t = 10)]
        digits: u32,
        #[arg(long)]
        csv: bool,
    },
    /// Regenerate a table from a campaign archive.
    Report(ReportArgs),
}

#[derive(Args, Clone, Copy)]
struct BudgetArgs {
    /// Smallest-prime-factor sieve limit.
    #[arg(long, default_value_t = FactorBudget::default().trial_division_bound)]
    trial_bound: u32,
    /// Pollard rho iterations allowed per composite.
    #[arg(long, default_value_t = FactorBudget::default().rho_iteration_cap)]
    rho_cap: u64,
    /// Refuse to factor values with more decimal digits than this.
    #[arg(long, default_value_t = FactorBudget::default().max_digits)]
    max_digits: u32,
}

impl BudgetArgs {
    fn budget(self) -> FactorBudget {
        FactorBudget { trial_division_bound: self.trial_bound, rho_iteration_cap: self.rho_cap, max_digits: self.max_digits }
    }
}

#[derive(Args)]
struct RunArgs {
    /// First start (inclusive).
    #[arg(long, default_value_t = 1)]
    lo: u64,
    /// Last start (exclusive).
    #[arg(long)]
    hi: u64,
    #[arg(long, default_value_t = 10)]
    digits: u32,
    #[arg(long, value_enum, default_value_t = Parity::All)]
    parity: Parity,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Starts between checkpoints; 0 writes none until the end.
    #[arg(long, default_value_t = 0)]
    checkpoint_every: u64,
    #[arg(long)]
    out: PathBuf,
    /// Values at or above this are not used for merger detection.
    #[arg(long, default_value_t = aliquot_core::mergers::DEFAULT_INDEX_LIMIT)]
    index_limit: u64,
    /// Exit 0 even if some sequences were aborted.
    #[arg(long)]
    allow_aborts: bool,
    /// Checkpoint and stop once every start below this is committed.
    #[arg(long, hide = true)]
    stop_before: Option<u64>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct ResumeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    /// Expected digit bound; must match the checkpoint.
    #[arg(long)]
    digits: Option<u32>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    #[arg(long)]
    allow_aborts: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Parity {
    All,
    Odd,
    Even,
}

impl From<Parity> for ParityFilter {
    fn from(p: Parity) -> Self {
        match p {
            Parity::All => ParityFilter::All,
            Parity::Odd => ParityFilter::Odd,
            Parity::Even => ParityFilter::Even,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportKind {
    Survival,
    Parity,
    Lengths,
    Heights,
    Volumes,
    Penultimate,
    OddRuns,
    Mergers,
    OddSquares,
    Cycles,
    Profile,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(value_enum)]
    kind: ReportKind,
    /// Campaign output directory.
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Emit comma-separated values instead of aligned text.
    #[arg(long)]
    csv: bool,
    /// Digit bounds for the survival tables, e.g. 2,5,10. Defaults to every
    /// bound from 2 to the archive's.
    #[arg(long, value_delimiter = ',')]
    digits: Vec<u32>,
    /// Sub-interval width for the even survival table.
    #[arg(long, default_value_t = 100_000)]
    width: u64,
    /// Record class for lengths, heights and volumes.
    #[arg(long, default_value = "all")]
    class: String,
    #[arg(long)]
    main_only: bool,
    /// Starts below this are scanned by odd-runs.
    #[arg(long, default_value_t = 1_000_000)]
    limit: u64,
    #[arg(long, default_value_t = 4)]
    run_length: usize,
    /// Sequence to profile.
    #[arg(long)]
    start: Option<Natural>,
    /// Rows shown in ranked tables.
    #[arg(long, default_value_t = 20)]
    top: usize,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run(args) => {
            let mut config = CampaignConfig::new(args.lo, args.hi, args.digits, &args.out);
            config.budget = args.budget.budget();
            config.parity_filter = args.parity.into();
            config.worker_count = args.jobs;
            config.checkpoint_every = args.checkpoint_every;
            config.index_limit = args.index_limit;
            let progress = Campaign::start(config)?.run_until(args.stop_before)?;
            Ok(finish(progress, args.allow_aborts))
        }
        Command::Resume(args) => {
            let mut expected = checkpoint_config(&args.checkpoint)?;
            if let Some(d) = args.digits {
                expected.digit_bound = d;
            }
            if let Some(j) = args.jobs {
                expected.worker_count = j;
            }
            if let Some(c) = args.checkpoint_every {
                expected.checkpoint_every = c;
            }
            let progress = Campaign::resume(&args.checkpoint, Some(&expected))?.run_until(None)?;
            Ok(finish(progress, args.allow_aborts))
        }
        Command::Seq { start, digits, budget } => {
            let mut config = EngineConfig::new(digits);
            config.budget = budget.budget();
            let record = Engine::new(config)?.run_sequence(&start)?;
            for (i, v) in record.trajectory.full().unwrap_or_default().iter().enumerate() {
                say(&format!("{i}\t{v}\n"));
            }
            say(&format!("# {}\n", record.summary()));
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyCycle { members } => {
            let members = members
                .split([',', ' '])
                .filter(|m| !m.is_empty())
                .map(str::parse)
                .collect::<Result<Vec<Natural>, _>>()?;
            let factorizer = Factorizer::new(FactorBudget::default())?;
            match canonicalize(&members, &factorizer) {
                Ok(c) => {
                    say(&format!("{} cycle of length {}: {}\n", kind_name(&c), c.period(), c.bracketed()));
                    Ok(ExitCode::SUCCESS)
                }
                Err(Error::NotACycle(_)) => {
                    say("not an aliquot cycle\n");
                    Ok(ExitCode::FAILURE)
                }
                Err(e) => Err(e),
            }
        }
        Command::Profile { start, digits, csv } => {
            let record = Engine::new(EngineConfig::new(digits))?.run_sequence(&start)?;
            emit(&reports::profile_table(&record), csv);
            Ok(ExitCode::SUCCESS)
        }
        Command::Report(args) => report(args),
    }
}

fn kind_name(c: &aliquot_core::CycleRecord) -> &'static str {
    match c.kind {
        aliquot_core::CycleKind::Perfect => "perfect",
        aliquot_core::CycleKind::Amicable => "amicable",
        aliquot_core::CycleKind::Sociable => "sociable",
    }
}

fn finish(progress: Progress, allow_aborts: bool) -> ExitCode {
    match progress {
        Progress::Interrupted { next_start, checkpoint } => {
            say(&format!("stopped before {next_start}; checkpoint {}\n", checkpoint.display()));
            ExitCode::SUCCESS
        }
        Progress::Finished(archive) => {
            let t = &archive.meta.tallies;
            say(&format!(
                "records {}  terminated {}  cycled {}  open {}  aborted {}\n",
                t.records(),
                t.terminated,
                t.cycled,
                t.open,
                t.aborted
            ));
            match archive.digest() {
                Ok(d) => say(&format!("archive {} digest {d}\n", archive.dir.display())),
                Err(e) => eprintln!("error: {e}"),
            }
            if t.aborted > 0 && !allow_aborts {
                eprintln!("{} sequences aborted; rerun with a larger budget or pass --allow-aborts", t.aborted);
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}

/// Writes to stdout; a closed pipe ends the process quietly.
fn say(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn emit(table: &Table, csv: bool) {
    if csv {
        say(&table.to_csv());
    } else {
        say(&table.to_text());
    }
}

fn load(args: &ReportArgs) -> Result<RunArchive, Error> {
    let dir = args.archive.as_ref().ok_or_else(|| Error::InvalidInput("this report needs --archive".into()))?;
    RunArchive::load(dir)
}

fn report(args: ReportArgs) -> Result<ExitCode, Error> {
    let class: RecordClass = args.class.parse()?;
    let tables = match args.kind {
        ReportKind::Survival => {
            let a = load(&args)?;
            let d_list = if args.digits.is_empty() { (2..=a.digit_bound()).collect() } else { args.digits.clone() };
            let rows = reports::survival_table(&a, &d_list)?;
            let sub = reports::even_survival_by_subinterval(&a, &d_list, args.width)?;
            vec![reports::survival_text(&rows), sub.table()]
        }
        ReportKind::Parity => {
            let p = reports::parity_summary(&load(&args)?);
            vec![p.table(), p.square_table()]
        }
        ReportKind::Lengths | ReportKind::Heights | ReportKind::Volumes => {
            let metric = match args.kind {
                ReportKind::Lengths => Metric::Length,
                ReportKind::Heights => Metric::HeightBits,
                _ => Metric::Volume,
            };
            vec![reports::histogram(&load(&args)?, class, args.main_only, metric).table()]
        }
        ReportKind::Penultimate => {
            let t = reports::penultimate_tally(&load(&args)?);
            vec![t.table(args.top), t.solitary_table()]
        }
        ReportKind::OddRuns => {
            let factorizer = Factorizer::new(FactorBudget::default())?;
            vec![reports::runs_table(&reports::increasing_odd_runs(args.limit, args.run_length, &factorizer)?)]
        }
        ReportKind::Mergers => {
            let a = load(&args)?;
            let mut top = Table::new("most merged main sequences", &["start", "mergers"]);
            for (s, n) in reports::top_merged(&a, args.top) {
                top.push(vec![s.to_string(), n.to_string()]);
            }
            vec![reports::merger_histogram(&a, Some(StatusCode::Open)).table(), top]
        }
        ReportKind::OddSquares => reports::odd_open_entry_squares(&load(&args)?).tables(),
        ReportKind::Cycles => {
            let a = load(&args)?;
            if args.csv {
                let mut t = Table::new("cycles", &["cycle", "total", "main", "even", "entry"]);
                for c in a.catalog.cycles() {
                    let row = vec![c.bracketed(), c.total.to_string(), c.main.to_string(), c.even.to_string(), c.entry_column()];
                    t.push(row);
                }
                vec![t, reports::odd_cycler_text(&reports::odd_cycler_table(&a))]
            } else {
                say(&reports::cycle_report(&a));
                vec![reports::odd_cycler_text(&reports::odd_cycler_table(&a))]
            }
        }
        ReportKind::Profile => {
            let start = args.start.clone().ok_or_else(|| Error::InvalidInput("profile needs --start".into()))?;
            let d = match &args.archive {
                Some(_) => load(&args)?.digit_bound(),
                None => args.digits.first().copied().unwrap_or(10),
            };
            vec![reports::profile_table(&Engine::new(EngineConfig::new(d))?.run_sequence(&start)?)]
        }
    };
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            say("\n");
        }
        emit(t, args.csv);
    }
    Ok(ExitCode::SUCCESS)
}
