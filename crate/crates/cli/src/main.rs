use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use witnesskit_core::experiments::{
    check_claims, enumerate_check, run_trials_with_threads, CheckResult, ExperimentConfig,
    ExperimentError, ExperimentSpec, HashKind, CHECKS,
};

const EXIT_ASSERTION: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Simulation lab for budgeted witnessing games and the reductions built on them.
///
/// Reports go to stdout in the selected format. The effective configuration,
/// precondition warnings and timing go to stderr.
#[derive(Debug, Parser)]
#[command(name = "witnesskit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parity decider built from a blinded prefix-parity solver.
    Parity(ParityArgs),
    /// Factoring attack through a square-root solver for a Rabin modulus.
    Factor(FactorArgs),
    /// Collision extraction from a solver for a compressing hash.
    Wphp(WphpArgs),
    /// Exhaustive checks over small parameter spaces.
    Verify(VerifyArgs),
    /// Run one seeded game and print its transcript as JSON.
    Transcript(TranscriptArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HashArg {
    /// h(u) = u mod n
    Mod,
    /// base-n digit sum of u, reduced mod n
    DigitSum,
}

impl From<HashArg> for HashKind {
    fn from(h: HashArg) -> Self {
        match h {
            HashArg::Mod => HashKind::Mod,
            HashArg::DigitSum => HashKind::DigitSum,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Number of independent trials
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Master seed; trial i uses the stream derived from (seed, i)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output format of the report on stdout
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Check the experiment's probability claims and exit 1 if any fails
    #[arg(long)]
    assert: bool,
}

#[derive(Debug, Args)]
struct ParityParams {
    /// Length of the hidden input vector I
    #[arg(long, default_value_t = 30)]
    m: usize,
    /// Query budget of the solver
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Rows of the blinded matrix [default: m]; the 2/3 bound needs rows >= 3k
    #[arg(long)]
    rows: Option<usize>,
    /// Solver strategy: scripted (queries rows 0..k), adaptive, omniscient (never queries)
    #[arg(long, default_value = "scripted")]
    solver: String,
}

#[derive(Debug, Args)]
struct FactorParams {
    /// Bit length of each prime factor of n
    #[arg(long, default_value_t = 16)]
    prime_bits: u64,
    /// Query budget of the solver
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Length of the root sequence [default: |n|, the bit length of each sampled n]
    #[arg(long)]
    m: Option<usize>,
    /// Solver strategy: canonical (smallest root), max-root (largest root)
    #[arg(long, default_value = "canonical")]
    solver: String,
}

#[derive(Debug, Args)]
struct WphpParams {
    /// Hash range size n
    #[arg(long, default_value_t = 1024)]
    n: u64,
    /// Query budget of the solver
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Sequence length L; inputs range over [0, n^L) [default: |n|, the bit length of n]
    #[arg(long)]
    seq_len: Option<usize>,
    /// Compressing hash
    #[arg(long, value_enum, default_value_t = HashArg::Mod)]
    hash: HashArg,
    /// Solver strategy: canonical (smallest preimage), adversarial, constant
    #[arg(long, default_value = "canonical")]
    solver: String,
}

#[derive(Debug, Args)]
struct ParityArgs {
    #[command(flatten)]
    params: ParityParams,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct FactorArgs {
    #[command(flatten)]
    params: FactorParams,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct WphpArgs {
    #[command(flatten)]
    params: WphpParams,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Check to run [default: all]
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(CHECKS))]
    check: Option<String>,
    /// Output format on stdout; csv prints one row per check
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Debug, Args)]
struct TranscriptArgs {
    #[command(subcommand)]
    game: TranscriptGame,
}

#[derive(Debug, Args)]
struct TranscriptRun {
    /// Master seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trial ordinal whose game is dumped
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

#[derive(Debug, Subcommand)]
enum TranscriptGame {
    Parity {
        #[command(flatten)]
        params: ParityParams,
        #[command(flatten)]
        run: TranscriptRun,
    },
    Factor {
        #[command(flatten)]
        params: FactorParams,
        #[command(flatten)]
        run: TranscriptRun,
    },
    Wphp {
        #[command(flatten)]
        params: WphpParams,
        #[command(flatten)]
        run: TranscriptRun,
    },
}

impl ParityParams {
    fn spec(&self) -> (ExperimentSpec, String) {
        let spec = ExperimentSpec::Parity {
            m: self.m,
            k: self.k,
            rows: self.rows.unwrap_or(self.m),
        };
        (spec, self.solver.clone())
    }
}

impl FactorParams {
    fn spec(&self) -> (ExperimentSpec, String) {
        let spec = ExperimentSpec::Factor {
            prime_bits: self.prime_bits,
            k: self.k,
            m: self.m,
        };
        (spec, self.solver.clone())
    }
}

impl WphpParams {
    fn spec(&self) -> (ExperimentSpec, String) {
        let bit_len = (u64::BITS - self.n.leading_zeros()) as usize;
        let spec = ExperimentSpec::Wphp {
            n: self.n,
            k: self.k,
            seq_len: self.seq_len.unwrap_or(bit_len),
            hash: self.hash.into(),
        };
        (spec, self.solver.clone())
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

/// Failure that maps to a non-zero exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let code = match e {
            ExperimentError::UnknownSolver { .. }
            | ExperimentError::UnknownCheck(_)
            | ExperimentError::Config(_)
            | ExperimentError::Reduction(_) => EXIT_USAGE,
            ExperimentError::Trial { .. } | ExperimentError::Pool(_) => EXIT_ASSERTION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn thread_cap() -> Result<Option<usize>, Failure> {
    match std::env::var("WITNESSKIT_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Failure {
                code: EXIT_USAGE,
                message: format!("WITNESSKIT_THREADS must be a positive integer, got {v:?}"),
            }),
        },
    }
}

fn announce(cfg: &ExperimentConfig) {
    let json = serde_json::to_string(cfg).expect("configs serialize");
    eprintln!("config: {json}");
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
}

fn run_experiment(spec: ExperimentSpec, solver: String, run: &RunArgs) -> Result<(), Failure> {
    let cfg = ExperimentConfig {
        spec,
        trials: run.trials,
        master_seed: run.seed,
        solver,
    };
    let threads = thread_cap()?;
    cfg.validate()?;
    announce(&cfg);
    if let Some(t) = threads {
        eprintln!("threads: {t}");
    }
    let start = Instant::now();
    let report = run_trials_with_threads(&cfg, threads)?;
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());

    match run.format {
        Format::Json => emit(&format!("{}\n", report.to_json())),
        Format::Csv => emit(&report.to_csv()),
        Format::Human => emit(&report.to_human()),
    }

    if run.assert {
        let claims = check_claims(&report);
        let mut failed = 0;
        for c in &claims {
            eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            failed += usize::from(!c.passed);
        }
        if failed > 0 {
            return Err(Failure {
                code: EXIT_ASSERTION,
                message: format!("{failed} of {} claims failed", claims.len()),
            });
        }
    }
    Ok(())
}

fn print_check(r: &CheckResult, format: Format) {
    match format {
        Format::Json => emit(&format!("{}\n", serde_json::to_string(r).expect("results serialize"))),
        Format::Csv => emit(&format!(
            "{},{},{},{}\n",
            r.name,
            if r.passed { "pass" } else { "fail" },
            r.cases,
            r.counterexample.as_deref().unwrap_or("").replace(',', ";")
        )),
        Format::Human => match &r.counterexample {
            None => emit(&format!("PASS {} ({} cases)\n", r.name, r.cases)),
            Some(c) => emit(&format!("FAIL {} after {} cases: {c}\n", r.name, r.cases)),
        },
    }
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let names: Vec<&str> = match &args.check {
        Some(c) => vec![c.as_str()],
        None => CHECKS.to_vec(),
    };
    if args.format == Format::Csv {
        emit("check,result,cases,counterexample\n");
    }
    let mut failed = 0;
    for name in &names {
        let r = enumerate_check(name)?;
        print_check(&r, args.format);
        failed += usize::from(!r.passed);
    }
    if failed > 0 {
        return Err(Failure {
            code: EXIT_ASSERTION,
            message: format!("{failed} of {} checks failed", names.len()),
        });
    }
    Ok(())
}

fn transcript(args: &TranscriptArgs) -> Result<(), Failure> {
    let ((spec, solver), run) = match &args.game {
        TranscriptGame::Parity { params, run } => (params.spec(), run),
        TranscriptGame::Factor { params, run } => (params.spec(), run),
        TranscriptGame::Wphp { params, run } => (params.spec(), run),
    };
    let cfg = ExperimentConfig {
        spec,
        trials: 1,
        master_seed: run.seed,
        solver,
    };
    cfg.validate()?;
    announce(&cfg);
    let dump = cfg.dump_trial(run.trial)?;
    emit(&format!("{}\n", serde_json::to_string_pretty(&dump).expect("dumps serialize")));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Parity(a) => {
            let (spec, solver) = a.params.spec();
            run_experiment(spec, solver, &a.run)
        }
        Command::Factor(a) => {
            let (spec, solver) = a.params.spec();
            run_experiment(spec, solver, &a.run)
        }
        Command::Wphp(a) => {
            let (spec, solver) = a.params.spec();
            run_experiment(spec, solver, &a.run)
        }
        Command::Verify(a) => verify(a),
        Command::Transcript(a) => transcript(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
