//! Seeded Monte Carlo runs of the reductions, aggregated into reports.
//!
//! A run is fully described by its [`ExperimentConfig`]: trial `i` draws
//! from the stream of [`TrialSeed::new(master_seed, i)`](TrialSeed), trials
//! execute on a worker pool, and results are folded in ordinal order. The
//! same config therefore always produces the same report bytes.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitparity::parity_bit;
use crate::numtheory::{Nat, RabinModulus};
use crate::protocol::SolverStrategy;
use crate::reductions::factoring::{self, CanonicalRootSolver, FactoringConfig, RootChoice};
use crate::reductions::parity::{
    self, AdaptiveParitySolver, OmniscientParitySolver, ParityConfig, ParityInstance,
    ScriptedParitySolver,
};
use crate::reductions::wphp::{
    self, AdversarialWphpSolver, CanonicalWphpSolver, CompressingHash, ConstantWphpSolver,
    DigitSumHash, HashInstance, ModHash, WphpConfig,
};
use crate::reductions::{OutcomeKind, ReductionError};
use crate::seeding::{TrialSeed, DERIVATION_RULE};

mod enumerate;
pub mod stats;

pub use enumerate::{enumerate_check, CheckResult, CHECKS};
pub use stats::{hoeffding_slack, wilson_interval};

/// Confidence of the reported Wilson intervals.
pub const WILSON_CONFIDENCE: f64 = 0.95;
/// Failure probability of the Hoeffding slack used for pass/fail claims.
pub const HOEFFDING_DELTA: f64 = 0.01;
/// Fixed allowance on the factoring success bound.
pub const FACTOR_SUCCESS_ALLOWANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown solver {solver:?} for {experiment}; expected one of {expected}")]
    UnknownSolver {
        solver: String,
        experiment: &'static str,
        expected: String,
    },
    #[error("unknown check {0:?}")]
    UnknownCheck(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("trial {ordinal} failed: {source}")]
    Trial {
        ordinal: u64,
        #[source]
        source: ReductionError,
    },
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HashKind {
    Mod,
    DigitSum,
}

impl HashKind {
    pub fn build(self) -> Arc<dyn CompressingHash> {
        match self {
            Self::Mod => Arc::new(ModHash),
            Self::DigitSum => Arc::new(DigitSumHash),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentSpec {
    Parity {
        m: usize,
        k: usize,
        rows: usize,
    },
    Factor {
        prime_bits: u64,
        k: usize,
        /// `None` uses `|n|` for each sampled modulus.
        m: Option<usize>,
    },
    Wphp {
        n: u64,
        k: usize,
        seq_len: usize,
        hash: HashKind,
    },
}

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Parity { .. } => "parity",
            Self::Factor { .. } => "factor",
            Self::Wphp { .. } => "wphp",
        }
    }

    pub fn solver_ids(&self) -> &'static [&'static str] {
        match self {
            Self::Parity { .. } => &["scripted", "adaptive", "omniscient"],
            Self::Factor { .. } => &["canonical", "max-root"],
            Self::Wphp { .. } => &["canonical", "adversarial", "constant"],
        }
    }

    /// Every outcome label a trial of this experiment can produce.
    pub fn outcome_labels(&self) -> &'static [&'static str] {
        match self {
            Self::Parity { .. } => &["parity_abort", "parity_decision", "parity_fail"],
            Self::Factor { .. } => &["factor", "factor_fail"],
            Self::Wphp { .. } => &["collision", "collision_fail"],
        }
    }

    fn parity_config(&self) -> Option<ParityConfig> {
        match *self {
            Self::Parity { m, k, rows } => Some(ParityConfig { m, budget: k, rows }),
            _ => None,
        }
    }

    fn factoring_config(&self) -> Option<FactoringConfig> {
        match *self {
            Self::Factor { prime_bits, k, m } => Some(FactoringConfig {
                prime_bits,
                budget: k,
                m,
            }),
            _ => None,
        }
    }

    fn wphp_config(&self) -> Option<WphpConfig> {
        match *self {
            Self::Wphp { n, k, seq_len, hash } => {
                Some(WphpConfig::new(Nat::from(n), k, hash.build()).with_seq_len(seq_len))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub spec: ExperimentSpec,
    pub trials: u64,
    pub master_seed: u64,
    pub solver: String,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        if !self.spec.solver_ids().contains(&self.solver.as_str()) {
            return Err(ExperimentError::UnknownSolver {
                solver: self.solver.clone(),
                experiment: self.spec.name(),
                expected: self.spec.solver_ids().join(", "),
            });
        }
        match &self.spec {
            ExperimentSpec::Parity { .. } => self.spec.parity_config().unwrap().validate()?,
            ExperimentSpec::Factor { prime_bits, m, .. } => {
                if *prime_bits < 3 {
                    return Err(ExperimentError::Config("prime_bits must be at least 3".into()));
                }
                if *m == Some(0) {
                    return Err(ExperimentError::Config("sequence length must be at least 1".into()));
                }
            }
            ExperimentSpec::Wphp { .. } => self.spec.wphp_config().unwrap().validate()?,
        }
        Ok(())
    }

    /// Precondition notes that do not stop the run.
    pub fn warnings(&self) -> Vec<String> {
        match &self.spec {
            ExperimentSpec::Parity { .. } => self.spec.parity_config().unwrap().warnings(),
            ExperimentSpec::Factor { prime_bits, k, m } => {
                // n = p*q has 2*prime_bits - 1 or 2*prime_bits bits
                let shortest = m.unwrap_or(2 * *prime_bits as usize - 1);
                FactoringConfig::new(*prime_bits, *k).warnings(shortest)
            }
            ExperimentSpec::Wphp { .. } => self.spec.wphp_config().unwrap().warnings(),
        }
    }
}

fn parity_solver(id: &str, cfg: &ParityConfig) -> Box<dyn SolverStrategy<ParityInstance> + Send> {
    match id {
        "omniscient" => Box::new(OmniscientParitySolver),
        "adaptive" => Box::new(AdaptiveParitySolver::new(cfg.budget)),
        _ => Box::new(ScriptedParitySolver::first_rows(cfg.budget, cfg.rows)),
    }
}

fn factoring_solver(id: &str, modulus: &RabinModulus, budget: usize) -> CanonicalRootSolver {
    let choice = if id == "max-root" { RootChoice::Max } else { RootChoice::Min };
    CanonicalRootSolver::with_choice(modulus.clone(), budget, choice)
}

fn wphp_solver(id: &str, budget: usize) -> Box<dyn SolverStrategy<HashInstance> + Send> {
    match id {
        "constant" => Box::new(ConstantWphpSolver),
        "adversarial" => Box::new(AdversarialWphpSolver::new(budget)),
        _ => Box::new(CanonicalWphpSolver::new(budget)),
    }
}

/// Per-trial summary folded into the report.
#[derive(Debug, Clone, Default)]
struct TrialRecord {
    label: &'static str,
    correct: Option<bool>,
    distinct_queries: usize,
    unused: usize,
    factoring: usize,
    sampling_factor: bool,
    seq_len: usize,
}

/// One trial together with its transcript rendered as JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialDump {
    pub ordinal: u64,
    pub outcome: String,
    pub transcript: Option<serde_json::Value>,
}

fn outcome_string(kind: &OutcomeKind) -> String {
    match kind {
        OutcomeKind::ParityDecision(bit) => format!("parity_decision({})", u8::from(*bit)),
        OutcomeKind::Factor(g) => format!("factor({g})"),
        OutcomeKind::Collision(a, b) => format!("collision({a}, {b})"),
        other => other.label().to_string(),
    }
}

impl ExperimentConfig {
    fn run_trial(&self, ordinal: u64) -> Result<(TrialRecord, TrialDump), ReductionError> {
        let seed = TrialSeed::new(self.master_seed, ordinal);
        let mut record = TrialRecord::default();
        let (kind, transcript) = match &self.spec {
            ExperimentSpec::Parity { .. } => {
                let cfg = self.spec.parity_config().unwrap();
                let mut solver = parity_solver(&self.solver, &cfg);
                let (input, out) = parity::run_one(&cfg, solver.as_mut(), seed)?;
                if let OutcomeKind::ParityDecision(bit) = out.kind {
                    record.correct = Some(bit == parity_bit(&input)?);
                }
                let transcript = out.transcript.as_ref();
                record.distinct_queries = transcript.map_or(0, |t| t.distinct_indices);
                (out.kind.clone(), transcript.map(|t| t.to_json()))
            }
            ExperimentSpec::Factor { .. } => {
                let cfg = self.spec.factoring_config().unwrap();
                let (m, out) = factoring::run_one(
                    &cfg,
                    |modulus| factoring_solver(&self.solver, modulus, cfg.budget),
                    seed,
                )?;
                record.seq_len = m;
                record.sampling_factor = out.transcript.is_none();
                if let Some(tally) = out.tally {
                    record.unused = tally.unused;
                    record.factoring = tally.factoring;
                }
                let transcript = out.transcript.as_ref();
                record.distinct_queries = transcript.map_or(0, |t| t.distinct_indices);
                (out.kind.clone(), transcript.map(|t| t.to_json()))
            }
            ExperimentSpec::Wphp { .. } => {
                let cfg = self.spec.wphp_config().unwrap();
                let mut solver = wphp_solver(&self.solver, cfg.budget);
                let out = wphp::run_one(&cfg, solver.as_mut(), seed)?;
                let transcript = out.transcript.as_ref();
                record.distinct_queries = transcript.map_or(0, |t| t.distinct_indices);
                (out.kind.clone(), transcript.map(|t| t.to_json()))
            }
        };
        record.label = kind.label();
        let dump = TrialDump {
            ordinal,
            outcome: outcome_string(&kind),
            transcript,
        };
        Ok((record, dump))
    }

    /// Runs trial `ordinal` alone and returns its transcript.
    pub fn dump_trial(&self, ordinal: u64) -> Result<TrialDump, ExperimentError> {
        self.validate()?;
        self.run_trial(ordinal)
            .map(|(_, dump)| dump)
            .map_err(|source| ExperimentError::Trial { ordinal, source })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub count: u64,
    pub total: u64,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl RateSummary {
    pub fn new(count: u64, total: u64) -> Self {
        if total == 0 {
            return Self {
                count,
                total,
                rate: 0.0,
                wilson_low: 0.0,
                wilson_high: 1.0,
            };
        }
        let (wilson_low, wilson_high) = wilson_interval(count, total, WILSON_CONFIDENCE);
        Self {
            count,
            total,
            rate: count as f64 / total as f64,
            wilson_low,
            wilson_high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: u64,
    /// Trials per outcome label; always sums to `trials`.
    pub counts: BTreeMap<String, u64>,
    /// One entry per outcome label, plus derived rates.
    pub rates: BTreeMap<String, RateSummary>,
    pub metrics: BTreeMap<String, u64>,
    pub wilson_confidence: f64,
    pub hoeffding_delta: f64,
    pub hoeffding_slack: f64,
    pub seed_derivation: String,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn count(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn rate(&self, label: &str) -> f64 {
        self.rates.get(label).map_or(0.0, |r| r.rate)
    }

    pub fn metric(&self, name: &str) -> u64 {
        self.metrics.get(name).copied().unwrap_or(0)
    }

    /// Canonical JSON: keys sorted at every level, two-space indentation.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("reports always serialize");
        serde_json::to_string_pretty(&value).expect("values always print")
    }

    /// One row per outcome label.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,solver,outcome,count,trials,rate,wilson_low,wilson_high\n");
        for label in self.config.spec.outcome_labels() {
            let r = self.rates[*label];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.config.spec.name(),
                self.config.solver,
                label,
                r.count,
                self.trials,
                r.rate,
                r.wilson_low,
                r.wilson_high
            ));
        }
        out
    }

    pub fn to_human(&self) -> String {
        let mut out = format!(
            "{} experiment, solver {}, {} trials, seed {}\n",
            self.config.spec.name(),
            self.config.solver,
            self.trials,
            self.config.master_seed
        );
        for (label, r) in &self.rates {
            out.push_str(&format!(
                "  {label:<32} {:>8}/{:<8} rate {:.4}  95% CI [{:.4}, {:.4}]\n",
                r.count, r.total, r.rate, r.wilson_low, r.wilson_high
            ));
        }
        for (name, v) in &self.metrics {
            out.push_str(&format!("  {name:<32} {v}\n"));
        }
        out.push_str(&format!(
            "  hoeffding slack ({}%)            {:.4}\n",
            (1.0 - self.hoeffding_delta) * 100.0,
            self.hoeffding_slack
        ));
        out
    }
}

pub fn run_trials(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    run_trials_with_threads(cfg, None)
}

/// Like [`run_trials`], optionally capping the worker pool size.
pub fn run_trials_with_threads(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let run = || -> Result<Vec<TrialRecord>, ExperimentError> {
        (0..cfg.trials)
            .into_par_iter()
            .map(|ordinal| {
                cfg.run_trial(ordinal)
                    .map(|(record, _)| record)
                    .map_err(|source| ExperimentError::Trial { ordinal, source })
            })
            .collect()
    };
    let records = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| ExperimentError::Pool(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(aggregate(cfg, &records))
}

fn aggregate(cfg: &ExperimentConfig, records: &[TrialRecord]) -> ExperimentReport {
    let mut counts: BTreeMap<String, u64> = cfg
        .spec
        .outcome_labels()
        .iter()
        .map(|l| (l.to_string(), 0))
        .collect();
    let mut metrics: BTreeMap<String, u64> = BTreeMap::new();
    let mut bump = |name: &str, by: u64| *metrics.entry(name.to_string()).or_default() += by;

    for r in records {
        *counts.entry(r.label.to_string()).or_default() += 1;
        bump("distinct_queries_total", r.distinct_queries as u64);
        match &cfg.spec {
            ExperimentSpec::Parity { .. } => {
                bump("decisions_correct", u64::from(r.correct == Some(true)));
                bump("decisions_incorrect", u64::from(r.correct == Some(false)));
            }
            ExperimentSpec::Factor { .. } => {
                bump("unused_indices", r.unused as u64);
                bump("factoring_indices", r.factoring as u64);
                bump("sampling_factors", u64::from(r.sampling_factor));
            }
            ExperimentSpec::Wphp { .. } => {}
        }
    }
    if let ExperimentSpec::Factor { .. } = cfg.spec {
        let lens = records.iter().map(|r| r.seq_len as u64);
        metrics.insert("min_sequence_len".into(), lens.clone().min().unwrap_or(0));
        metrics.insert("max_sequence_len".into(), lens.max().unwrap_or(0));
    }

    let trials = records.len() as u64;
    let mut rates: BTreeMap<String, RateSummary> = counts
        .iter()
        .map(|(label, &c)| (label.clone(), RateSummary::new(c, trials)))
        .collect();
    if let ExperimentSpec::Factor { .. } = cfg.spec {
        rates.insert(
            "per_unused_index_factor".into(),
            RateSummary::new(metrics["factoring_indices"], metrics["unused_indices"]),
        );
    }
    if let ExperimentSpec::Parity { .. } = cfg.spec {
        let decided = metrics["decisions_correct"] + metrics["decisions_incorrect"];
        rates.insert(
            "decision_correct_given_decision".into(),
            RateSummary::new(metrics["decisions_correct"], decided),
        );
    }

    ExperimentReport {
        config: cfg.clone(),
        trials,
        counts,
        rates,
        metrics,
        wilson_confidence: WILSON_CONFIDENCE,
        hoeffding_delta: HOEFFDING_DELTA,
        hoeffding_slack: hoeffding_slack(trials, HOEFFDING_DELTA),
        seed_derivation: DERIVATION_RULE.to_string(),
        warnings: cfg.warnings(),
    }
}

/// A pass/fail statement about a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Claim {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// The probability statements each experiment is expected to satisfy.
///
/// Parity: abort rate at most `k/rows` plus Hoeffding slack, every decision
/// correct, and (when `rows >= 3k`) success rate at least 2/3. Factoring:
/// per-unused-index split frequency consistent with exactly 1/2, and success
/// rate at least `1 - 2^-(m_min - k) - 0.05`. Collision: failure rate at most
/// the output-space fraction plus Hoeffding slack.
pub fn check_claims(report: &ExperimentReport) -> Vec<Claim> {
    let slack = report.hoeffding_slack;
    let mut claims = Vec::new();
    match &report.config.spec {
        ExperimentSpec::Parity { m, k, rows } => {
            let cfg = ParityConfig {
                m: *m,
                budget: *k,
                rows: *rows,
            };
            let abort = report.rate("parity_abort");
            let line = cfg.abort_line();
            claims.push(Claim::new(
                "abort_rate_within_k_over_rows",
                abort <= line + slack,
                format!("abort rate {abort:.4} <= {line:.4} + {slack:.4}"),
            ));
            let wrong = report.metric("decisions_incorrect");
            claims.push(Claim::new(
                "decisions_all_correct",
                wrong == 0,
                format!("{wrong} incorrect decisions out of {}", report.count("parity_decision")),
            ));
            if cfg.bound_holds() {
                let success = report.rate("parity_decision");
                claims.push(Claim::new(
                    "success_at_least_two_thirds",
                    success >= 2.0 / 3.0,
                    format!("success rate {success:.4} >= 0.6667"),
                ));
            }
        }
        ExperimentSpec::Factor { k, .. } => {
            let per_index = report.rates["per_unused_index_factor"];
            claims.push(Claim::new(
                "per_index_rate_consistent_with_half",
                per_index.total > 0 && per_index.wilson_low <= 0.5 && 0.5 <= per_index.wilson_high,
                format!(
                    "{}/{} unused indices split n, 95% CI [{:.4}, {:.4}]",
                    per_index.count, per_index.total, per_index.wilson_low, per_index.wilson_high
                ),
            ));
            let m_min = report.metric("min_sequence_len") as i64;
            let unused = (m_min - *k as i64).max(0) as i32;
            let bound = 1.0 - 2f64.powi(-unused) - FACTOR_SUCCESS_ALLOWANCE;
            let success = report.rate("factor");
            claims.push(Claim::new(
                "success_at_least_bound",
                success >= bound,
                format!("success rate {success:.4} >= 1 - 2^-{unused} - {FACTOR_SUCCESS_ALLOWANCE}"),
            ));
        }
        ExperimentSpec::Wphp { .. } => {
            let fraction = report.config.spec.wphp_config().unwrap().output_space_fraction();
            let fail = report.rate("collision_fail");
            claims.push(Claim::new(
                "collision_failure_within_output_fraction",
                fail <= fraction + slack,
                format!("failure rate {fail:.4} <= {fraction:.3e} + {slack:.4}"),
            ));
        }
    }
    claims
}

fn bit_length(v: u64) -> u32 {
    u64::BITS - v.leading_zeros()
}

/// One row of the row-budget hierarchy: for modulus length `|n|` and its
/// length `||n||`, `A = |n|` rows against budget `B = k * ||n||^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HierarchyRow {
    pub n_len: u32,
    pub n_len_len: u32,
    pub rows: u64,
    pub budget: u64,
    pub bound_holds: bool,
}

pub fn hierarchy_table(k: u32, n_lengths: &[u32]) -> Vec<HierarchyRow> {
    n_lengths
        .iter()
        .map(|&n_len| {
            let n_len_len = bit_length(u64::from(n_len));
            let budget = u64::from(k) * u64::from(n_len_len).pow(k);
            HierarchyRow {
                n_len,
                n_len_len,
                rows: u64::from(n_len),
                budget,
                bound_holds: u64::from(n_len) >= 3 * budget,
            }
        })
        .collect()
}
