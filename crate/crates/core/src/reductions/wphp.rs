//! Extracting a collision of a compressing hash `h: [0, n^L) -> [0, n)`
//! from a deterministic solver for the hash-preimage game.
//!
//! A random sequence `x` of `L` values below `n^L` is hashed to targets
//! `z_i = h(x_i)`, and each query is answered with `x_i`. A deterministic
//! solver sees only `z` and at most `k` answers, so it has at most
//! `n^(L(k+1))` possible outputs; a random `x` is almost never one of them,
//! and any index where the output differs from `x` is a collision.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::RandBigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use crate::numtheory::Nat;
use crate::protocol::{
    run_game, Answered, FinalOutcome, PreimageInstance, SolverOutput, SolverStrategy,
    TeacherReply, TeacherStrategy, Turn,
};
use crate::seeding::TrialSeed;

use super::{OutcomeKind, ReductionError, ReductionOutcome};

/// Largest domain searched when a hash has no closed-form preimage.
const PREIMAGE_SEARCH_LIMIT: u64 = 1 << 20;

/// Upper limit on `(z, answers)` inputs enumerated by the output audit.
pub const AUDIT_INPUT_LIMIT: u64 = 1 << 20;

/// A map from `[0, n^L)` onto `[0, n)`.
pub trait CompressingHash: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn apply(&self, u: &Nat, n: &Nat) -> Nat;

    /// Smallest `u < bound` with `h(u) = z`.
    fn canonical_preimage(&self, z: &Nat, n: &Nat, bound: &Nat) -> Option<Nat> {
        let limit = bound.to_u64().unwrap_or(u64::MAX).min(PREIMAGE_SEARCH_LIMIT);
        (0..limit).map(Nat::from).find(|u| &self.apply(u, n) == z)
    }
}

/// `h(u) = u mod n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModHash;

impl CompressingHash for ModHash {
    fn name(&self) -> &'static str {
        "mod"
    }

    fn apply(&self, u: &Nat, n: &Nat) -> Nat {
        u % n
    }

    fn canonical_preimage(&self, z: &Nat, n: &Nat, bound: &Nat) -> Option<Nat> {
        (z < n && z < bound).then(|| z.clone())
    }
}

/// Sum of the base-`n` digits of `u`, reduced mod `n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DigitSumHash;

impl CompressingHash for DigitSumHash {
    fn name(&self) -> &'static str {
        "digit-sum"
    }

    fn apply(&self, u: &Nat, n: &Nat) -> Nat {
        let mut rest = u.clone();
        let mut sum = Nat::zero();
        while !rest.is_zero() {
            let (q, r) = rest.div_rem(n);
            sum += r;
            rest = q;
        }
        sum % n
    }

    fn canonical_preimage(&self, z: &Nat, n: &Nat, bound: &Nat) -> Option<Nat> {
        // a single digit below n is its own digit sum, and nothing smaller maps to it
        (z < n && z < bound).then(|| z.clone())
    }
}

#[derive(Debug, Clone)]
pub struct WphpConfig {
    pub n: Nat,
    pub budget: usize,
    pub seq_len: usize,
    pub hash: Arc<dyn CompressingHash>,
}

impl WphpConfig {
    /// Sequence length defaults to `|n|`.
    pub fn new(n: Nat, budget: usize, hash: Arc<dyn CompressingHash>) -> Self {
        let seq_len = n.bits() as usize;
        Self {
            n,
            budget,
            seq_len,
            hash,
        }
    }

    pub fn with_seq_len(mut self, seq_len: usize) -> Self {
        self.seq_len = seq_len;
        self
    }

    /// Domain size `n^L`.
    pub fn domain(&self) -> Nat {
        num_traits::pow(self.n.clone(), self.seq_len)
    }

    pub fn validate(&self) -> Result<(), ReductionError> {
        if self.n < Nat::from(2u32) || self.seq_len == 0 {
            return Err(ReductionError::Domain(
                "need n >= 2 and a non-empty sequence".into(),
            ));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.budget + 1 >= self.seq_len {
            out.push(format!(
                "k = {} is not below seq_len - 1 = {}: the output-counting bound does not bite",
                self.budget,
                self.seq_len.saturating_sub(1)
            ));
        }
        out
    }

    /// `n^(L(k+1)) / n^(L^2)`, capped at 1: the chance that a uniform `x`
    /// is one of the solver's possible outputs.
    pub fn output_space_fraction(&self) -> f64 {
        let n = self.n.to_f64().unwrap_or(f64::INFINITY);
        let exponent = self.seq_len as f64 * (self.budget as f64 + 1.0 - self.seq_len as f64);
        n.powf(exponent).min(1.0)
    }
}

/// Hash-preimage targets: a candidate `u < n^L` answers index `i` when
/// `h(u) = z_i`.
#[derive(Debug, Clone)]
pub struct HashInstance {
    n: Nat,
    domain: Nat,
    targets: Vec<Nat>,
    hash: Arc<dyn CompressingHash>,
}

impl HashInstance {
    pub fn new(cfg: &WphpConfig, targets: Vec<Nat>) -> Self {
        Self {
            n: cfg.n.clone(),
            domain: cfg.domain(),
            targets,
            hash: Arc::clone(&cfg.hash),
        }
    }

    pub fn n(&self) -> &Nat {
        &self.n
    }

    pub fn domain(&self) -> &Nat {
        &self.domain
    }

    pub fn targets(&self) -> &[Nat] {
        &self.targets
    }

    pub fn hash(&self, u: &Nat) -> Nat {
        self.hash.apply(u, &self.n)
    }

    fn canonical_preimage(&self, z: &Nat) -> Option<Nat> {
        self.hash.canonical_preimage(z, &self.n, &self.domain)
    }
}

impl PreimageInstance for HashInstance {
    type Value = Nat;

    fn len(&self) -> usize {
        self.targets.len()
    }

    fn accepts(&self, candidate: &Nat, index: usize) -> bool {
        index < self.targets.len()
            && candidate < &self.domain
            && self.hash(candidate) == self.targets[index]
    }

    fn same_image(&self, a: &Nat, b: &Nat) -> Option<bool> {
        Some(a < &self.domain && b < &self.domain && self.hash(a) == self.hash(b))
    }

    fn has_preimage(&self, index: usize) -> Option<bool> {
        let size = self.domain.to_u64().filter(|&d| d <= PREIMAGE_SEARCH_LIMIT)?;
        let z = self.targets.get(index)?;
        Some((0..size).any(|u| &self.hash(&Nat::from(u)) == z))
    }
}

/// Answers index `i` with `x_i`.
pub struct SequenceTeacher<'a> {
    xs: &'a [Nat],
}

impl<'a> SequenceTeacher<'a> {
    pub fn new(xs: &'a [Nat]) -> Self {
        Self { xs }
    }
}

impl TeacherStrategy<HashInstance> for SequenceTeacher<'_> {
    fn is_honest(&self) -> bool {
        true
    }

    fn answer(&mut self, _instance: &HashInstance, index: usize) -> TeacherReply<Nat> {
        TeacherReply::Answer(self.xs[index].clone())
    }
}

fn give_up() -> Turn<Nat> {
    Turn {
        proposal: None,
        query: None,
    }
}

/// Queries the first `k` indices, echoes the answers, and fills the rest
/// with the smallest preimage of each target.
#[derive(Debug, Clone)]
pub struct CanonicalWphpSolver {
    budget: usize,
}

impl CanonicalWphpSolver {
    pub fn new(budget: usize) -> Self {
        Self { budget }
    }
}

impl SolverStrategy<HashInstance> for CanonicalWphpSolver {
    fn is_deterministic(&self) -> bool {
        true
    }

    fn turn(&mut self, instance: &HashInstance, answers: &[Answered<Nat>]) -> Turn<Nat> {
        if answers.len() < self.budget.min(instance.len()) {
            return Turn::query(answers.len());
        }
        let mut y = Vec::with_capacity(instance.len());
        for (i, z) in instance.targets().iter().enumerate() {
            match answers.iter().find(|a| a.index == i) {
                Some(a) => y.push(a.value.clone()),
                None => match instance.canonical_preimage(z) {
                    Some(u) => y.push(u),
                    None => return give_up(),
                },
            }
        }
        Turn::propose(SolverOutput::Witnesses(y))
    }
}

/// Ignores its input and always proposes the all-zero sequence.
#[derive(Debug, Clone, Default)]
pub struct ConstantWphpSolver;

impl SolverStrategy<HashInstance> for ConstantWphpSolver {
    fn is_deterministic(&self) -> bool {
        true
    }

    fn turn(&mut self, instance: &HashInstance, _answers: &[Answered<Nat>]) -> Turn<Nat> {
        Turn::propose(SolverOutput::Witnesses(vec![Nat::zero(); instance.len()]))
    }
}

/// Tries to spread its outputs over as many sequences as possible: query
/// order depends on the targets and earlier answers, and unqueried slots get
/// `z_i + n*t` with `t` mixed from everything seen. Valid preimages only
/// under `h(u) = u mod n`; under other hashes its proposals are rejected.
#[derive(Debug, Clone)]
pub struct AdversarialWphpSolver {
    budget: usize,
}

impl AdversarialWphpSolver {
    pub fn new(budget: usize) -> Self {
        Self { budget }
    }
}

impl SolverStrategy<HashInstance> for AdversarialWphpSolver {
    fn is_deterministic(&self) -> bool {
        true
    }

    fn turn(&mut self, instance: &HashInstance, answers: &[Answered<Nat>]) -> Turn<Nat> {
        let len = instance.len();
        let mut mix = Nat::zero();
        for (j, z) in instance.targets().iter().enumerate() {
            mix += z * (j + 1);
        }
        for (j, a) in answers.iter().enumerate() {
            mix += &a.value * (2 * j + 3);
        }

        let asked: Vec<usize> = answers.iter().map(|a| a.index).collect();
        if asked.len() < self.budget.min(len) {
            let start = (&mix % len).to_usize().unwrap_or(0);
            let next = (0..len)
                .map(|step| (start + step) % len)
                .find(|i| !asked.contains(i))
                .unwrap_or(0);
            return Turn::query(next);
        }

        let n = instance.n();
        let spread = instance.domain() / n;
        let y = instance
            .targets()
            .iter()
            .enumerate()
            .map(|(i, z)| match answers.iter().find(|a| a.index == i) {
                Some(a) => a.value.clone(),
                None => z + n * ((&mix + i) % &spread),
            })
            .collect();
        Turn::propose(SolverOutput::Witnesses(y))
    }
}

/// Runs the extraction for a fixed sampled sequence `xs`.
pub fn collide_with<S>(
    cfg: &WphpConfig,
    xs: &[Nat],
    solver: &mut S,
) -> Result<ReductionOutcome<Nat>, ReductionError>
where
    S: SolverStrategy<HashInstance> + ?Sized,
{
    cfg.validate()?;
    if !solver.is_deterministic() {
        return Err(ReductionError::Domain(
            "collision extraction needs a deterministic solver".into(),
        ));
    }
    let targets = xs.iter().map(|x| cfg.hash.apply(x, &cfg.n)).collect();
    let instance = HashInstance::new(cfg, targets);
    let mut teacher = SequenceTeacher::new(xs);
    let transcript = run_game(&instance, solver, &mut teacher, cfg.budget)?;

    let kind = match &transcript.final_outcome {
        FinalOutcome::Accepted(SolverOutput::Collision(a, b)) => {
            OutcomeKind::Collision(a.clone(), b.clone())
        }
        FinalOutcome::Accepted(SolverOutput::Witnesses(y)) => xs
            .iter()
            .zip(y)
            .find(|(x, y)| x != y)
            .map_or(OutcomeKind::CollisionFail, |(x, y)| {
                OutcomeKind::Collision(x.clone(), y.clone())
            }),
        _ => OutcomeKind::CollisionFail,
    };
    if let OutcomeKind::Collision(a, b) = &kind {
        if a == b || instance.same_image(a, b) != Some(true) {
            return Err(ReductionError::Protocol(
                crate::protocol::ProtocolError::HarnessInvariantViolation(format!(
                    "extracted pair ({a}, {b}) is not a collision"
                )),
            ));
        }
    }
    Ok(ReductionOutcome {
        kind,
        transcript: Some(transcript),
        tally: None,
    })
}

/// Samples `x` uniformly from `[0, n^L)^L` and runs the extraction.
pub fn wphp_attack<S, R>(
    cfg: &WphpConfig,
    solver: &mut S,
    rng: &mut R,
) -> Result<ReductionOutcome<Nat>, ReductionError>
where
    S: SolverStrategy<HashInstance> + ?Sized,
    R: Rng + ?Sized,
{
    if !solver.is_deterministic() {
        return Err(ReductionError::Domain(
            "collision extraction needs a deterministic solver".into(),
        ));
    }
    let domain = cfg.domain();
    let xs: Vec<Nat> = (0..cfg.seq_len).map(|_| rng.gen_biguint_below(&domain)).collect();
    collide_with(cfg, &xs, solver)
}

pub fn run_one<S>(
    cfg: &WphpConfig,
    solver: &mut S,
    seed: TrialSeed,
) -> Result<ReductionOutcome<Nat>, ReductionError>
where
    S: SolverStrategy<HashInstance> + ?Sized,
{
    wphp_attack(cfg, solver, &mut seed.rng())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputAudit {
    /// Number of `(z, answers)` inputs enumerated.
    pub inputs: u64,
    pub distinct_outputs: u64,
    /// `n^(L(k+1))`.
    pub bound: u64,
}

impl OutputAudit {
    pub fn holds(&self) -> bool {
        self.distinct_outputs <= self.bound
    }
}

/// Serves a fixed answer tuple in query order, whatever index is asked.
struct TupleTeacher<'a> {
    answers: &'a [Nat],
    cursor: usize,
}

impl TeacherStrategy<HashInstance> for TupleTeacher<'_> {
    fn is_honest(&self) -> bool {
        false
    }

    fn answer(&mut self, _instance: &HashInstance, _index: usize) -> TeacherReply<Nat> {
        let a = self.answers[self.cursor.min(self.answers.len() - 1)].clone();
        self.cursor += 1;
        TeacherReply::Answer(a)
    }
}

/// Runs a deterministic solver on every input `(z, answer tuple)` with
/// `z in [0, n)^L` and `k` answers in `[0, n^L)`, and counts its distinct
/// final outputs.
pub fn output_count_audit<S>(cfg: &WphpConfig, solver: &mut S) -> Result<OutputAudit, ReductionError>
where
    S: SolverStrategy<HashInstance> + ?Sized,
{
    cfg.validate()?;
    if !solver.is_deterministic() {
        return Err(ReductionError::Domain("the output audit needs a deterministic solver".into()));
    }
    let total_exp = cfg.seq_len * (cfg.budget + 1);
    let estimate = num_traits::pow(cfg.n.clone(), total_exp);
    let inputs = match estimate.to_u64() {
        Some(v) if v <= AUDIT_INPUT_LIMIT => v,
        _ => {
            return Err(ReductionError::TooLarge {
                estimate: estimate.to_string(),
                limit: AUDIT_INPUT_LIMIT,
            })
        }
    };
    let n = cfg.n.to_u64().expect("n fits once n^(L(k+1)) does");
    let domain = cfg.domain().to_u64().expect("domain fits once n^(L(k+1)) does");

    let digits = |mut code: u64, base: u64, count: usize| -> Vec<Nat> {
        (0..count)
            .map(|_| {
                let d = code % base;
                code /= base;
                Nat::from(d)
            })
            .collect()
    };

    let z_count = n.pow(cfg.seq_len as u32);
    let answer_count = domain.pow(cfg.budget as u32);
    let mut outputs = HashSet::new();
    for z_code in 0..z_count {
        let instance = HashInstance::new(cfg, digits(z_code, n, cfg.seq_len));
        for a_code in 0..answer_count {
            let answers = digits(a_code, domain, cfg.budget.max(1));
            let mut teacher = TupleTeacher {
                answers: &answers,
                cursor: 0,
            };
            let transcript = run_game(&instance, solver, &mut teacher, cfg.budget)?;
            match transcript.final_outcome {
                FinalOutcome::Accepted(out) | FinalOutcome::Unverified(out) => {
                    outputs.insert(out);
                }
                _ => {}
            }
        }
    }
    Ok(OutputAudit {
        inputs,
        distinct_outputs: outputs.len() as u64,
        bound: inputs,
    })
}
