//! Factoring `n = p*q` with a solver for the square-root preimage game.
//!
//! Random units `x_i` are squared to form the targets and each query for
//! index `i` is answered with `x_i`. At an index the solver never asked
//! about, its witness `w_i` was chosen without knowing which of the four
//! roots `x_i` is, so `gcd(x_i - w_i, n)` splits `n` half of the time.

use std::collections::BTreeSet;

use num_bigint::RandBigInt;
use num_traits::One;
use rand::Rng;

use crate::numtheory::{factor_from_roots, four_roots, gcd, Nat, RabinModulus};
use crate::protocol::{
    run_game, Answered, FinalOutcome, PreimageInstance, SolverOutput, SolverStrategy,
    TeacherReply, TeacherStrategy, Turn,
};
use crate::seeding::TrialSeed;

use super::{IndexTally, OutcomeKind, ReductionError, ReductionOutcome};

/// Squaring modulo `n`: a candidate `x < n` answers index `i` when
/// `x^2 = y_i (mod n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquaringInstance {
    n: Nat,
    targets: Vec<Nat>,
}

impl SquaringInstance {
    pub fn new(n: Nat, targets: Vec<Nat>) -> Self {
        Self { n, targets }
    }

    pub fn n(&self) -> &Nat {
        &self.n
    }

    pub fn targets(&self) -> &[Nat] {
        &self.targets
    }
}

impl PreimageInstance for SquaringInstance {
    type Value = Nat;

    fn len(&self) -> usize {
        self.targets.len()
    }

    fn accepts(&self, candidate: &Nat, index: usize) -> bool {
        index < self.targets.len()
            && candidate < &self.n
            && (candidate * candidate) % &self.n == self.targets[index]
    }

    fn same_image(&self, a: &Nat, b: &Nat) -> Option<bool> {
        Some(a < &self.n && b < &self.n && (a * a) % &self.n == (b * b) % &self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactoringConfig {
    pub prime_bits: u64,
    pub budget: usize,
    /// Sequence length; `None` means `|n|`.
    pub m: Option<usize>,
}

impl FactoringConfig {
    pub fn new(prime_bits: u64, budget: usize) -> Self {
        Self {
            prime_bits,
            budget,
            m: None,
        }
    }

    pub fn sequence_len(&self, modulus: &RabinModulus) -> usize {
        self.m.unwrap_or_else(|| modulus.bits())
    }

    pub fn warnings(&self, m: usize) -> Vec<String> {
        let mut out = Vec::new();
        if m <= self.budget {
            out.push(format!(
                "sequence length {m} <= k = {}: a solver may leave no index unqueried",
                self.budget
            ));
        }
        out
    }
}

/// Answers index `i` with the sampled root `x_i`.
pub struct RootTeacher<'a> {
    xs: &'a [Nat],
}

impl<'a> RootTeacher<'a> {
    pub fn new(xs: &'a [Nat]) -> Self {
        Self { xs }
    }
}

impl TeacherStrategy<SquaringInstance> for RootTeacher<'_> {
    fn is_honest(&self) -> bool {
        true
    }

    fn answer(&mut self, _instance: &SquaringInstance, index: usize) -> TeacherReply<Nat> {
        TeacherReply::Answer(self.xs[index].clone())
    }
}

/// Which of the four roots a cheating solver picks at an unqueried index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootChoice {
    Min,
    Max,
}

/// Cheating solver: holds the factorization, queries the first `k` indices,
/// echoes those answers and fills every other slot with a fixed root.
pub struct CanonicalRootSolver {
    secret: RabinModulus,
    budget: usize,
    choice: RootChoice,
}

impl CanonicalRootSolver {
    pub fn new(secret: RabinModulus, budget: usize) -> Self {
        Self::with_choice(secret, budget, RootChoice::Min)
    }

    pub fn with_choice(secret: RabinModulus, budget: usize, choice: RootChoice) -> Self {
        Self {
            secret,
            budget,
            choice,
        }
    }
}

impl std::fmt::Debug for CanonicalRootSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CanonicalRootSolver")
            .field("budget", &self.budget)
            .field("choice", &self.choice)
            .finish_non_exhaustive()
    }
}

impl SolverStrategy<SquaringInstance> for CanonicalRootSolver {
    fn is_deterministic(&self) -> bool {
        true
    }

    fn turn(&mut self, instance: &SquaringInstance, answers: &[Answered<Nat>]) -> Turn<Nat> {
        let m = instance.len();
        if answers.len() < self.budget.min(m) {
            return Turn::query(answers.len());
        }
        let mut w = Vec::with_capacity(m);
        for (i, y) in instance.targets().iter().enumerate() {
            if let Some(a) = answers.iter().find(|a| a.index == i) {
                w.push(a.value.clone());
                continue;
            }
            match four_roots(y, &self.secret) {
                Ok(quad) => w.push(match self.choice {
                    RootChoice::Min => quad.min().clone(),
                    RootChoice::Max => quad.roots()[3].clone(),
                }),
                Err(_) => {
                    return Turn {
                        proposal: None,
                        query: None,
                    }
                }
            }
        }
        Turn::propose(SolverOutput::Witnesses(w))
    }
}

/// Runs the attack for fixed sampled roots `xs`.
pub fn attack_with<S>(
    modulus: &RabinModulus,
    xs: &[Nat],
    budget: usize,
    solver: &mut S,
) -> Result<ReductionOutcome<Nat>, ReductionError>
where
    S: SolverStrategy<SquaringInstance> + ?Sized,
{
    let n = modulus.n();
    for x in xs {
        let g = gcd(x, n);
        if !g.is_one() && &g != n {
            return Ok(ReductionOutcome {
                kind: OutcomeKind::Factor(g),
                transcript: None,
                tally: None,
            });
        }
    }
    if xs.iter().any(|x| x >= n || x == &Nat::from(0u32)) {
        return Err(ReductionError::Domain("sampled roots must lie in (0, n)".into()));
    }

    let targets = xs.iter().map(|x| (x * x) % n).collect();
    let instance = SquaringInstance::new(n.clone(), targets);
    let mut teacher = RootTeacher::new(xs);
    let transcript = run_game(&instance, solver, &mut teacher, budget)?;

    let (kind, tally) = match &transcript.final_outcome {
        FinalOutcome::Accepted(SolverOutput::Witnesses(w)) => {
            let queried: BTreeSet<usize> = transcript.queried_indices();
            let mut tally = IndexTally::default();
            let mut first = None;
            for i in (0..xs.len()).filter(|i| !queried.contains(i)) {
                tally.unused += 1;
                if let Some(g) = factor_from_roots(&xs[i], &w[i], n) {
                    tally.factoring += 1;
                    first.get_or_insert(g);
                }
            }
            let kind = first.map_or(OutcomeKind::FactorFail, OutcomeKind::Factor);
            (kind, Some(tally))
        }
        _ => (OutcomeKind::FactorFail, None),
    };
    Ok(ReductionOutcome {
        kind,
        transcript: Some(transcript),
        tally,
    })
}

/// Samples `x_0..x_{m-1}` uniformly from `(0, n)` and runs the attack.
pub fn factoring_attack<S, R>(
    modulus: &RabinModulus,
    cfg: &FactoringConfig,
    solver: &mut S,
    rng: &mut R,
) -> Result<ReductionOutcome<Nat>, ReductionError>
where
    S: SolverStrategy<SquaringInstance> + ?Sized,
    R: Rng + ?Sized,
{
    let m = cfg.sequence_len(modulus);
    let one = Nat::one();
    let xs: Vec<Nat> = (0..m)
        .map(|_| rng.gen_biguint_range(&one, modulus.n()))
        .collect();
    attack_with(modulus, &xs, cfg.budget, solver)
}

/// One seeded trial: samples a fresh modulus, builds the solver for it, and
/// runs the attack. Returns the sequence length alongside the outcome.
pub fn run_one<F, S>(
    cfg: &FactoringConfig,
    make_solver: F,
    seed: TrialSeed,
) -> Result<(usize, ReductionOutcome<Nat>), ReductionError>
where
    F: FnOnce(&RabinModulus) -> S,
    S: SolverStrategy<SquaringInstance>,
{
    let mut rng = seed.rng();
    let modulus = RabinModulus::generate(cfg.prime_bits, &mut rng)?;
    let mut solver = make_solver(&modulus);
    let m = cfg.sequence_len(&modulus);
    let outcome = factoring_attack(&modulus, cfg, &mut solver, &mut rng)?;
    Ok((m, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat(v: u64) -> Nat {
        Nat::from(v)
    }

    fn n21() -> RabinModulus {
        RabinModulus::new(nat(3), nat(7)).unwrap()
    }

    fn units_mod_21() -> Vec<Nat> {
        (1..21u64).filter(|x| x % 3 != 0 && x % 7 != 0).map(nat).collect()
    }

    #[test]
    fn per_unused_index_law_is_exactly_one_half_at_n21() {
        // m = 2, k = 1: index 0 is queried, index 1 is the unused one
        let units = units_mod_21();
        let mut splits = 0;
        let mut cases = 0;
        for x0 in &units {
            for x1 in &units {
                let mut solver = CanonicalRootSolver::new(n21(), 1);
                let out = attack_with(&n21(), &[x0.clone(), x1.clone()], 1, &mut solver).unwrap();
                let tally = out.tally.unwrap();
                assert_eq!(tally.unused, 1);
                cases += 1;
                splits += tally.factoring;
                if let OutcomeKind::Factor(g) = &out.kind {
                    assert!(g == &nat(3) || g == &nat(7));
                }
            }
        }
        assert_eq!(2 * splits, cases);
    }

    #[test]
    fn gcd_at_sampling_is_an_immediate_factor() {
        let mut solver = CanonicalRootSolver::new(n21(), 1);
        let out = attack_with(&n21(), &[nat(3), nat(2)], 1, &mut solver).unwrap();
        assert_eq!(out.kind, OutcomeKind::Factor(nat(3)));
        assert!(out.transcript.is_none());
    }

    #[test]
    fn exhausted_indices_can_fail_without_error() {
        let mut solver = CanonicalRootSolver::new(n21(), 2);
        let out = attack_with(&n21(), &[nat(2), nat(5)], 2, &mut solver).unwrap();
        assert_eq!(out.kind, OutcomeKind::FactorFail);
        assert_eq!(out.tally, Some(IndexTally { unused: 0, factoring: 0 }));
        assert_eq!(out.transcript.unwrap().queries_used, 2);
    }

    #[test]
    fn first_unused_success_wins_in_ascending_order() {
        // min roots: 4 -> 2, 16 -> 4. x = (5, 10): 5 splits against 2, 10 against 4
        let mut solver = CanonicalRootSolver::new(n21(), 0);
        let out = attack_with(&n21(), &[nat(5), nat(10)], 0, &mut solver).unwrap();
        assert_eq!(out.kind, OutcomeKind::Factor(nat(3)));
        assert_eq!(out.tally, Some(IndexTally { unused: 2, factoring: 2 }));
    }

    #[test]
    fn transcripts_never_contain_the_factors() {
        let mut rng = TrialSeed::new(3, 3).rng();
        let modulus = RabinModulus::generate(16, &mut rng).unwrap();
        let cfg = FactoringConfig::new(16, 5);
        let mut solver = CanonicalRootSolver::new(modulus.clone(), 5);
        let out = factoring_attack(&modulus, &cfg, &mut solver, &mut rng).unwrap();
        let json = out.transcript.unwrap().to_json().to_string();
        let (p, q) = modulus.factors();
        assert!(!json.contains(&format!("\"{p}\"")) && !json.contains(&format!("\"{q}\"")));
        assert!(!format!("{solver:?}").contains(&p.to_string()));
    }

    #[test]
    fn seeded_trials_are_reproducible() {
        let cfg = FactoringConfig::new(16, 5);
        let make = |m: &RabinModulus| CanonicalRootSolver::new(m.clone(), 5);
        let a = run_one(&cfg, make, TrialSeed::new(1, 4)).unwrap();
        let b = run_one(&cfg, make, TrialSeed::new(1, 4)).unwrap();
        assert_eq!(a, b);
        assert!(a.0 >= 31);
        let tally = a.1.tally.unwrap();
        assert_eq!(tally.unused, a.0 - 5);
    }

    #[test]
    fn max_root_solver_is_also_sound() {
        let cfg = FactoringConfig::new(12, 3);
        let make = |m: &RabinModulus| CanonicalRootSolver::with_choice(m.clone(), 3, RootChoice::Max);
        for t in 0..20 {
            let (_, out) = run_one(&cfg, make, TrialSeed::new(2, t)).unwrap();
            if let Some(tr) = &out.transcript {
                assert!(tr.accepted().is_some());
            }
        }
    }

    #[test]
    fn short_sequences_warn() {
        let cfg = FactoringConfig::new(16, 5);
        assert!(cfg.warnings(32).is_empty());
        assert_eq!(cfg.warnings(5).len(), 1);
    }
}
