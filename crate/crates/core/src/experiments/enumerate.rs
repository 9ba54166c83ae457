//! Exhaustive checks over small parameter spaces.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::bitparity::{par, unpar, xor, BitMatrix, BitVec};
use crate::numtheory::{factor_from_roots, four_roots, gcd, Nat, RabinModulus};
use crate::protocol::{run_game, FinalOutcome, FnTeacher, SolverStrategy, TeacherReply};
use crate::reductions::parity::{
    blind, AdaptiveParitySolver, BlindingTeacher, ParityInstance, ScriptedParitySolver,
};
use crate::reductions::wphp::{
    output_count_audit, AdversarialWphpSolver, CanonicalWphpSolver, CompressingHash,
    ConstantWphpSolver, DigitSumHash, HashInstance, ModHash, WphpConfig,
};

use super::ExperimentError;

pub const CHECKS: &[&str] = &[
    "par-unpar-bijection",
    "par-linearity",
    "four-roots",
    "factor-extraction",
    "blinding-uniformity",
    "abort-exact",
    "output-count",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Number of cases examined.
    pub cases: u64,
    pub counterexample: Option<String>,
}

/// Collects cases until the first counterexample.
struct Tally {
    cases: u64,
    counterexample: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Self {
            cases: 0,
            counterexample: None,
        }
    }

    /// Records one case; returns false once a counterexample is held.
    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) -> bool {
        self.cases += 1;
        if !ok && self.counterexample.is_none() {
            self.counterexample = Some(describe());
        }
        self.counterexample.is_none()
    }

    fn finish(self, name: &str) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            passed: self.counterexample.is_none(),
            cases: self.cases,
            counterexample: self.counterexample,
        }
    }
}

pub fn enumerate_check(name: &str) -> Result<CheckResult, ExperimentError> {
    let tally = match name {
        "par-unpar-bijection" => par_unpar_bijection(),
        "par-linearity" => par_linearity(),
        "four-roots" => four_roots_check(),
        "factor-extraction" => factor_extraction(),
        "blinding-uniformity" => blinding_uniformity(),
        "abort-exact" => abort_exact(),
        "output-count" => output_count()?,
        other => return Err(ExperimentError::UnknownCheck(other.to_string())),
    };
    Ok(tally.finish(name))
}

fn all_vectors(m: usize) -> impl Iterator<Item = BitVec> {
    (0..1u64 << m).map(move |i| BitVec::from_index(i, m))
}

fn par_unpar_bijection() -> Tally {
    let mut t = Tally::new();
    for m in 1..=12 {
        let mut images = BTreeSet::new();
        for x in all_vectors(m) {
            let y = par(&x);
            let ok = unpar(&y) == x && par(&unpar(&x)) == x;
            if !t.check(ok, || format!("m={m}, x={x}")) {
                return t;
            }
            images.insert(y.to_index());
        }
        if !t.check(images.len() == 1 << m, || format!("m={m}: par is not onto")) {
            return t;
        }
    }
    t
}

fn par_linearity() -> Tally {
    let mut t = Tally::new();
    for m in 1..=8 {
        let vs: Vec<BitVec> = all_vectors(m).collect();
        for b in &vs {
            for c in &vs {
                let lhs = par(&xor(b, c).unwrap());
                let rhs = xor(&par(b), &par(c)).unwrap();
                if !t.check(lhs == rhs, || format!("m={m}, b={b}, c={c}")) {
                    return t;
                }
            }
        }
    }
    t
}

const SMALL_PRIMES: [u64; 9] = [3, 5, 7, 11, 13, 17, 19, 23, 29];

fn small_moduli() -> impl Iterator<Item = (u64, u64, RabinModulus)> {
    SMALL_PRIMES.iter().enumerate().flat_map(|(i, &p)| {
        SMALL_PRIMES[i + 1..].iter().map(move |&q| {
            (p, q, RabinModulus::new(Nat::from(p), Nat::from(q)).expect("distinct odd primes"))
        })
    })
}

fn four_roots_check() -> Tally {
    let mut t = Tally::new();
    for (p, q, modulus) in small_moduli() {
        let n = p * q;
        for c in 1..n {
            if gcd(&Nat::from(c), modulus.n()) != Nat::from(1u32) {
                continue;
            }
            let brute: Vec<Nat> = (0..n).filter(|x| x * x % n == c).map(Nat::from).collect();
            let got = four_roots(&Nat::from(c), &modulus);
            let ok = match &got {
                Ok(quad) => quad.roots().to_vec() == brute,
                Err(_) => brute.is_empty(),
            };
            if !t.check(ok, || format!("n={n}, c={c}: got {got:?}, expected {brute:?}")) {
                return t;
            }
        }
    }
    t
}

fn factor_extraction() -> Tally {
    let mut t = Tally::new();
    for (p, q, modulus) in small_moduli() {
        let n = p * q;
        for x in 1..n {
            if x % p == 0 || x % q == 0 {
                continue;
            }
            let quad = four_roots(&Nat::from(x * x % n), &modulus).expect("square of a unit");
            let mut splitting = 0;
            for a in quad.roots() {
                for b in quad.roots() {
                    let got = factor_from_roots(a, b, modulus.n());
                    let expect_split = a != b && a + b != Nat::from(n);
                    let ok = match &got {
                        Some(g) => expect_split && (g == &Nat::from(p) || g == &Nat::from(q)),
                        None => !expect_split,
                    };
                    if !t.check(ok, || format!("n={n}, roots {a}, {b}: got {got:?}")) {
                        return t;
                    }
                    splitting += usize::from(got.is_some());
                }
            }
            // ordered pairs: each root has exactly two splitting partners
            if !t.check(splitting == 8, || format!("n={n}, x={x}: {splitting} splitting ordered pairs")) {
                return t;
            }
        }
    }
    t
}

/// Every `m`-tuple of length-`m` vectors.
fn all_u_tuples(m: usize) -> Vec<Vec<BitVec>> {
    (0..1u64 << (m * m))
        .map(|code| {
            (0..m)
                .map(|i| BitVec::from_index((code >> (i * m)) & ((1 << m) - 1), m))
                .collect()
        })
        .collect()
}

fn matrix_key(y: &BitMatrix) -> Vec<u64> {
    y.rows().iter().map(BitVec::to_index).collect()
}

type ParitySolverFactory = fn(usize, usize) -> Box<dyn SolverStrategy<ParityInstance>>;

fn parity_solvers() -> [(&'static str, ParitySolverFactory); 2] {
    [
        ("scripted", |k, rows| Box::new(ScriptedParitySolver::first_rows(k, rows))),
        ("adaptive", |k, _| Box::new(AdaptiveParitySolver::new(k))),
    ]
}

/// For each input the blinded matrix is uniform for every hidden row, and
/// the distribution of query sequences does not depend on the input.
fn blinding_uniformity() -> Tally {
    let mut t = Tally::new();
    for m in [2usize, 3] {
        let tuples = all_u_tuples(m);
        for (solver_name, make) in parity_solvers() {
            let k = m - 1;
            let mut reference: Option<BTreeMap<(Vec<usize>, bool), u64>> = None;
            for input in all_vectors(m) {
                let mut histogram = BTreeMap::new();
                for r in 0..m {
                    let mut seen = BTreeSet::new();
                    for u in &tuples {
                        let y = blind(&input, u, r).expect("square shapes");
                        seen.insert(matrix_key(&y));
                        let instance = ParityInstance::new(y);
                        let mut solver = make(k, m);
                        let mut teacher = BlindingTeacher::new(u, r);
                        let tr = run_game(&instance, solver.as_mut(), &mut teacher, k).expect("valid game");
                        t.cases += 1;
                        let queries = tr.rounds.iter().map(|round| round.index).collect();
                        let aborted = matches!(tr.final_outcome, FinalOutcome::Aborted);
                        *histogram.entry((queries, aborted)).or_insert(0u64) += 1;
                    }
                    let ok = seen.len() == tuples.len();
                    if !t.check(ok, || format!("m={m}, input={input}, r={r}: only {} distinct matrices", seen.len())) {
                        return t;
                    }
                }
                match &reference {
                    None => reference = Some(histogram),
                    Some(h) => {
                        if !t.check(h == &histogram, || {
                            format!("m={m}, {solver_name} solver: query distribution differs for input {input}")
                        }) {
                            return t;
                        }
                    }
                }
            }
        }
    }
    t
}

/// `m * #aborts` equals the summed count of rows the solver would touch
/// against an honest oracle, over all blinding choices.
fn abort_exact() -> Tally {
    let mut t = Tally::new();
    for m in 1..=3usize {
        let tuples = all_u_tuples(m);
        for k in 0..=m {
            for (solver_name, make) in parity_solvers() {
                for input in all_vectors(m) {
                    let mut aborts = 0u64;
                    let mut touched = 0u64;
                    let mut games = 0u64;
                    for r in 0..m {
                        for u in &tuples {
                            let instance = ParityInstance::new(blind(&input, u, r).expect("square shapes"));
                            let mut teacher = BlindingTeacher::new(u, r);
                            let tr = run_game(&instance, make(k, m).as_mut(), &mut teacher, k).expect("valid game");
                            aborts += u64::from(matches!(tr.final_outcome, FinalOutcome::Aborted));
                            let mut oracle = FnTeacher::new(true, |inst: &ParityInstance, i: usize| {
                                TeacherReply::Answer(par(inst.matrix().row(i)))
                            });
                            let full = run_game(&instance, make(k, m).as_mut(), &mut oracle, k).expect("valid game");
                            touched += full.distinct_indices as u64;
                            games += 1;
                        }
                    }
                    let ok = aborts * m as u64 == touched && aborts * m as u64 <= k as u64 * games;
                    if !t.check(ok, || {
                        format!("m={m}, k={k}, {solver_name} solver, input={input}: {aborts} aborts, {touched} touched rows over {games} games")
                    }) {
                        return t;
                    }
                }
            }
        }
    }
    t
}

fn output_count() -> Result<Tally, ExperimentError> {
    let mut t = Tally::new();
    let hashes: [Arc<dyn CompressingHash>; 2] = [Arc::new(ModHash), Arc::new(DigitSumHash)];
    for hash in hashes {
        let cfg = WphpConfig::new(Nat::from(4u32), 1, hash.clone()).with_seq_len(2);
        let solvers: [(&str, Box<dyn SolverStrategy<HashInstance>>); 3] = [
            ("canonical", Box::new(CanonicalWphpSolver::new(1))),
            ("adversarial", Box::new(AdversarialWphpSolver::new(1))),
            ("constant", Box::new(ConstantWphpSolver)),
        ];
        for (solver_name, mut solver) in solvers {
            let audit = output_count_audit(&cfg, solver.as_mut())?;
            let ok = audit.holds();
            if !t.check(ok, || {
                format!(
                    "{} hash, {solver_name} solver: {} distinct outputs exceed {}",
                    hash.name(),
                    audit.distinct_outputs,
                    audit.bound
                )
            }) {
                return Ok(t);
            }
        }
    }
    Ok(t)
}
