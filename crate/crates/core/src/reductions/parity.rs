//! Deciding parity with a solver for the prefix-parity preimage game.
//!
//! The input `I` is hidden in one uniformly chosen row `r` of a matrix whose
//! other rows are `unpar` of fresh random strings `U_i`. Queries to rows
//! `i != r` are answered with `U_i`; a query to row `r` aborts. If the solver
//! finishes, `U_r ^ W[r]` is the prefix parity of `I`.

use std::collections::BTreeSet;

use rand::Rng;

use crate::bitparity::{par, unpar, xor, BitError, BitMatrix, BitVec};
use crate::protocol::{
    run_game, Answered, FinalOutcome, PreimageInstance, SolverOutput, SolverStrategy,
    TeacherReply, TeacherStrategy, Turn,
};
use crate::seeding::TrialSeed;

use super::{OutcomeKind, ReductionError, ReductionOutcome};

/// Rows of a bit matrix as targets of `unpar`: a candidate `X` answers row
/// `i` when `unpar(X) = Y[i]`, i.e. `X = par(Y[i])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityInstance {
    matrix: BitMatrix,
}

impl ParityInstance {
    pub fn new(matrix: BitMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }
}

impl PreimageInstance for ParityInstance {
    type Value = BitVec;

    fn len(&self) -> usize {
        self.matrix.row_count()
    }

    fn accepts(&self, candidate: &BitVec, index: usize) -> bool {
        index < self.len()
            && candidate.len() == self.matrix.col_count()
            && &unpar(candidate) == self.matrix.row(index)
    }

    fn has_preimage(&self, index: usize) -> Option<bool> {
        // unpar is a bijection, so every row has exactly one preimage
        Some(index < self.len())
    }
}

/// Vector length `m`, query budget `k` and row count `A` (defaults to `m`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityConfig {
    pub m: usize,
    pub budget: usize,
    pub rows: usize,
}

impl ParityConfig {
    pub fn square(m: usize, budget: usize) -> Self {
        Self { m, budget, rows: m }
    }

    pub fn validate(&self) -> Result<(), ReductionError> {
        if self.m == 0 || self.rows == 0 {
            return Err(ReductionError::Domain(
                "vector length and row count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// The abort bound `k/A <= 1/3` needs `A >= 3k`.
    pub fn bound_holds(&self) -> bool {
        self.rows >= 3 * self.budget
    }

    /// Upper bound on the abort probability for any solver.
    pub fn abort_line(&self) -> f64 {
        (self.budget as f64 / self.rows as f64).min(1.0)
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.bound_holds() {
            out.push(format!(
                "rows = {} < 3k = {}: the abort bound k/rows <= 1/3 is void for this configuration",
                self.rows,
                3 * self.budget
            ));
        }
        out
    }
}

/// Row `i` is `unpar(U_i)` except row `r`, which is `I ^ unpar(U_r)`.
pub fn blind(input: &BitVec, u: &[BitVec], r: usize) -> Result<BitMatrix, ReductionError> {
    if r >= u.len() {
        return Err(ReductionError::Domain(format!(
            "hidden row {r} outside 0..{}",
            u.len()
        )));
    }
    let rows = u
        .iter()
        .enumerate()
        .map(|(i, ui)| {
            if ui.len() != input.len() {
                return Err(ReductionError::Domain(format!(
                    "U_{i} has length {}, input has {}",
                    ui.len(),
                    input.len()
                )));
            }
            let v = unpar(ui);
            Ok(if i == r { xor(input, &v)? } else { v })
        })
        .collect::<Result<Vec<_>, ReductionError>>()?;
    Ok(BitMatrix::from_rows(rows)?)
}

/// `U_r ^ W[r]`, which equals `par(I)` when `W[r]` is the prefix parity of
/// the hidden row.
pub fn recover_parity(u_r: &BitVec, w_r: &BitVec) -> Result<BitVec, ReductionError> {
    Ok(xor(u_r, w_r)?)
}

/// Answers row `i` with `U_i` and aborts on the hidden row.
pub struct BlindingTeacher<'a> {
    u: &'a [BitVec],
    hidden: usize,
}

impl<'a> BlindingTeacher<'a> {
    pub fn new(u: &'a [BitVec], hidden: usize) -> Self {
        Self { u, hidden }
    }
}

impl TeacherStrategy<ParityInstance> for BlindingTeacher<'_> {
    fn is_honest(&self) -> bool {
        true
    }

    fn answer(&mut self, _instance: &ParityInstance, index: usize) -> TeacherReply<BitVec> {
        if index == self.hidden {
            TeacherReply::Abort
        } else {
            TeacherReply::Answer(self.u[index].clone())
        }
    }
}

/// Full witness sequence: received answers where available, prefix parity
/// computed directly elsewhere.
fn complete_witnesses(instance: &ParityInstance, answers: &[Answered<BitVec>]) -> Vec<BitVec> {
    let mut w: Vec<BitVec> = instance.matrix().rows().iter().map(par).collect();
    for a in answers {
        w[a.index] = a.value.clone();
    }
    w
}

/// Knows how to compute parity and proposes the full answer at once.
#[derive(Debug, Clone, Default)]
pub struct OmniscientParitySolver;

impl SolverStrategy<ParityInstance> for OmniscientParitySolver {
    fn is_deterministic(&self) -> bool {
        true
    }

    fn turn(&mut self, instance: &ParityInstance, answers: &[Answered<BitVec>]) -> Turn<BitVec> {
        Turn::propose(SolverOutput::Witnesses(complete_witnesses(instance, answers)))
    }
}

/// Queries a fixed list of rows in order, then proposes. Sound: the final
/// proposal is always correct given honest answers.
#[derive(Debug, Clone)]
pub struct ScriptedParitySolver {
    script: Vec<usize>,
}

impl ScriptedParitySolver {
    pub fn new(script: Vec<usize>) -> Self {
        Self { script }
    }

    /// Queries rows `0..min(k, rows)`.
    pub fn first_rows(budget: usize, rows: usize) -> Self {
        Self::new((0..budget.min(rows)).collect())
    }
}

impl SolverStrategy<ParityInstance> for ScriptedParitySolver {
    fn is_deterministic(&self) -> bool {
        true
    }

    fn turn(&mut self, instance: &ParityInstance, answers: &[Answered<BitVec>]) -> Turn<BitVec> {
        match self.script.get(answers.len()) {
            Some(&i) => Turn::query(i),
            None => Turn::propose(SolverOutput::Witnesses(complete_witnesses(instance, answers))),
        }
    }
}

/// Picks each next row from the matrix contents and the answers so far, up
/// to `budget` distinct rows, then proposes.
#[derive(Debug, Clone)]
pub struct AdaptiveParitySolver {
    budget: usize,
}

impl AdaptiveParitySolver {
    pub fn new(budget: usize) -> Self {
        Self { budget }
    }
}

impl SolverStrategy<ParityInstance> for AdaptiveParitySolver {
    fn is_deterministic(&self) -> bool {
        true
    }

    fn turn(&mut self, instance: &ParityInstance, answers: &[Answered<BitVec>]) -> Turn<BitVec> {
        let rows = instance.len();
        let asked: BTreeSet<usize> = answers.iter().map(|a| a.index).collect();
        if asked.len() >= self.budget.min(rows) {
            return Turn::propose(SolverOutput::Witnesses(complete_witnesses(instance, answers)));
        }
        // start from the weight of the last answered row (or of row 0) and
        // walk forward to the first row not yet asked about
        let seed_row = answers.last().map_or_else(|| instance.matrix().row(0).clone(), |a| a.value.clone());
        let mut i = (seed_row.weight() + 3 * asked.len()) % rows;
        while asked.contains(&i) {
            i = (i + 1) % rows;
        }
        Turn::query(i)
    }
}

/// Runs the blinded game for fixed randomness `(u, hidden)`.
pub fn decide_with<S>(
    input: &BitVec,
    u: &[BitVec],
    hidden: usize,
    budget: usize,
    solver: &mut S,
) -> Result<ReductionOutcome<BitVec>, ReductionError>
where
    S: SolverStrategy<ParityInstance> + ?Sized,
{
    let instance = ParityInstance::new(blind(input, u, hidden)?);
    let mut teacher = BlindingTeacher::new(u, hidden);
    let transcript = run_game(&instance, solver, &mut teacher, budget)?;
    let kind = match &transcript.final_outcome {
        FinalOutcome::Aborted => OutcomeKind::ParityAbort,
        FinalOutcome::Accepted(SolverOutput::Witnesses(w)) => {
            // the recovered vector is par(I); its last bit is the parity of I
            let recovered = recover_parity(&u[hidden], &w[hidden])?;
            let last = recovered.len().checked_sub(1).ok_or(BitError::Empty)?;
            OutcomeKind::ParityDecision(recovered.get(last))
        }
        _ => OutcomeKind::ParityFail,
    };
    Ok(ReductionOutcome {
        kind,
        transcript: Some(transcript),
        tally: None,
    })
}

/// Samples `U_0..U_{A-1}` and the hidden row, then plays the blinded game.
pub fn parity_decider<S, R>(
    input: &BitVec,
    cfg: &ParityConfig,
    solver: &mut S,
    rng: &mut R,
) -> Result<ReductionOutcome<BitVec>, ReductionError>
where
    S: SolverStrategy<ParityInstance> + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    if input.len() != cfg.m {
        return Err(ReductionError::Domain(format!(
            "input has length {}, configuration expects {}",
            input.len(),
            cfg.m
        )));
    }
    let u: Vec<BitVec> = (0..cfg.rows).map(|_| BitVec::random(cfg.m, rng)).collect();
    let hidden = rng.gen_range(0..cfg.rows);
    decide_with(input, &u, hidden, cfg.budget, solver)
}

/// One seeded trial: draws a uniform input, then runs the decider. Returns
/// the input alongside the outcome so callers can score the decision.
pub fn run_one<S>(
    cfg: &ParityConfig,
    solver: &mut S,
    seed: TrialSeed,
) -> Result<(BitVec, ReductionOutcome<BitVec>), ReductionError>
where
    S: SolverStrategy<ParityInstance> + ?Sized,
{
    let mut rng = seed.rng();
    let input = BitVec::random(cfg.m, &mut rng);
    let outcome = parity_decider(&input, cfg, solver, &mut rng)?;
    Ok((input, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitparity::parity_bit;
    use std::collections::BTreeMap;

    fn bv(s: &str) -> BitVec {
        s.parse().unwrap()
    }

    fn all_vectors(m: usize) -> Vec<BitVec> {
        (0..1u64 << m).map(|i| BitVec::from_index(i, m)).collect()
    }

    /// Every `(U_0..U_{m-1})` for vector length `m`.
    fn all_u_tuples(m: usize) -> Vec<Vec<BitVec>> {
        (0..1u64 << (m * m))
            .map(|code| {
                (0..m)
                    .map(|i| BitVec::from_index((code >> (i * m)) & ((1 << m) - 1), m))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn blind_examples() {
        let zeros = vec![bv("00"), bv("00")];
        let y = blind(&bv("00"), &zeros, 0).unwrap();
        assert_eq!(y.rows(), &[bv("00"), bv("00")]);
        let y = blind(&bv("11"), &zeros, 1).unwrap();
        assert_eq!(y.rows(), &[bv("00"), bv("11")]);
        assert!(blind(&bv("11"), &zeros, 2).is_err());
        assert!(blind(&bv("110"), &zeros, 0).is_err());
    }

    #[test]
    fn blind_is_uniform_and_input_independent_at_m2() {
        let m = 2;
        for input in all_vectors(m) {
            let mut hits: BTreeMap<(BitMatrix, usize), usize> = BTreeMap::new();
            for u in all_u_tuples(m) {
                for r in 0..m {
                    *hits.entry((blind(&input, &u, r).unwrap(), r)).or_default() += 1;
                }
            }
            // 2^(m*m) matrices times m rows, each hit once
            assert_eq!(hits.len(), (1 << (m * m)) * m);
            assert!(hits.values().all(|&c| c == 1));
        }
    }

    #[test]
    fn recover_parity_examples() {
        assert_eq!(recover_parity(&bv("0000"), &bv("1001")).unwrap(), bv("1001"));

        let input = bv("1101");
        let u_r = bv("0110");
        let v_r = unpar(&u_r);
        assert_eq!(v_r, bv("0101"));
        let w_r = par(&xor(&input, &v_r).unwrap());
        assert_eq!(w_r, bv("1111"));
        assert_eq!(recover_parity(&u_r, &w_r).unwrap(), bv("1001"));
        assert_eq!(recover_parity(&u_r, &w_r).unwrap(), par(&input));
        assert!(recover_parity(&bv("01"), &bv("011")).is_err());
    }

    #[test]
    fn recover_parity_exhaustive_m3() {
        for input in all_vectors(3) {
            for u_r in all_vectors(3) {
                let w_r = par(&xor(&input, &unpar(&u_r)).unwrap());
                assert_eq!(recover_parity(&u_r, &w_r).unwrap(), par(&input));
            }
        }
    }

    #[test]
    fn omniscient_solver_never_aborts() {
        let mut rng = TrialSeed::new(1, 0).rng();
        let cfg = ParityConfig::square(4, 0);
        for _ in 0..50 {
            let out = parity_decider(&bv("1101"), &cfg, &mut OmniscientParitySolver, &mut rng).unwrap();
            assert_eq!(out.kind, OutcomeKind::ParityDecision(true));
            assert_eq!(out.transcript.unwrap().queries_used, 0);
        }
    }

    #[test]
    fn querying_row_zero_aborts_half_the_time_at_m2() {
        let m = 2;
        let mut aborts = 0;
        let mut total = 0;
        for input in all_vectors(m) {
            for u in all_u_tuples(m) {
                for r in 0..m {
                    let mut solver = ScriptedParitySolver::new(vec![0]);
                    let out = decide_with(&input, &u, r, 1, &mut solver).unwrap();
                    total += 1;
                    match out.kind {
                        OutcomeKind::ParityAbort => aborts += 1,
                        OutcomeKind::ParityDecision(bit) => {
                            assert_eq!(bit, parity_bit(&input).unwrap())
                        }
                        other => panic!("unexpected {other:?}"),
                    }
                }
            }
        }
        assert_eq!(2 * aborts, total);
    }

    #[test]
    fn sound_solvers_decide_correctly_whenever_not_aborted() {
        let cfg = ParityConfig::square(12, 3);
        for trial in 0..200 {
            let seed = TrialSeed::new(5, trial);
            for solver in [
                &mut ScriptedParitySolver::first_rows(3, 12) as &mut dyn SolverStrategy<ParityInstance>,
                &mut AdaptiveParitySolver::new(3),
            ] {
                let (input, out) = run_one(&cfg, solver, seed).unwrap();
                match out.kind {
                    OutcomeKind::ParityDecision(bit) => assert_eq!(bit, parity_bit(&input).unwrap()),
                    OutcomeKind::ParityAbort => {}
                    other => panic!("unexpected {other:?}"),
                }
                assert!(out.transcript.unwrap().distinct_indices <= 3);
            }
        }
    }

    #[test]
    fn adaptive_solver_asks_distinct_rows() {
        let mut rng = TrialSeed::new(9, 9).rng();
        let u: Vec<BitVec> = (0..6).map(|_| BitVec::random(6, &mut rng)).collect();
        // teacher answers every row, so nothing aborts
        let instance = ParityInstance::new(blind(&BitVec::zeros(6), &u, 0).unwrap());
        let mut teacher = crate::protocol::FnTeacher::new(true, |inst: &ParityInstance, i| {
            TeacherReply::Answer(par(inst.matrix().row(i)))
        });
        let t = run_game(&instance, &mut AdaptiveParitySolver::new(6), &mut teacher, 6).unwrap();
        assert_eq!(t.distinct_indices, 6);
        assert_eq!(t.queries_used, 6);
        assert!(t.accepted().is_some());
    }

    #[test]
    fn config_warnings() {
        assert!(ParityConfig::square(30, 5).warnings().is_empty());
        assert_eq!(ParityConfig::square(2, 5).warnings().len(), 1);
        assert!((ParityConfig::square(30, 5).abort_line() - 1.0 / 6.0).abs() < 1e-12);
        assert!(ParityConfig::square(0, 0).validate().is_err());
    }

    #[test]
    fn instance_checker() {
        let inst = ParityInstance::new(BitMatrix::from_rows(vec![bv("1101"), bv("0000")]).unwrap());
        assert!(inst.accepts(&bv("1001"), 0));
        assert!(!inst.accepts(&bv("1101"), 0));
        assert!(!inst.accepts(&bv("100"), 0));
        assert_eq!(inst.has_preimage(1), Some(true));
    }
}
