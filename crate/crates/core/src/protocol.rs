//! The budgeted preimage game between a solver and a teacher.
//!
//! Each turn the solver may propose a final output and may name the next
//! index it wants a preimage for. The harness verifies every proposal before
//! accepting it, charges one unit of budget per query, verifies answers from
//! teachers that claim to be honest, and records everything in a
//! [`Transcript`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("harness invariant violated: {0}")]
    HarnessInvariantViolation(String),
    #[error("malformed transcript: {0}")]
    Malformed(String),
}

/// Public side of a preimage game: `len()` targets and a checker deciding
/// whether a candidate is a preimage of target `index`.
pub trait PreimageInstance {
    type Value: Clone + PartialEq + fmt::Debug + fmt::Display;

    fn len(&self) -> usize;

    fn accepts(&self, candidate: &Self::Value, index: usize) -> bool;

    /// Whether two candidates share an image under the instance's map, when
    /// the instance has a notion of one. `None` leaves collision claims
    /// unverified.
    fn same_image(&self, _a: &Self::Value, _b: &Self::Value) -> Option<bool> {
        None
    }

    /// Whether target `index` has any preimage. Only tiny instances that can
    /// be searched exhaustively answer `Some`.
    fn has_preimage(&self, _index: usize) -> Option<bool> {
        None
    }
}

/// A checker built from a closure, for ad hoc games.
pub struct FnInstance<V, F> {
    len: usize,
    checker: F,
    _value: std::marker::PhantomData<fn() -> V>,
}

impl<V, F> FnInstance<V, F>
where
    F: Fn(&V, usize) -> bool,
{
    pub fn new(len: usize, checker: F) -> Self {
        Self {
            len,
            checker,
            _value: std::marker::PhantomData,
        }
    }
}

impl<V, F> PreimageInstance for FnInstance<V, F>
where
    V: Clone + PartialEq + fmt::Debug + fmt::Display,
    F: Fn(&V, usize) -> bool,
{
    type Value = V;

    fn len(&self) -> usize {
        self.len
    }

    fn accepts(&self, candidate: &V, index: usize) -> bool {
        (self.checker)(candidate, index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SolverOutput<V> {
    Witnesses(Vec<V>),
    Collision(V, V),
    NoPreimageClaim(usize),
}

/// What a solver does on one turn. A proposal is checked first; the query is
/// only issued when there is no proposal or the proposal fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn<V> {
    pub proposal: Option<SolverOutput<V>>,
    pub query: Option<usize>,
}

impl<V> Turn<V> {
    pub fn propose(output: SolverOutput<V>) -> Self {
        Self {
            proposal: Some(output),
            query: None,
        }
    }

    pub fn query(index: usize) -> Self {
        Self {
            proposal: None,
            query: Some(index),
        }
    }

    pub fn propose_or_query(output: SolverOutput<V>, index: usize) -> Self {
        Self {
            proposal: Some(output),
            query: Some(index),
        }
    }
}

/// An answered query, as seen by the solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answered<V> {
    pub index: usize,
    pub value: V,
}

pub trait SolverStrategy<I: PreimageInstance> {
    /// Deterministic solvers are pure functions of the public instance and
    /// the answer history; only they can be replayed.
    fn is_deterministic(&self) -> bool;

    fn turn(&mut self, instance: &I, answers: &[Answered<I::Value>]) -> Turn<I::Value>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TeacherReply<V> {
    Answer(V),
    Abort,
}

pub trait TeacherStrategy<I: PreimageInstance> {
    /// Answers from an honest teacher must pass the instance checker; the
    /// harness verifies this on every round.
    fn is_honest(&self) -> bool;

    fn answer(&mut self, instance: &I, index: usize) -> TeacherReply<I::Value>;
}

/// A solver driven by a closure over `(instance, answers)`.
pub struct FnSolver<F> {
    deterministic: bool,
    f: F,
}

impl<F> FnSolver<F> {
    pub fn new(deterministic: bool, f: F) -> Self {
        Self { deterministic, f }
    }
}

impl<I, F> SolverStrategy<I> for FnSolver<F>
where
    I: PreimageInstance,
    F: FnMut(&I, &[Answered<I::Value>]) -> Turn<I::Value>,
{
    fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    fn turn(&mut self, instance: &I, answers: &[Answered<I::Value>]) -> Turn<I::Value> {
        (self.f)(instance, answers)
    }
}

/// A teacher driven by a closure over `(instance, index)`.
pub struct FnTeacher<F> {
    honest: bool,
    f: F,
}

impl<F> FnTeacher<F> {
    pub fn new(honest: bool, f: F) -> Self {
        Self { honest, f }
    }
}

impl<I, F> TeacherStrategy<I> for FnTeacher<F>
where
    I: PreimageInstance,
    F: FnMut(&I, usize) -> TeacherReply<I::Value>,
{
    fn is_honest(&self) -> bool {
        self.honest
    }

    fn answer(&mut self, instance: &I, index: usize) -> TeacherReply<I::Value> {
        (self.f)(instance, index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round<V> {
    pub index: usize,
    pub answer: TeacherReply<V>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FinalOutcome<V> {
    /// The proposal passed verification.
    Accepted(SolverOutput<V>),
    /// A claim the harness cannot check on this instance.
    Unverified(SolverOutput<V>),
    Aborted,
    /// The solver asked for a query with no budget left.
    BudgetExceeded,
    /// The solver's proposal failed and it asked for nothing further.
    GaveUp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript<V> {
    pub budget: usize,
    pub rounds: Vec<Round<V>>,
    pub final_outcome: FinalOutcome<V>,
    pub queries_used: usize,
    pub distinct_indices: usize,
}

impl<V> Transcript<V> {
    pub fn queried_indices(&self) -> BTreeSet<usize> {
        self.rounds.iter().map(|r| r.index).collect()
    }

    pub fn accepted(&self) -> Option<&SolverOutput<V>> {
        match &self.final_outcome {
            FinalOutcome::Accepted(out) => Some(out),
            _ => None,
        }
    }

    pub fn answers(&self) -> Vec<Answered<V>>
    where
        V: Clone,
    {
        self.rounds
            .iter()
            .filter_map(|r| match &r.answer {
                TeacherReply::Answer(v) => Some(Answered {
                    index: r.index,
                    value: v.clone(),
                }),
                TeacherReply::Abort => None,
            })
            .collect()
    }
}

pub fn verify_witness<I: PreimageInstance>(
    instance: &I,
    witnesses: &[I::Value],
) -> Result<bool, ProtocolError> {
    if witnesses.len() != instance.len() {
        return Err(ProtocolError::Domain(format!(
            "witness sequence has length {}, instance has {} targets",
            witnesses.len(),
            instance.len()
        )));
    }
    Ok(witnesses
        .iter()
        .enumerate()
        .all(|(j, w)| instance.accepts(w, j)))
}

enum Verdict {
    Accept,
    Unverifiable,
    Reject,
}

fn judge<I: PreimageInstance>(
    instance: &I,
    output: &SolverOutput<I::Value>,
) -> Result<Verdict, ProtocolError> {
    let verdict = match output {
        SolverOutput::Witnesses(w) => {
            if verify_witness(instance, w).map_err(|e| {
                ProtocolError::ProtocolViolation(format!("malformed proposal: {e}"))
            })? {
                Verdict::Accept
            } else {
                Verdict::Reject
            }
        }
        SolverOutput::Collision(a, b) => {
            if a == b {
                Verdict::Reject
            } else {
                match instance.same_image(a, b) {
                    Some(true) => Verdict::Accept,
                    Some(false) => Verdict::Reject,
                    None => Verdict::Unverifiable,
                }
            }
        }
        SolverOutput::NoPreimageClaim(i) => {
            if *i >= instance.len() {
                return Err(ProtocolError::ProtocolViolation(format!(
                    "claim about index {i} outside 0..{}",
                    instance.len()
                )));
            }
            match instance.has_preimage(*i) {
                Some(false) => Verdict::Accept,
                Some(true) => Verdict::Reject,
                None => Verdict::Unverifiable,
            }
        }
    };
    Ok(verdict)
}

/// Plays one game with at most `budget` queries.
pub fn run_game<I, S, T>(
    instance: &I,
    solver: &mut S,
    teacher: &mut T,
    budget: usize,
) -> Result<Transcript<I::Value>, ProtocolError>
where
    I: PreimageInstance,
    S: SolverStrategy<I> + ?Sized,
    T: TeacherStrategy<I> + ?Sized,
{
    let m = instance.len();
    let mut rounds: Vec<Round<I::Value>> = Vec::new();
    let mut answers: Vec<Answered<I::Value>> = Vec::new();
    let mut seen = BTreeSet::new();

    let final_outcome = loop {
        let turn = solver.turn(instance, &answers);
        if let Some(output) = turn.proposal {
            match judge(instance, &output)? {
                Verdict::Accept => break FinalOutcome::Accepted(output),
                Verdict::Unverifiable => break FinalOutcome::Unverified(output),
                Verdict::Reject => {}
            }
        }
        let Some(index) = turn.query else {
            break FinalOutcome::GaveUp;
        };
        if index >= m {
            return Err(ProtocolError::ProtocolViolation(format!(
                "query index {index} outside 0..{m}"
            )));
        }
        if rounds.len() >= budget {
            break FinalOutcome::BudgetExceeded;
        }
        seen.insert(index);
        let reply = teacher.answer(instance, index);
        if let TeacherReply::Answer(value) = &reply {
            if teacher.is_honest() && !instance.accepts(value, index) {
                return Err(ProtocolError::HarnessInvariantViolation(format!(
                    "honest teacher answered index {index} with {value}, which the checker rejects"
                )));
            }
            answers.push(Answered {
                index,
                value: value.clone(),
            });
        }
        let aborted = reply == TeacherReply::Abort;
        rounds.push(Round {
            index,
            answer: reply,
        });
        if aborted {
            break FinalOutcome::Aborted;
        }
    };

    Ok(Transcript {
        budget,
        queries_used: rounds.len(),
        distinct_indices: seen.len(),
        rounds,
        final_outcome,
    })
}

/// Serves the recorded answers of a transcript back in order.
struct ReplayTeacher<'a, V> {
    rounds: &'a [Round<V>],
    cursor: usize,
    diverged: bool,
}

impl<I: PreimageInstance> TeacherStrategy<I> for ReplayTeacher<'_, I::Value> {
    fn is_honest(&self) -> bool {
        false
    }

    fn answer(&mut self, _instance: &I, index: usize) -> TeacherReply<I::Value> {
        match self.rounds.get(self.cursor) {
            Some(round) if round.index == index => {
                self.cursor += 1;
                round.answer.clone()
            }
            _ => {
                self.diverged = true;
                TeacherReply::Abort
            }
        }
    }
}

/// Re-runs a deterministic solver against the answers recorded in
/// `transcript` and reports whether it reproduces the same queries and the
/// same final outcome.
pub fn replay<I, S>(
    transcript: &Transcript<I::Value>,
    solver: &mut S,
    instance: &I,
) -> Result<bool, ProtocolError>
where
    I: PreimageInstance,
    S: SolverStrategy<I> + ?Sized,
{
    if !solver.is_deterministic() {
        return Err(ProtocolError::Domain(
            "only deterministic solvers can be replayed".into(),
        ));
    }
    let mut teacher = ReplayTeacher {
        rounds: &transcript.rounds,
        cursor: 0,
        diverged: false,
    };
    let rerun = match run_game(instance, solver, &mut teacher, transcript.budget) {
        Ok(t) => t,
        Err(ProtocolError::ProtocolViolation(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    Ok(!teacher.diverged && &rerun == transcript)
}

// JSON form. Values are written through `Display` and read back through
// `FromStr`, so big integers appear as decimal strings and bit vectors as
// 0/1 strings.

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputDoc {
    Witnesses(Vec<String>),
    Collision(String, String),
    NoPreimageClaim(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FinalDoc {
    Accepted { output: OutputDoc },
    Unverified { output: OutputDoc },
    Aborted,
    BudgetExceeded,
    GaveUp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundDoc {
    pub index: usize,
    /// The answer, or the literal string `"abort"`.
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptDoc {
    pub budget: usize,
    pub rounds: Vec<RoundDoc>,
    #[serde(rename = "final")]
    pub final_outcome: FinalDoc,
    pub queries_used: usize,
    pub distinct_indices: usize,
}

pub const ABORT_TOKEN: &str = "abort";

fn output_doc<V: fmt::Display>(out: &SolverOutput<V>) -> OutputDoc {
    match out {
        SolverOutput::Witnesses(w) => OutputDoc::Witnesses(w.iter().map(|v| v.to_string()).collect()),
        SolverOutput::Collision(a, b) => OutputDoc::Collision(a.to_string(), b.to_string()),
        SolverOutput::NoPreimageClaim(i) => OutputDoc::NoPreimageClaim(*i),
    }
}

fn parse_value<V: FromStr>(s: &str) -> Result<V, ProtocolError> {
    s.parse()
        .map_err(|_| ProtocolError::Malformed(format!("cannot parse value {s:?}")))
}

fn output_from_doc<V: FromStr>(doc: &OutputDoc) -> Result<SolverOutput<V>, ProtocolError> {
    Ok(match doc {
        OutputDoc::Witnesses(w) => {
            SolverOutput::Witnesses(w.iter().map(|s| parse_value(s)).collect::<Result<_, _>>()?)
        }
        OutputDoc::Collision(a, b) => SolverOutput::Collision(parse_value(a)?, parse_value(b)?),
        OutputDoc::NoPreimageClaim(i) => SolverOutput::NoPreimageClaim(*i),
    })
}

impl<V: fmt::Display> Transcript<V> {
    pub fn to_doc(&self) -> TranscriptDoc {
        TranscriptDoc {
            budget: self.budget,
            rounds: self
                .rounds
                .iter()
                .map(|r| RoundDoc {
                    index: r.index,
                    answer: match &r.answer {
                        TeacherReply::Answer(v) => v.to_string(),
                        TeacherReply::Abort => ABORT_TOKEN.to_string(),
                    },
                })
                .collect(),
            final_outcome: match &self.final_outcome {
                FinalOutcome::Accepted(o) => FinalDoc::Accepted { output: output_doc(o) },
                FinalOutcome::Unverified(o) => FinalDoc::Unverified { output: output_doc(o) },
                FinalOutcome::Aborted => FinalDoc::Aborted,
                FinalOutcome::BudgetExceeded => FinalDoc::BudgetExceeded,
                FinalOutcome::GaveUp => FinalDoc::GaveUp,
            },
            queries_used: self.queries_used,
            distinct_indices: self.distinct_indices,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_doc()).expect("transcript documents always serialize")
    }
}

impl<V: FromStr> Transcript<V> {
    pub fn from_doc(doc: &TranscriptDoc) -> Result<Self, ProtocolError> {
        let rounds = doc
            .rounds
            .iter()
            .map(|r| {
                let answer = if r.answer == ABORT_TOKEN {
                    TeacherReply::Abort
                } else {
                    TeacherReply::Answer(parse_value(&r.answer)?)
                };
                Ok(Round {
                    index: r.index,
                    answer,
                })
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        if doc.queries_used != rounds.len() || doc.queries_used > doc.budget {
            return Err(ProtocolError::Malformed(format!(
                "queries_used {} inconsistent with {} rounds and budget {}",
                doc.queries_used,
                rounds.len(),
                doc.budget
            )));
        }
        let final_outcome = match &doc.final_outcome {
            FinalDoc::Accepted { output } => FinalOutcome::Accepted(output_from_doc(output)?),
            FinalDoc::Unverified { output } => FinalOutcome::Unverified(output_from_doc(output)?),
            FinalDoc::Aborted => FinalOutcome::Aborted,
            FinalDoc::BudgetExceeded => FinalOutcome::BudgetExceeded,
            FinalDoc::GaveUp => FinalOutcome::GaveUp,
        };
        Ok(Self {
            budget: doc.budget,
            rounds,
            final_outcome,
            queries_used: doc.queries_used,
            distinct_indices: doc.distinct_indices,
        })
    }
}

impl<V: fmt::Display> Serialize for Transcript<V> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de, V: FromStr> Deserialize<'de> for Transcript<V> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = TranscriptDoc::deserialize(d)?;
        Self::from_doc(&doc).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Squares = FnInstance<u64, Box<dyn Fn(&u64, usize) -> bool>>;

    /// Squaring mod 21 with the given targets.
    fn squares_mod_21(targets: Vec<u64>) -> Squares {
        let len = targets.len();
        FnInstance::new(
            len,
            Box::new(move |x: &u64, i: usize| *x < 21 && x * x % 21 == targets[i]),
        )
    }

    fn echo_teacher(values: Vec<u64>) -> impl TeacherStrategy<Squares> {
        FnTeacher::new(true, move |_: &Squares, i: usize| TeacherReply::Answer(values[i]))
    }

    #[test]
    fn verify_witness_examples() {
        let inst = squares_mod_21(vec![4, 4]);
        assert!(verify_witness(&inst, &[2, 19]).unwrap());
        assert!(!verify_witness(&inst, &[3, 2]).unwrap());
        assert!(matches!(verify_witness(&inst, &[2]), Err(ProtocolError::Domain(_))));

        let identity = FnInstance::new(1, |x: &u64, _| *x == 42);
        assert!(verify_witness(&identity, &[42]).unwrap());
    }

    #[test]
    fn omniscient_solver_needs_no_queries() {
        let inst = squares_mod_21(vec![4, 4]);
        let mut solver = FnSolver::new(true, |_: &Squares, _: &[Answered<u64>]| {
            Turn::propose(SolverOutput::Witnesses(vec![2, 19]))
        });
        let t = run_game(&inst, &mut solver, &mut echo_teacher(vec![2, 5]), 0).unwrap();
        assert_eq!(t.queries_used, 0);
        assert_eq!(t.final_outcome, FinalOutcome::Accepted(SolverOutput::Witnesses(vec![2, 19])));
    }

    fn scripted_solver() -> FnSolver<impl FnMut(&Squares, &[Answered<u64>]) -> Turn<u64>> {
        // asks for index 0, then answers 0 with the reply and 1 with a root of 4
        FnSolver::new(true, |_: &Squares, answers: &[Answered<u64>]| match answers.first() {
            None => Turn::query(0),
            Some(a) => Turn::propose(SolverOutput::Witnesses(vec![a.value, 2])),
        })
    }

    #[test]
    fn scripted_solver_with_one_query() {
        let inst = squares_mod_21(vec![16, 4]);
        let t = run_game(&inst, &mut scripted_solver(), &mut echo_teacher(vec![4, 2]), 1).unwrap();
        assert_eq!(t.rounds, vec![Round { index: 0, answer: TeacherReply::Answer(4) }]);
        assert_eq!(t.final_outcome, FinalOutcome::Accepted(SolverOutput::Witnesses(vec![4, 2])));
        assert_eq!((t.queries_used, t.distinct_indices), (1, 1));

        let t = run_game(&inst, &mut scripted_solver(), &mut echo_teacher(vec![4, 2]), 0).unwrap();
        assert_eq!(t.final_outcome, FinalOutcome::BudgetExceeded);
        assert_eq!(t.queries_used, 0);
    }

    #[test]
    fn repeated_queries_consume_budget() {
        let inst = squares_mod_21(vec![4, 4, 4]);
        let mut solver = FnSolver::new(true, |_: &Squares, _: &[Answered<u64>]| Turn::query(1));
        let t = run_game(&inst, &mut solver, &mut echo_teacher(vec![2, 2, 2]), 3).unwrap();
        assert_eq!(t.final_outcome, FinalOutcome::BudgetExceeded);
        assert_eq!((t.queries_used, t.distinct_indices), (3, 1));
    }

    #[test]
    fn out_of_range_query_is_a_violation() {
        let inst = squares_mod_21(vec![4]);
        let mut solver = FnSolver::new(true, |_: &Squares, _: &[Answered<u64>]| Turn::query(1));
        let err = run_game(&inst, &mut solver, &mut echo_teacher(vec![2]), 5).unwrap_err();
        assert!(matches!(err, ProtocolError::ProtocolViolation(_)));
    }

    #[test]
    fn dishonest_honest_teacher_is_caught() {
        let inst = squares_mod_21(vec![4, 4]);
        let err = run_game(&inst, &mut scripted_solver(), &mut echo_teacher(vec![3, 3]), 1)
            .unwrap_err();
        assert!(matches!(err, ProtocolError::HarnessInvariantViolation(_)));

        // the same wrong answer from a teacher not claiming honesty is recorded
        let mut liar = FnTeacher::new(false, |_: &Squares, _| TeacherReply::Answer(3u64));
        let t = run_game(&inst, &mut scripted_solver(), &mut liar, 1).unwrap();
        assert_eq!(t.final_outcome, FinalOutcome::GaveUp);
    }

    #[test]
    fn abort_finalizes_immediately() {
        let inst = squares_mod_21(vec![4, 4]);
        let mut teacher = FnTeacher::new(true, |_: &Squares, _| TeacherReply::Abort);
        let t = run_game(&inst, &mut scripted_solver(), &mut teacher, 5).unwrap();
        assert_eq!(t.final_outcome, FinalOutcome::Aborted);
        assert_eq!(t.rounds, vec![Round { index: 0, answer: TeacherReply::Abort }]);
    }

    #[test]
    fn failed_proposal_forces_a_query() {
        let inst = squares_mod_21(vec![4, 4]);
        let mut solver = FnSolver::new(true, |_: &Squares, answers: &[Answered<u64>]| {
            match answers.len() {
                0 => Turn::propose_or_query(SolverOutput::Witnesses(vec![3, 3]), 1),
                _ => Turn::propose(SolverOutput::Witnesses(vec![2, answers[0].value])),
            }
        });
        let t = run_game(&inst, &mut solver, &mut echo_teacher(vec![5, 5]), 1).unwrap();
        assert_eq!(t.queries_used, 1);
        assert_eq!(t.accepted(), Some(&SolverOutput::Witnesses(vec![2, 5])));
    }

    #[test]
    fn claims_without_a_decision_procedure_are_unverified() {
        let inst = squares_mod_21(vec![4, 4]);
        let mut solver = FnSolver::new(true, |_: &Squares, _: &[Answered<u64>]| {
            Turn::propose(SolverOutput::Collision(2, 5))
        });
        let t = run_game(&inst, &mut solver, &mut echo_teacher(vec![2, 2]), 0).unwrap();
        assert_eq!(t.final_outcome, FinalOutcome::Unverified(SolverOutput::Collision(2, 5)));

        let mut solver = FnSolver::new(true, |_: &Squares, _: &[Answered<u64>]| {
            Turn::propose(SolverOutput::Collision(2, 2))
        });
        let t = run_game(&inst, &mut solver, &mut echo_teacher(vec![2, 2]), 0).unwrap();
        assert_eq!(t.final_outcome, FinalOutcome::GaveUp);
    }

    #[test]
    fn replay_reproduces_and_detects_perturbation() {
        let inst = squares_mod_21(vec![16, 4]);
        let t = run_game(&inst, &mut scripted_solver(), &mut echo_teacher(vec![4, 2]), 1).unwrap();
        assert!(replay(&t, &mut scripted_solver(), &inst).unwrap());

        let mut perturbed = t.clone();
        perturbed.rounds[0].answer = TeacherReply::Answer(17);
        assert!(!replay(&perturbed, &mut scripted_solver(), &inst).unwrap());

        let mut reindexed = t.clone();
        reindexed.rounds[0].index = 1;
        assert!(!replay(&reindexed, &mut scripted_solver(), &inst).unwrap());

        let mut omniscient = FnSolver::new(true, |_: &Squares, _: &[Answered<u64>]| {
            Turn::propose(SolverOutput::Witnesses(vec![4, 2]))
        });
        let t = run_game(&inst, &mut omniscient, &mut echo_teacher(vec![4, 2]), 0).unwrap();
        assert!(t.rounds.is_empty());
        assert!(replay(&t, &mut omniscient, &inst).unwrap());

        let mut random = FnSolver::new(false, |_: &Squares, _: &[Answered<u64>]| Turn::query(0));
        assert!(matches!(replay(&t, &mut random, &inst), Err(ProtocolError::Domain(_))));
    }

    #[test]
    fn json_shape() {
        let inst = squares_mod_21(vec![16, 4]);
        let t = run_game(&inst, &mut scripted_solver(), &mut echo_teacher(vec![4, 2]), 1).unwrap();
        let json = t.to_json();
        assert_eq!(
            json,
            serde_json::json!({
                "budget": 1,
                "rounds": [{"index": 0, "answer": "4"}],
                "final": {"status": "accepted", "output": {"witnesses": ["4", "2"]}},
                "queries_used": 1,
                "distinct_indices": 1
            })
        );
        let back: Transcript<u64> = serde_json::from_value(json).unwrap();
        assert_eq!(back, t);

        let mut teacher = FnTeacher::new(true, |_: &Squares, _| TeacherReply::Abort);
        let t = run_game(&inst, &mut scripted_solver(), &mut teacher, 1).unwrap();
        assert_eq!(t.to_json()["rounds"][0]["answer"], "abort");
        assert_eq!(t.to_json()["final"]["status"], "aborted");
    }

    #[test]
    fn inconsistent_documents_are_rejected() {
        let doc = TranscriptDoc {
            budget: 0,
            rounds: vec![RoundDoc { index: 0, answer: "1".into() }],
            final_outcome: FinalDoc::Aborted,
            queries_used: 1,
            distinct_indices: 1,
        };
        assert!(matches!(Transcript::<u64>::from_doc(&doc), Err(ProtocolError::Malformed(_))));
    }
}
