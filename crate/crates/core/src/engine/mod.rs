//! Rule instances and transitions, plus the abstract (seeded-random and
//! exhaustive) and refined executors.

mod abstract_run;
mod refined;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::builtins::{is_builtin_term, BuiltinError};
use crate::state::{ConstraintId, GoalError, State, Token};
use crate::syntax::Program;
use crate::terms::{eval_ground, match_into, ArithError, Matching, Substitution, Term, Var};

pub use abstract_run::{run_abstract, run_exhaustive, ExhaustiveResult, Scheduling};
pub use refined::{resume_refined, run_refined};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("guard evaluation failed in rule {rule} on ids {ids:?}: {source}")]
    Guard { rule: String, ids: Vec<ConstraintId>, source: ArithError },
    #[error("body execution failed in rule {rule} on ids {ids:?}: {source}")]
    Body { rule: String, ids: Vec<ConstraintId>, source: BuiltinError },
    #[error(transparent)]
    Goal(#[from] GoalError),
    #[error("runtime error on a search branch: {0}")]
    Search(String),
}

/// A rule together with the store constraints its heads matched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleInstance {
    pub rule: usize,
    pub kept_ids: Vec<ConstraintId>,
    pub removed_ids: Vec<ConstraintId>,
    pub matching: Substitution,
}

impl RuleInstance {
    /// All matched ids in head order (kept first).
    pub fn ids(&self) -> Vec<ConstraintId> {
        self.kept_ids.iter().chain(&self.removed_ids).copied().collect()
    }

    pub fn token(&self) -> Token {
        Token { rule: self.rule, ids: self.ids() }
    }

    /// Identity of the instance irrespective of its matching.
    pub fn key(&self) -> (usize, Vec<ConstraintId>, Vec<ConstraintId>) {
        (self.rule, self.kept_ids.clone(), self.removed_ids.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    NormalForm,
    Failed,
    StepLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::NormalForm => "normal form",
            Status::Failed => "failed",
            Status::StepLimit => "step limit",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: String,
    pub removed: Vec<ConstraintId>,
    pub added: Vec<Term>,
    pub tells: Vec<Term>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn derivation_length(&self) -> usize {
        self.steps.len()
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, s) in self.steps.iter().enumerate() {
            writeln!(
                f,
                "STEP {}: {} removed=[{}] added=[{}] tells=[{}]",
                n + 1,
                s.rule,
                join(&s.removed),
                join(&s.added),
                join(&s.tells)
            )?;
        }
        Ok(())
    }
}

/// The result of a single run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub state: State,
    pub status: Status,
    pub steps: usize,
    pub trace: Option<Trace>,
}

/// What a transition did to the state.
#[derive(Clone, Debug, Default)]
pub struct Applied {
    pub removed: Vec<ConstraintId>,
    pub added: Vec<ConstraintId>,
    pub tells: Vec<Term>,
    /// Stored constraints whose terms changed because of a tell.
    pub woken: Vec<ConstraintId>,
}

impl Applied {
    pub(crate) fn trace_step(&self, state: &State, program: &Program, rule: usize) -> TraceStep {
        TraceStep {
            rule: program.rules[rule].label(),
            removed: self.removed.clone(),
            added: self.added.iter().filter_map(|id| state.get(*id).cloned()).collect(),
            tells: self.tells.clone(),
        }
    }
}

/// Every instance applicable in `state`, rule by rule in program order.
pub fn applicable_instances(state: &State, program: &Program) -> Result<Vec<RuleInstance>, EngineError> {
    let mut out = Vec::new();
    if state.is_failed() {
        return Ok(out);
    }
    for r in 0..program.rules.len() {
        out.extend(find_instances(state, program, r, None, false)?);
    }
    Ok(out)
}

/// Instances of rule `r`, optionally with head position `fixed.0` pinned to
/// constraint `fixed.1`.
pub(crate) fn find_instances(
    state: &State,
    program: &Program,
    r: usize,
    fixed: Option<(usize, ConstraintId)>,
    first_only: bool,
) -> Result<Vec<RuleInstance>, EngineError> {
    let rule = &program.rules[r];
    let heads: Vec<&Term> = rule.heads().collect();
    let mut search = Search { state, program, r, heads: &heads, fixed, first_only, out: Vec::new() };
    search.go(0, &Matching::new(), &mut Vec::new())?;
    Ok(search.out)
}

struct Search<'a> {
    state: &'a State,
    program: &'a Program,
    r: usize,
    heads: &'a [&'a Term],
    fixed: Option<(usize, ConstraintId)>,
    first_only: bool,
    out: Vec<RuleInstance>,
}

impl Search<'_> {
    /// Returns true when the search should stop.
    fn go(&mut self, pos: usize, m: &Matching, chosen: &mut Vec<ConstraintId>) -> Result<bool, EngineError> {
        if pos == self.heads.len() {
            if let Some(inst) = complete_instance(self.state, self.program, self.r, chosen, m)? {
                self.out.push(inst);
                return Ok(self.first_only);
            }
            return Ok(false);
        }
        let pattern = self.heads[pos];
        let candidates: Vec<ConstraintId> = match self.fixed {
            Some((p, id)) if p == pos => vec![id],
            _ => {
                let Some((name, arity)) = pattern.functor() else { return Ok(false) };
                self.state.ids_for(name, arity)
            }
        };
        for id in candidates {
            if chosen.contains(&id) {
                continue;
            }
            let Some(subject) = self.state.get(id) else { continue };
            let mut m2 = m.clone();
            if match_into(pattern, subject, &mut m2) {
                chosen.push(id);
                let stop = self.go(pos + 1, &m2, chosen)?;
                chosen.pop();
                if stop {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

/// Check the history ban and the guard for a full head matching.
fn complete_instance(
    state: &State,
    program: &Program,
    r: usize,
    ids: &[ConstraintId],
    m: &Matching,
) -> Result<Option<RuleInstance>, EngineError> {
    let rule = &program.rules[r];
    if rule.removed.is_empty() && state.has_token(&Token { rule: r, ids: ids.to_vec() }) {
        return Ok(None);
    }
    let sigma = Substitution::from_matching(m.clone());
    for g in rule.real_guard() {
        match state.builtin().ask(&sigma.apply(g)) {
            Ok(true) => {}
            Ok(false) => return Ok(None),
            Err(source) => return Err(EngineError::Guard { rule: rule.label(), ids: ids.to_vec(), source }),
        }
    }
    let k = rule.kept.len();
    Ok(Some(RuleInstance {
        rule: r,
        kept_ids: ids[..k].to_vec(),
        removed_ids: ids[k..].to_vec(),
        matching: sigma,
    }))
}

/// The instance of rule `r` whose heads match exactly `ids` (head order), if
/// it is applicable.
pub fn instance_for(
    state: &State,
    program: &Program,
    r: usize,
    ids: &[ConstraintId],
) -> Result<Option<RuleInstance>, EngineError> {
    let rule = &program.rules[r];
    if ids.len() != rule.head_count() || state.is_failed() {
        return Ok(None);
    }
    let distinct: BTreeSet<_> = ids.iter().collect();
    if distinct.len() != ids.len() {
        return Ok(None);
    }
    let mut m = Matching::new();
    for (h, id) in rule.heads().zip(ids) {
        match state.get(*id) {
            Some(t) if match_into(h, t, &mut m) => {}
            _ => return Ok(None),
        }
    }
    complete_instance(state, program, r, ids, &m)
}

/// Whether `inst` (by rule and ids) is applicable in `state`.
pub fn is_applicable(state: &State, program: &Program, inst: &RuleInstance) -> Result<bool, EngineError> {
    Ok(instance_for(state, program, inst.rule, &inst.ids())?.is_some())
}

/// Apply an instance, returning the successor state.
pub fn apply_instance(state: &State, program: &Program, inst: &RuleInstance) -> Result<State, EngineError> {
    let mut s = state.clone();
    apply_mut(&mut s, program, inst)?;
    Ok(s)
}

/// In-place transition: remove the removed heads, record the token, then
/// execute the body left to right.
pub(crate) fn apply_mut(state: &mut State, program: &Program, inst: &RuleInstance) -> Result<Applied, EngineError> {
    let mut applied = remove_heads(state, inst);
    run_body(state, program, inst, &mut applied)?;
    Ok(applied)
}

pub(crate) fn remove_heads(state: &mut State, inst: &RuleInstance) -> Applied {
    for id in &inst.removed_ids {
        state.remove(*id);
    }
    state.record(inst.token());
    Applied { removed: inst.removed_ids.clone(), ..Applied::default() }
}

pub(crate) fn run_body(
    state: &mut State,
    program: &Program,
    inst: &RuleInstance,
    applied: &mut Applied,
) -> Result<(), EngineError> {
    let rule = &program.rules[inst.rule];
    let err = |source: BuiltinError| EngineError::Body { rule: rule.label(), ids: inst.ids(), source };
    let mut bound: BTreeSet<Var> = rule.head_vars();
    rule.guard.iter().for_each(|g| g.collect_vars(&mut bound));
    let mut locals: BTreeMap<Var, Term> = BTreeMap::new();
    for b in &rule.body {
        for v in b.vars() {
            if !bound.contains(&v) && !locals.contains_key(&v) {
                let fresh = state.fresh_var(&v.name);
                locals.insert(v, Term::Var(fresh));
            }
        }
    }
    let sigma: Substitution =
        inst.matching.iter().map(|(v, t)| (v.clone(), t.clone())).chain(locals).collect();
    for b in &rule.body {
        if state.is_failed() {
            break;
        }
        let t = sigma.apply(b);
        if is_builtin_term(&t) {
            applied.tells.push(t.clone());
            let woken = state.tell(&t).map_err(err)?;
            applied.woken.extend(woken);
        } else {
            let n = eval_ground(&state.builtin().normalize(&t)).map_err(|e| err(e.into()))?;
            applied.added.push(state.insert(n));
        }
    }
    Ok(())
}

/// Apply an instance and produce its trace line.
pub(crate) fn step(
    state: &mut State,
    program: &Program,
    inst: &RuleInstance,
    trace: &mut Option<Trace>,
) -> Result<Applied, EngineError> {
    let applied = apply_mut(state, program, inst)?;
    if let Some(t) = trace {
        t.steps.push(applied.trace_step(state, program, inst.rule));
    }
    Ok(applied)
}
