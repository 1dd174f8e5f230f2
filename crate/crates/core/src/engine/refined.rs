//! Deterministic execution with an activation stack.
//!
//! Goal constraints are activated one at a time in goal order. An active
//! constraint tries its occurrences in textual rule order, head positions
//! left to right (kept before removed). When a rule fires, the body runs to
//! completion; then the new body constraints are activated in body order,
//! followed by the stored constraints a tell has touched. If the active
//! constraint survives, it retries the same occurrence.

use std::collections::BTreeMap;

use super::{find_instances, step, EngineError, RunResult, Status, Trace};
use crate::builtins::is_builtin_term;
use crate::config::Config;
use crate::state::{ConstraintId, State};
use crate::syntax::Program;
use crate::terms::{eval_ground, Term};

struct Frame {
    id: ConstraintId,
    occ: usize,
}

struct Machine<'p> {
    program: &'p Program,
    /// Occurrences `(rule, head position)` per constraint symbol.
    occurrences: BTreeMap<(String, usize), Vec<(usize, usize)>>,
    stack: Vec<Frame>,
    steps: usize,
    limit: usize,
    trace: Option<Trace>,
}

impl<'p> Machine<'p> {
    fn new(program: &'p Program, config: &Config) -> Self {
        let mut occurrences: BTreeMap<(String, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (r, rule) in program.rules.iter().enumerate() {
            for (pos, h) in rule.heads().enumerate() {
                if let Some((name, arity)) = h.functor() {
                    occurrences.entry((name.to_string(), arity)).or_default().push((r, pos));
                }
            }
        }
        Machine {
            program,
            occurrences,
            stack: Vec::new(),
            steps: 0,
            limit: config.step_limit,
            trace: config.trace.then(Trace::default),
        }
    }

    fn push_all(&mut self, ids: impl DoubleEndedIterator<Item = ConstraintId>) {
        // Push in reverse so that the first id is on top.
        for id in ids.rev() {
            self.stack.push(Frame { id, occ: 0 });
        }
    }

    /// Run until the stack is empty. Returns false if the step limit hit.
    fn drain(&mut self, state: &mut State) -> Result<bool, EngineError> {
        while let Some(frame) = self.stack.last_mut() {
            if state.is_failed() {
                self.stack.clear();
                break;
            }
            let id = frame.id;
            let Some(term) = state.get(id) else {
                self.stack.pop();
                continue;
            };
            let key = term.functor().map(|(n, a)| (n.to_string(), a)).unwrap_or_default();
            let occs = self.occurrences.get(&key).map(Vec::as_slice).unwrap_or(&[]);
            let Some(&(r, pos)) = occs.get(frame.occ) else {
                self.stack.pop();
                continue;
            };
            let found = find_instances(state, self.program, r, Some((pos, id)), true)?;
            let Some(inst) = found.into_iter().next() else {
                frame.occ += 1;
                continue;
            };
            if self.steps >= self.limit {
                return Ok(false);
            }
            let applied = step(state, self.program, &inst, &mut self.trace)?;
            self.steps += 1;
            self.push_all(applied.woken.into_iter());
            self.push_all(applied.added.into_iter());
        }
        Ok(true)
    }

    fn finish(self, state: State, completed: bool) -> RunResult {
        let status = if state.is_failed() {
            Status::Failed
        } else if completed {
            Status::NormalForm
        } else {
            Status::StepLimit
        };
        RunResult { state, status, steps: self.steps, trace: self.trace }
    }
}

/// Run a goal under the refined discipline.
pub fn run_refined(program: &Program, goal: &[Term], config: &Config) -> Result<RunResult, EngineError> {
    let mut m = Machine::new(program, config);
    let mut state = State::new();
    for (k, item) in goal.iter().enumerate() {
        if state.is_failed() {
            break;
        }
        state.declare_goal_vars(item);
        if is_builtin_term(item) {
            let woken = state.tell(item).map_err(crate::state::GoalError::from)?;
            m.push_all(woken.into_iter());
        } else {
            // Reuse goal validation for the single item.
            let normalized = state.builtin().normalize(item);
            if normalized.functor().is_none() {
                return Err(crate::state::GoalError::NotAConstraint(item.to_string()).into());
            }
            let t = eval_ground(&normalized)
                .map_err(|e| crate::state::GoalError::from(crate::builtins::BuiltinError::from(e)))?;
            let id = state.insert(t);
            m.push_all(std::iter::once(id));
        }
        if !m.drain(&mut state)? {
            // Keep the rest of the goal in the state so that a resumed run
            // sees everything.
            state.add_goal_mut(&goal[k + 1..])?;
            return Ok(m.finish(state, false));
        }
    }
    Ok(m.finish(state, true))
}

/// Continue from an intermediate state. Live constraints are introduced
/// again one at a time in id order, keeping their ids, and each is activated
/// before the next one becomes visible, as for a goal.
pub fn resume_refined(program: &Program, state: State, config: &Config) -> Result<RunResult, EngineError> {
    let mut m = Machine::new(program, config);
    let mut state = state;
    let mut pending = state.take_user().into_iter();
    while let Some((id, t)) = pending.next() {
        state.reinsert(id, t);
        m.push_all(std::iter::once(id));
        if !m.drain(&mut state)? {
            for (id, t) in pending {
                state.reinsert(id, t);
            }
            return Ok(m.finish(state, false));
        }
    }
    Ok(m.finish(state, true))
}
