//! Abstract semantics: any applicable instance may fire.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{apply_instance, applicable_instances, step, EngineError, RunResult, Status, Trace};
use crate::config::Config;
use crate::state::{shape_key, state_equiv, state_equiv_with_history, State};
use crate::syntax::Program;

/// Fire a uniformly chosen applicable instance until none is left. The
/// choice sequence is fixed by `config.seed`.
pub fn run_abstract(program: &Program, state: State, config: &Config) -> Result<RunResult, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = state;
    let mut trace = config.trace.then(Trace::default);
    let mut steps = 0;
    loop {
        if state.is_failed() {
            return Ok(RunResult { state, status: Status::Failed, steps, trace });
        }
        let insts = applicable_instances(&state, program)?;
        if insts.is_empty() {
            return Ok(RunResult { state, status: Status::NormalForm, steps, trace });
        }
        if steps >= config.step_limit {
            return Ok(RunResult { state, status: Status::StepLimit, steps, trace });
        }
        let pick = &insts[rng.gen_range(0..insts.len())];
        step(&mut state, program, pick, &mut trace)?;
        steps += 1;
    }
}

/// All normal forms reachable from a state, up to state equivalence.
#[derive(Clone, Debug, Default)]
pub struct ExhaustiveResult {
    pub normal_forms: Vec<State>,
    /// False if the exploration bound was hit before the graph was exhausted.
    pub complete: bool,
    /// Runtime errors met on some branch, as messages.
    pub errors: Vec<String>,
    pub explored: usize,
}

impl ExhaustiveResult {
    pub fn contains_equiv(&self, s: &State) -> bool {
        self.normal_forms.iter().any(|n| state_equiv(n, s))
    }
}

/// Which successors the exhaustive search follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheduling {
    /// Every applicable instance.
    All,
    /// Every applicable simplification or simpagation instance if there is
    /// one, otherwise every propagation instance. Each explored path is
    /// still an abstract derivation, but unfair infinite ones (propagating
    /// forever while a duplicate waits to be removed) are cut off.
    #[default]
    RemovalFirst,
}

/// Breadth-first search over the transition graph. States are deduplicated
/// by equivalence including the live part of the propagation history, which
/// is what determines their futures. At most `bound` states are expanded.
pub fn run_exhaustive(program: &Program, start: State, bound: usize, scheduling: Scheduling) -> ExhaustiveResult {
    let mut result = ExhaustiveResult { complete: true, ..Default::default() };
    let mut seen: HashMap<String, Vec<State>> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.entry(shape_key(&start)).or_default().push(start.clone());
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        if result.explored >= bound {
            result.complete = false;
            break;
        }
        result.explored += 1;
        let insts = match applicable_instances(&s, program) {
            Ok(i) if scheduling == Scheduling::RemovalFirst && i.iter().any(|x| !x.removed_ids.is_empty()) => {
                i.into_iter().filter(|x| !x.removed_ids.is_empty()).collect()
            }
            Ok(i) => i,
            Err(e) => {
                result.errors.push(e.to_string());
                continue;
            }
        };
        if insts.is_empty() {
            if !result.contains_equiv(&s) {
                result.normal_forms.push(s);
            }
            continue;
        }
        for inst in &insts {
            let next = match apply_instance(&s, program, inst) {
                Ok(n) => n,
                Err(e) => {
                    if !result.errors.contains(&e.to_string()) {
                        result.errors.push(e.to_string());
                    }
                    continue;
                }
            };
            let bucket = seen.entry(shape_key(&next)).or_default();
            if bucket.iter().any(|b| state_equiv_with_history(b, &next)) {
                continue;
            }
            bucket.push(next.clone());
            queue.push_back(next);
        }
    }
    result
}
