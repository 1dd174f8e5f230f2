//! Parallel execution: rounds of simultaneously applied, non-conflicting
//! rule instances, simulated deterministically from a seed.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::engine::{applicable_instances, is_applicable, remove_heads, run_body, apply_instance, Applied, EngineError, RuleInstance, Status};
use crate::state::{state_equiv, ConstraintId, State};
use crate::syntax::Program;

/// Instances chosen for one round.
#[derive(Clone, Debug, Default)]
pub struct ParallelStep {
    pub instances: Vec<RuleInstance>,
    /// Pairwise conflict freedom, checked after selection.
    pub conflict_free: bool,
}

/// Two instances may fire together when neither removes a constraint the
/// other one touches. Sharing kept constraints is allowed.
///
/// Allowing an instance to keep what another removes would break
/// serializability: in `gcd(8), gcd(8)` each copy could remove the other.
pub fn compatible(a: &RuleInstance, b: &RuleInstance) -> bool {
    let ids_a: BTreeSet<ConstraintId> = a.ids().into_iter().collect();
    let ids_b: BTreeSet<ConstraintId> = b.ids().into_iter().collect();
    a.removed_ids.iter().all(|id| !ids_b.contains(id)) && b.removed_ids.iter().all(|id| !ids_a.contains(id))
}

pub fn pairwise_compatible(insts: &[RuleInstance]) -> bool {
    insts.iter().enumerate().all(|(i, a)| insts[i + 1..].iter().all(|b| compatible(a, b)))
}

fn select_with(
    state: &State,
    program: &Program,
    width: usize,
    rng: &mut impl Rng,
) -> Result<ParallelStep, EngineError> {
    let mut all = applicable_instances(state, program)?;
    all.shuffle(rng);
    let mut chosen: Vec<RuleInstance> = Vec::new();
    for inst in all {
        if chosen.len() == width {
            break;
        }
        if chosen.iter().all(|c| compatible(c, &inst)) {
            chosen.push(inst);
        }
    }
    let conflict_free = pairwise_compatible(&chosen);
    Ok(ParallelStep { instances: chosen, conflict_free })
}

/// Greedy seeded choice of up to `width` pairwise compatible instances.
pub fn select_parallel(state: &State, program: &Program, width: usize, seed: u64) -> Result<ParallelStep, EngineError> {
    select_with(state, program, width, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Apply a round against one pre-state: all removals first, then every
/// body in selection order.
pub fn apply_parallel(state: &State, program: &Program, round: &ParallelStep) -> Result<State, EngineError> {
    let mut s = state.clone();
    let mut applied: Vec<Applied> = round.instances.iter().map(|i| remove_heads(&mut s, i)).collect();
    for (inst, a) in round.instances.iter().zip(applied.iter_mut()) {
        if s.is_failed() {
            break;
        }
        run_body(&mut s, program, inst, a)?;
    }
    Ok(s)
}

/// Replay a round one instance at a time, checking each is still applicable,
/// and compare with the simultaneous result. A replay that fails early is a
/// complete derivation to the failed state.
pub fn serializes(pre: &State, program: &Program, round: &ParallelStep, post: &State) -> Result<bool, EngineError> {
    let mut s = pre.clone();
    for inst in &round.instances {
        if s.is_failed() {
            return Ok(post.is_failed());
        }
        if !is_applicable(&s, program, inst)? {
            return Ok(false);
        }
        s = apply_instance(&s, program, inst)?;
    }
    Ok(state_equiv(&s, post))
}

#[derive(Clone, Debug)]
pub struct ParallelResult {
    pub state: State,
    pub status: Status,
    pub rounds: usize,
    pub instances: usize,
    /// Every round replayed sequentially to an equivalent state.
    pub serializable: bool,
}

impl ParallelResult {
    pub fn stats_line(&self) -> String {
        format!("ROUNDS={} INSTANCES={}", self.rounds, self.instances)
    }
}

/// Run rounds until no instance applies. `config.step_limit` bounds the
/// number of rounds. With `verify`, every round is also replayed.
pub fn run_parallel(program: &Program, state: State, config: &Config, verify: bool) -> Result<ParallelResult, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = state;
    let (mut rounds, mut instances, mut serializable) = (0, 0, true);
    let status = loop {
        if state.is_failed() {
            break Status::Failed;
        }
        let round = select_with(&state, program, config.parallel_width, &mut rng)?;
        if round.instances.is_empty() {
            break Status::NormalForm;
        }
        if rounds >= config.step_limit {
            break Status::StepLimit;
        }
        let next = apply_parallel(&state, program, &round)?;
        if verify && !(round.conflict_free && serializes(&state, program, &round, &next)?) {
            serializable = false;
        }
        rounds += 1;
        instances += round.instances.len();
        state = next;
    };
    Ok(ParallelResult { state, status, rounds, instances, serializable })
}
