//! Execution strategies behind a common trait, registered by name.

use std::collections::BTreeMap;

use crate::config::Config;
use crate::engine::{
    resume_refined, run_abstract, run_exhaustive, run_refined, EngineError, RunResult, Scheduling, Status, Trace,
};
use crate::parallel::run_parallel;
use crate::state::State;
use crate::syntax::Program;
use crate::terms::Term;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub state: State,
    pub status: Status,
}

/// What a strategy produced. Exhaustive search may yield several outcomes.
#[derive(Clone, Debug)]
pub struct Execution {
    pub outcomes: Vec<Outcome>,
    pub steps: usize,
    /// False when a search bound cut the exploration short.
    pub complete: bool,
    pub trace: Option<Trace>,
    /// Strategy-specific statistics, printed after the answer.
    pub stats: Option<String>,
}

impl Execution {
    fn single(r: RunResult) -> Self {
        let complete = r.status != Status::StepLimit;
        Execution {
            outcomes: vec![Outcome { state: r.state, status: r.status }],
            steps: r.steps,
            complete,
            trace: r.trace,
            stats: None,
        }
    }

    /// The first outcome; every strategy yields at least one unless the
    /// exhaustive search ran out of bound before reaching a normal form.
    pub fn first(&self) -> Option<&Outcome> {
        self.outcomes.first()
    }
}

pub trait Strategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;

    /// Execute a goal from scratch.
    fn run(&self, program: &Program, goal: &[Term], config: &Config) -> Result<Execution, EngineError> {
        self.resume(program, State::initial(goal)?, config)
    }

    /// Continue from an intermediate state.
    fn resume(&self, program: &Program, state: State, config: &Config) -> Result<Execution, EngineError>;
}

pub struct Refined;

impl Strategy for Refined {
    fn name(&self) -> &'static str {
        "refined"
    }
    fn describe(&self) -> &'static str {
        "deterministic: goal order activation, textual rule order"
    }
    fn run(&self, program: &Program, goal: &[Term], config: &Config) -> Result<Execution, EngineError> {
        run_refined(program, goal, config).map(Execution::single)
    }
    fn resume(&self, program: &Program, state: State, config: &Config) -> Result<Execution, EngineError> {
        resume_refined(program, state, config).map(Execution::single)
    }
}

pub struct AbstractRandom;

impl Strategy for AbstractRandom {
    fn name(&self) -> &'static str {
        "abstract"
    }
    fn describe(&self) -> &'static str {
        "abstract semantics, seeded random choice among applicable instances"
    }
    fn resume(&self, program: &Program, state: State, config: &Config) -> Result<Execution, EngineError> {
        run_abstract(program, state, config).map(Execution::single)
    }
}

pub struct Exhaustive;

impl Strategy for Exhaustive {
    fn name(&self) -> &'static str {
        "exhaustive"
    }
    fn describe(&self) -> &'static str {
        "abstract semantics, all reachable normal forms (removals before propagation)"
    }
    fn resume(&self, program: &Program, state: State, config: &Config) -> Result<Execution, EngineError> {
        let r = run_exhaustive(program, state, config.joinability_bound, Scheduling::RemovalFirst);
        if let Some(e) = r.errors.first() {
            return Err(EngineError::Search(e.clone()));
        }
        let stats = format!(
            "EXPLORED={} NORMAL_FORMS={} COMPLETE={}",
            r.explored,
            r.normal_forms.len(),
            if r.complete { "yes" } else { "no" }
        );
        Ok(Execution {
            outcomes: r
                .normal_forms
                .into_iter()
                .map(|s| Outcome { status: if s.is_failed() { Status::Failed } else { Status::NormalForm }, state: s })
                .collect(),
            steps: r.explored,
            complete: r.complete,
            trace: None,
            stats: Some(stats),
        })
    }
}

pub struct Parallel;

impl Strategy for Parallel {
    fn name(&self) -> &'static str {
        "parallel"
    }
    fn describe(&self) -> &'static str {
        "rounds of simultaneously applied compatible instances"
    }
    fn resume(&self, program: &Program, state: State, config: &Config) -> Result<Execution, EngineError> {
        let r = run_parallel(program, state, config, false)?;
        Ok(Execution {
            steps: r.instances,
            complete: r.status != Status::StepLimit,
            trace: None,
            stats: Some(r.stats_line()),
            outcomes: vec![Outcome { state: r.state, status: r.status }],
        })
    }
}

/// Strategies selectable by name at runtime.
pub struct StrategyRegistry {
    entries: BTreeMap<&'static str, Box<dyn Strategy>>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut r = StrategyRegistry::empty();
        r.register(Box::new(Refined));
        r.register(Box::new(AbstractRandom));
        r.register(Box::new(Exhaustive));
        r.register(Box::new(Parallel));
        r
    }
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry { entries: BTreeMap::new() }
    }

    /// Register a strategy, replacing any previous one with the same name.
    pub fn register(&mut self, s: Box<dyn Strategy>) {
        self.entries.insert(s.name(), s);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Strategy> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Strategy> {
        self.entries.values().map(|b| b.as_ref())
    }

    pub const DEFAULT: &'static str = "refined";
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::state_equiv;
    use crate::syntax::{parse_goal, parse_program};

    #[test]
    fn registry_lists_all_strategies() {
        let r = StrategyRegistry::default();
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["abstract", "exhaustive", "parallel", "refined"]);
        assert!(r.get(StrategyRegistry::DEFAULT).is_some());
        assert!(r.get("nope").is_none());
    }

    #[test]
    fn every_strategy_finds_the_minimum() {
        let p = parse_program("min(I) \\ min(J) <=> J > I | true.").unwrap();
        let goal = parse_goal("min(3), min(1), min(2)").unwrap();
        let r = StrategyRegistry::default();
        let reference = r.get("refined").unwrap().run(&p, &goal, &Config::default()).unwrap();
        for s in r.iter() {
            let e = s.run(&p, &goal, &Config::default().with_width(3)).unwrap();
            assert_eq!(e.outcomes.len(), 1, "{}", s.name());
            assert!(state_equiv(&e.outcomes[0].state, &reference.outcomes[0].state), "{}", s.name());
        }
    }

    struct Noop;
    impl Strategy for Noop {
        fn name(&self) -> &'static str {
            "noop"
        }
        fn describe(&self) -> &'static str {
            "returns the initial state"
        }
        fn resume(&self, _: &Program, state: State, _: &Config) -> Result<Execution, EngineError> {
            Ok(Execution {
                outcomes: vec![Outcome { state, status: Status::StepLimit }],
                steps: 0,
                complete: false,
                trace: None,
                stats: None,
            })
        }
    }

    #[test]
    fn custom_strategies_can_be_registered() {
        let mut r = StrategyRegistry::default();
        r.register(Box::new(Noop));
        let p = parse_program("p <=> q.").unwrap();
        let e = r.get("noop").unwrap().run(&p, &parse_goal("p").unwrap(), &Config::default()).unwrap();
        assert_eq!(e.outcomes[0].state.answer(), "p\n");
    }
}
