//! Constraint Handling Rules: a parser, abstract, refined and parallel
//! executors, and static analyses (confluence, completion, operational
//! equivalence, termination rankings, complexity bounds).

pub mod analysis;
pub mod builtins;
pub mod config;
pub mod corpus;
pub mod engine;
pub mod parallel;
pub mod state;
pub mod strategy;
pub mod syntax;
pub mod terms;

pub use builtins::BuiltinStore;
pub use config::Config;
pub use engine::{EngineError, RuleInstance, RunResult, Status};
pub use state::{state_equiv, ConstraintId, State, Token};
pub use syntax::{parse_goal, parse_program, Program, Rule, RuleKind};
pub use terms::{Substitution, Term, Var};
pub use strategy::{Strategy, StrategyRegistry};
