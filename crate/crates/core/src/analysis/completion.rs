//! Completion: orient non-joinable critical pairs into new rules until the
//! program is confluent.

use thiserror::Error;

use super::critical::{check_confluence, one_line, Confluence, Joinability};
use super::ranking::RankingSpec;
use crate::config::Config;
use crate::state::State;
use crate::syntax::{Program, Rule};
use crate::terms::Term;

#[derive(Debug, Error)]
pub enum CompletionError {
    #[error("cannot orient {left} against {right}: ranks are equal or undefined")]
    UnorientablePair { left: String, right: String },
    #[error("no confluent program after {iterations} iterations")]
    IterationLimit { iterations: usize, program: Program },
    #[error("completion gave up: {0}")]
    GaveUp(String),
}

#[derive(Clone, Debug)]
pub struct Completion {
    pub program: Program,
    pub added: Vec<Rule>,
    pub iterations: usize,
}

fn user_part(s: &State) -> Vec<Term> {
    s.constraints().map(|c| c.term).collect()
}

fn builtin_part(s: &State) -> Vec<Term> {
    s.builtin()
        .bindings()
        .iter()
        .map(|(v, t)| Term::compound("=", vec![Term::Var(v.clone()), t.clone()]))
        .collect()
}

fn or_true(ts: Vec<Term>) -> Vec<Term> {
    if ts.is_empty() {
        vec![Term::atom("true")]
    } else {
        ts
    }
}

/// Rules making `n1` and `n2` joinable, with `rank(n1) > rank(n2)`.
fn oriented_rules(n1: &State, n2: &State) -> Result<Vec<Rule>, CompletionError> {
    let heads = user_part(n1);
    if heads.is_empty() {
        return Err(CompletionError::GaveUp(format!(
            "the larger normal form `{}` has no user constraints to use as a head",
            one_line(&n1.answer())
        )));
    }
    let b1 = builtin_part(n1);
    let diff: Vec<Term> = builtin_part(n2).into_iter().filter(|c| !b1.contains(c)).collect();
    let mut body = user_part(n2);
    body.extend(diff.iter().cloned());
    let mut rules = vec![Rule {
        name: None,
        kept: Vec::new(),
        removed: heads.clone(),
        guard: or_true(b1.clone()),
        body: or_true(body),
        source_index: 0,
    }];
    if !diff.is_empty() {
        rules.push(Rule { name: None, kept: heads, removed: Vec::new(), guard: or_true(b1), body: diff, source_index: 0 });
    }
    Ok(rules)
}

pub fn complete(program: &Program, order: &RankingSpec, config: &Config) -> Result<Completion, CompletionError> {
    let mut current = program.clone();
    let mut added = Vec::new();
    for iteration in 0..=config.completion_iterations {
        let report = check_confluence(&current, config);
        match report.verdict {
            Confluence::Confluent => return Ok(Completion { program: current, added, iterations: iteration }),
            Confluence::Unknown if report.witnesses().next().is_none() => {
                return Err(CompletionError::GaveUp("a critical pair could not be decided".into()))
            }
            _ => {}
        }
        if iteration == config.completion_iterations {
            break;
        }
        let Some(Joinability::NotJoinable { left, right }) = report.witnesses().next().map(|o| &o.verdict) else {
            unreachable!("verdict is negative")
        };
        let rank = |s: &State| order.rank_all(user_part(s).iter());
        let unorientable = || CompletionError::UnorientablePair {
            left: one_line(&left.answer()),
            right: one_line(&right.answer()),
        };
        let (rl, rr) = (rank(left).ok_or_else(unorientable)?, rank(right).ok_or_else(unorientable)?);
        let rules = match rl.cmp(&rr) {
            std::cmp::Ordering::Greater => oriented_rules(left, right)?,
            std::cmp::Ordering::Less => oriented_rules(right, left)?,
            std::cmp::Ordering::Equal => return Err(unorientable()),
        };
        added.extend(rules.iter().cloned());
        current = current.with_rules(rules).map_err(|e| CompletionError::GaveUp(e.to_string()))?;
    }
    Err(CompletionError::IterationLimit { iterations: config.completion_iterations, program: current })
}
