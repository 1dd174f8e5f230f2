//! Operational equivalence of confluent programs and redundant rules.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::critical::{check_confluence, format_assignment, minimal_instances, one_line, Confluence};
use crate::config::Config;
use crate::engine::{run_exhaustive, Scheduling};
use crate::state::{state_equiv, State};
use crate::syntax::{Program, Rule};
use crate::terms::{Term, Var};

#[derive(Debug, Error)]
pub enum EquivalenceError {
    #[error("program {which} is not known to be confluent (verdict: {verdict:?}); operational equivalence is only decided for confluent programs")]
    NotConfluent { which: usize, verdict: Confluence },
}

#[derive(Clone, Debug)]
pub struct EquivalenceWitness {
    /// 1 or 2: the program the rule comes from.
    pub program: usize,
    pub rule: String,
    pub assignment: Vec<(Var, Term)>,
    pub state: State,
    pub first: State,
    pub second: State,
}

impl fmt::Display for EquivalenceWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.assignment.is_empty() { String::new() } else { format!(" at {}", format_assignment(&self.assignment)) };
        write!(
            f,
            "minimal state of rule {} (program {}): {}{at}; program 1 gives {}; program 2 gives {}",
            self.rule,
            self.program,
            one_line(&self.state.answer()),
            one_line(&self.first.answer()),
            one_line(&self.second.answer())
        )
    }
}

#[derive(Clone, Debug)]
pub enum Equivalence {
    Equivalent,
    NotEquivalent(Box<EquivalenceWitness>),
    Unknown(String),
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub verdict: Equivalence,
    /// Minimal states executed, 0 when the programs are syntactically equal.
    pub states_checked: usize,
    pub seed: u64,
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MINIMAL STATES: {}", self.states_checked)?;
        match &self.verdict {
            Equivalence::Equivalent => writeln!(f, "EQUIVALENT: yes")?,
            Equivalence::NotEquivalent(w) => writeln!(f, "EQUIVALENT: no\nWITNESS {w}")?,
            Equivalence::Unknown(why) => writeln!(f, "EQUIVALENT: unknown ({why})")?,
        }
        writeln!(f, "SEED: {}", self.seed)
    }
}

/// A rule's text with variables renamed by first occurrence and the name
/// dropped.
fn rule_shape(r: &Rule) -> String {
    let mut order = Vec::new();
    r.heads().chain(&r.guard).chain(&r.body).for_each(|t| t.vars_in_order(&mut order));
    let rename: BTreeMap<Var, Term> =
        order.into_iter().enumerate().map(|(i, v)| (v, Term::Var(Var::new(&format!("V{i}"))))).collect();
    let map = |ts: &[Term]| -> Vec<Term> { ts.iter().map(|t| t.map_vars(&mut |v| rename[v].clone())).collect() };
    Rule {
        name: None,
        kept: map(&r.kept),
        removed: map(&r.removed),
        guard: map(&r.guard),
        body: map(&r.body),
        source_index: 0,
    }
    .to_string()
}

/// Same multiset of rules up to variable renaming and rule names.
pub fn structurally_equal(p1: &Program, p2: &Program) -> bool {
    let shapes = |p: &Program| {
        let mut v: Vec<String> = p.rules.iter().map(rule_shape).collect();
        v.sort();
        v
    };
    shapes(p1) == shapes(p2)
}

enum Outcome {
    Unique(State),
    Unknown(String),
}

fn normal_form(p: &Program, s: &State, bound: usize) -> Outcome {
    let r = run_exhaustive(p, s.clone(), bound, Scheduling::RemovalFirst);
    if let Some(e) = r.errors.first() {
        return Outcome::Unknown(e.clone());
    }
    match (r.complete, r.normal_forms.as_slice()) {
        (true, [n]) => Outcome::Unique(n.clone()),
        (true, []) => Outcome::Unknown("no normal form".into()),
        (true, _) => Outcome::Unknown("several normal forms".into()),
        (false, _) => Outcome::Unknown(format!("search bound {bound} reached")),
    }
}

/// Run every rule's minimal states in both programs and compare normal
/// forms. Both programs must be confluent.
pub fn check_operational_equivalence(
    p1: &Program,
    p2: &Program,
    config: &Config,
) -> Result<EquivalenceReport, EquivalenceError> {
    if structurally_equal(p1, p2) {
        return Ok(EquivalenceReport { verdict: Equivalence::Equivalent, states_checked: 0, seed: config.seed });
    }
    for (which, p) in [(1, p1), (2, p2)] {
        let verdict = check_confluence(p, config).verdict;
        if verdict != Confluence::Confluent {
            return Err(EquivalenceError::NotConfluent { which, verdict });
        }
    }
    let mut checked = 0;
    let mut unknown = None;
    for (which, p) in [(1, p1), (2, p2)] {
        for (r, rule) in p.rules.iter().enumerate() {
            for inst in minimal_instances(p, r, config) {
                checked += 1;
                let a = normal_form(p1, &inst.state, config.joinability_bound);
                let b = normal_form(p2, &inst.state, config.joinability_bound);
                match (a, b) {
                    (Outcome::Unique(x), Outcome::Unique(y)) => {
                        if !state_equiv(&x, &y) {
                            let w = EquivalenceWitness {
                                program: which,
                                rule: rule.label(),
                                assignment: inst.assignment,
                                state: inst.state,
                                first: x,
                                second: y,
                            };
                            return Ok(EquivalenceReport {
                                verdict: Equivalence::NotEquivalent(Box::new(w)),
                                states_checked: checked,
                                seed: config.seed,
                            });
                        }
                    }
                    (Outcome::Unknown(why), _) | (_, Outcome::Unknown(why)) => {
                        unknown.get_or_insert(format!("rule {}: {why}", rule.label()));
                    }
                }
            }
        }
    }
    let verdict = match unknown {
        Some(why) => Equivalence::Unknown(why),
        None => Equivalence::Equivalent,
    };
    Ok(EquivalenceReport { verdict, states_checked: checked, seed: config.seed })
}

/// Rules whose removal alone leaves an operationally equivalent program.
pub fn find_redundant_rules(p: &Program, config: &Config) -> Vec<usize> {
    (0..p.rules.len())
        .filter(|&r| {
            matches!(
                check_operational_equivalence(p, &p.without_rule(r), config),
                Ok(EquivalenceReport { verdict: Equivalence::Equivalent, .. })
            )
        })
        .collect()
}
