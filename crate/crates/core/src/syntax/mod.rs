//! Surface syntax: rules, programs and goals.
//!
//! ```text
//! name @ Kept \ Removed <=> Guard | Body.     % simpagation
//! Head <=> Guard | Body.                      % simplification
//! Head ==> Guard | Body.                      % propagation
//! ```
//!
//! The guard is optional, conjunctions are comma separated, and `true` is the
//! empty body. `%` starts a line comment.

mod lexer;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::builtins::is_builtin;
use crate::terms::{is_arith_functor, Term, Var};
use parser::{Parser, RawRule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("function symbol `{name}` used with arities {first} and {second}")]
    ArityClash { name: String, first: usize, second: usize },
    #[error("built-in constraint `{constraint}` in the head of rule {rule}")]
    BuiltinInHead { rule: String, constraint: String },
    #[error("user constraint `{constraint}` in the guard of rule {rule}")]
    UserConstraintInGuard { rule: String, constraint: String },
    #[error("rule name `{0}` is used more than once")]
    DuplicateRuleName(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Simplification,
    Propagation,
    Simpagation,
}

/// A generalized simpagation rule `kept \ removed <=> guard | body`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub name: Option<String>,
    pub kept: Vec<Term>,
    pub removed: Vec<Term>,
    pub guard: Vec<Term>,
    pub body: Vec<Term>,
    pub source_index: usize,
}

impl Rule {
    pub fn kind(&self) -> RuleKind {
        match (self.kept.is_empty(), self.removed.is_empty()) {
            (_, true) => RuleKind::Propagation,
            (true, false) => RuleKind::Simplification,
            (false, false) => RuleKind::Simpagation,
        }
    }

    /// Kept heads followed by removed heads.
    pub fn heads(&self) -> impl Iterator<Item = &Term> {
        self.kept.iter().chain(&self.removed)
    }

    pub fn head_count(&self) -> usize {
        self.kept.len() + self.removed.len()
    }

    /// The rule's name, or `r<n>` (1-based source position) if it has none.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("r{}", self.source_index + 1))
    }

    pub fn head_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.heads().for_each(|h| h.collect_vars(&mut out));
        out
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.head_vars();
        self.guard.iter().chain(&self.body).for_each(|t| t.collect_vars(&mut out));
        out
    }

    /// Guard conjuncts other than `true`.
    pub fn real_guard(&self) -> impl Iterator<Item = &Term> {
        self.guard.iter().filter(|g| !is_true(g))
    }

    /// First-order reading `∀ (H1 ∧ H2 ∧ C ↔ ∃ (H1 ∧ C ∧ B))`, with the
    /// body's local variables existentially quantified on the right.
    pub fn logical_reading(&self) -> String {
        let mut univ = Vec::new();
        self.heads().chain(&self.guard).for_each(|t| t.vars_in_order(&mut univ));
        let mut local = Vec::new();
        self.body.iter().for_each(|t| t.vars_in_order(&mut local));
        local.retain(|v| !univ.contains(v));

        let guard: Vec<&Term> = self.real_guard().collect();
        let left: Vec<&Term> = self.heads().chain(guard.iter().copied()).collect();
        let right: Vec<&Term> = self.kept.iter().chain(guard.iter().copied()).chain(&self.body).collect();
        let mut right_text = conjunction(&right);
        if !local.is_empty() {
            right_text = format!("∃{} ({right_text})", var_list(&local));
        }
        let formula = format!("{} ↔ {right_text}", conjunction(&left));
        if univ.is_empty() {
            formula
        } else {
            format!("∀{} ({formula})", var_list(&univ))
        }
    }
}

fn var_list(vs: &[Var]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn conjunction(ts: &[&Term]) -> String {
    if ts.is_empty() {
        "true".to_string()
    } else {
        ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ∧ ")
    }
}

fn is_true(t: &Term) -> bool {
    t.functor() == Some(("true", 0))
}

fn join(ts: &[Term]) -> String {
    ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = &self.name {
            write!(f, "{name} @ ")?;
        }
        match self.kind() {
            RuleKind::Propagation => write!(f, "{} ==> ", join(&self.kept))?,
            RuleKind::Simplification => write!(f, "{} <=> ", join(&self.removed))?,
            RuleKind::Simpagation => write!(f, "{} \\ {} <=> ", join(&self.kept), join(&self.removed))?,
        }
        let guard: Vec<Term> = self.real_guard().cloned().collect();
        if !guard.is_empty() {
            write!(f, "{} | ", join(&guard))?;
        }
        if self.body.is_empty() {
            write!(f, "true.")
        } else {
            write!(f, "{}.", join(&self.body))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    /// User constraint symbols as `(name, arity)`.
    pub constraint_symbols: BTreeSet<(String, usize)>,
}

impl Program {
    /// Build a program from rules, renumbering `source_index` and checking
    /// the program-level invariants.
    pub fn from_rules(rules: Vec<Rule>) -> Result<Program, ParseError> {
        let rules: Vec<Rule> = rules
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                r.source_index = i;
                r
            })
            .collect();
        let mut names = BTreeSet::new();
        let mut symbols = BTreeSet::new();
        let mut functors: BTreeMap<String, usize> = BTreeMap::new();
        for r in &rules {
            if let Some(n) = &r.name {
                if !names.insert(n.clone()) {
                    return Err(ParseError::DuplicateRuleName(n.clone()));
                }
            }
            for h in r.heads() {
                match h.functor() {
                    Some((name, arity)) if is_builtin(name, arity) => {
                        return Err(ParseError::BuiltinInHead { rule: r.label(), constraint: h.to_string() });
                    }
                    Some((name, arity)) => {
                        symbols.insert((name.to_string(), arity));
                    }
                    None => {
                        return Err(ParseError::Syntax {
                            line: 0,
                            col: 0,
                            message: format!("head `{h}` of rule {} is not a constraint", r.label()),
                        })
                    }
                }
            }
            for g in &r.guard {
                match g.functor() {
                    Some((name, arity)) if is_builtin(name, arity) => {}
                    _ => {
                        return Err(ParseError::UserConstraintInGuard { rule: r.label(), constraint: g.to_string() })
                    }
                }
            }
            for b in &r.body {
                match b.functor() {
                    Some((name, arity)) if !is_builtin(name, arity) => {
                        symbols.insert((name.to_string(), arity));
                    }
                    Some(_) => {}
                    None => {
                        return Err(ParseError::Syntax {
                            line: 0,
                            col: 0,
                            message: format!("body element `{b}` of rule {} is not a constraint", r.label()),
                        })
                    }
                }
            }
            for t in r.heads().chain(&r.guard).chain(&r.body) {
                for a in t.args() {
                    check_functor_arities(a, &mut functors)?;
                }
            }
        }
        Ok(Program { rules, constraint_symbols: symbols })
    }

    pub fn parse(src: &str) -> Result<Program, ParseError> {
        parse_program(src)
    }

    /// Largest number of head constraints over all rules.
    pub fn max_heads(&self) -> usize {
        self.rules.iter().map(Rule::head_count).max().unwrap_or(0)
    }

    pub fn rule_index(&self, label: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.label() == label)
    }

    /// A copy without the rule at `index`.
    pub fn without_rule(&self, index: usize) -> Program {
        let rules = self
            .rules
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != index)
            .map(|(_, r)| r.clone())
            .collect();
        Program::from_rules(rules).expect("removing a rule keeps a valid program")
    }

    /// A copy with extra rules appended.
    pub fn with_rules(&self, extra: impl IntoIterator<Item = Rule>) -> Result<Program, ParseError> {
        let mut rules = self.rules.clone();
        rules.extend(extra);
        Program::from_rules(rules)
    }
}

/// Function symbols nested inside constraints must keep a single arity.
/// Arithmetic functors are exempt (`-` is both unary and binary).
fn check_functor_arities(t: &Term, seen: &mut BTreeMap<String, usize>) -> Result<(), ParseError> {
    if let Term::Compound(name, args) = t {
        if !is_arith_functor(name, args.len()) && &**name != "-" {
            match seen.get(&**name) {
                Some(&a) if a != args.len() => {
                    return Err(ParseError::ArityClash { name: name.to_string(), first: a, second: args.len() })
                }
                Some(_) => {}
                None => {
                    seen.insert(name.to_string(), args.len());
                }
            }
        }
        for a in args {
            check_functor_arities(a, seen)?;
        }
    }
    Ok(())
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

fn strip_true(ts: Vec<Term>) -> Vec<Term> {
    ts.into_iter().filter(|t| !is_true(t)).collect()
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    let mut rules = Vec::new();
    while !p.at_eof() {
        let RawRule { name, kept, removed, propagation, guard, body, line } = p.parse_rule()?;
        debug_assert!(!propagation || removed.is_empty());
        let rule = Rule {
            name,
            kept,
            removed,
            guard: guard.unwrap_or_else(|| vec![Term::atom("true")]),
            body: strip_true(body),
            source_index: rules.len(),
        };
        if rule.head_count() == 0 {
            return Err(ParseError::Syntax { line, col: 1, message: "rule without head".into() });
        }
        rules.push(rule);
    }
    Program::from_rules(rules)
}

/// Parse a goal: a possibly empty conjunction, optionally ending in `.`.
pub fn parse_goal(src: &str) -> Result<Vec<Term>, ParseError> {
    let mut p = Parser::new(src)?;
    if p.at_eof() {
        return Ok(Vec::new());
    }
    let goal = p.parse_conj()?;
    p.expect_end_with_optional_stop()?;
    Ok(strip_true(goal))
}

/// Parse a single term.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.parse_expr(0)?;
    p.expect_end_with_optional_stop()?;
    Ok(t)
}
