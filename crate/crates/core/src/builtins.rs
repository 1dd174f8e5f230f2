//! The built-in constraint theory: syntactic equality solved by unification,
//! exact arithmetic comparisons, and guard entailment.

use std::cmp::Ordering;

use thiserror::Error;

use num_traits::{One, Zero};

use crate::analysis::linear::{linearize, Lin};
use crate::terms::{eval_arith, eval_ground, is_arith_functor, unify, ArithError, Number, Substitution, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuiltinError {
    #[error("comparison `{0}` needs ground numeric arguments")]
    NonGroundComparison(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("`{0}` is not a built-in constraint")]
    NotBuiltin(String),
}

pub fn is_builtin(name: &str, arity: usize) -> bool {
    matches!(
        (name, arity),
        ("=" | "==" | "=/=" | "<" | "=<" | ">" | ">=", 2) | ("true", 0)
    )
}

/// Numbers, variables and arithmetic functors only.
fn is_arith_expr(t: &Term) -> bool {
    match t {
        Term::Num(_) | Term::Var(_) => true,
        Term::Compound(f, args) => is_arith_functor(f, args.len()) && args.iter().all(is_arith_expr),
    }
}

/// An equation between arithmetic expressions that unification would get
/// wrong: some side is an unevaluated expression and neither side is a
/// variable that can simply be bound to the other.
fn needs_arithmetic(l: &Term, r: &Term) -> bool {
    let open = |t: &Term| matches!(t, Term::Compound(..)) && is_arith_expr(t);
    let bindable = |v: &Term, other: &Term| matches!(v, Term::Var(x) if !other.occurs(x));
    is_arith_expr(l) && is_arith_expr(r) && (open(l) || open(r)) && !bindable(l, r) && !bindable(r, l)
}

fn lin_term(l: &Lin) -> Term {
    let mut parts: Vec<Term> = l
        .coeffs
        .iter()
        .map(|(v, k)| {
            if k.is_one() {
                Term::Var(v.clone())
            } else {
                Term::compound("*", vec![Term::Num(Number(k.clone())), Term::Var(v.clone())])
            }
        })
        .collect();
    if !l.constant.is_zero() || parts.is_empty() {
        parts.push(Term::Num(Number(l.constant.clone())));
    }
    let mut it = parts.into_iter();
    let first = it.next().expect("at least one part");
    it.fold(first, |acc, p| Term::compound("+", vec![acc, p]))
}

pub fn is_builtin_term(t: &Term) -> bool {
    t.functor().is_some_and(|(n, a)| is_builtin(n, a))
}

fn compare(op: &str, ord: Ordering) -> bool {
    match op {
        "<" => ord == Ordering::Less,
        "=<" => ord != Ordering::Greater,
        ">" => ord == Ordering::Greater,
        ">=" => ord != Ordering::Less,
        _ => unreachable!("not a comparison: {op}"),
    }
}

/// Accumulated built-in constraints in solved form.
///
/// Stores only grow: telling never removes information. An inconsistent
/// store is terminal and all inconsistent stores are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BuiltinStore {
    bindings: Substitution,
    /// Non-linear arithmetic equations waiting for more bindings.
    pending: Vec<(Term, Term)>,
    consistent: bool,
}

impl Default for BuiltinStore {
    fn default() -> Self {
        BuiltinStore { bindings: Substitution::new(), pending: Vec::new(), consistent: true }
    }
}

impl BuiltinStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn failed() -> Self {
        BuiltinStore { bindings: Substitution::new(), pending: Vec::new(), consistent: false }
    }

    pub fn consistent(&self) -> bool {
        self.consistent
    }

    pub fn bindings(&self) -> &Substitution {
        &self.bindings
    }

    /// Apply the bindings and fold arithmetic that has become ground.
    pub fn normalize(&self, t: &Term) -> Term {
        let applied = self.bindings.apply(t);
        eval_ground(&applied).unwrap_or(applied)
    }

    fn normalize_strict(&self, t: &Term) -> Result<Term, ArithError> {
        eval_ground(&self.bindings.apply(t))
    }

    fn fail(&mut self) {
        *self = BuiltinStore::failed();
    }

    /// Functional form of [`tell_mut`](Self::tell_mut).
    pub fn tell(&self, c: &Term) -> Result<BuiltinStore, BuiltinError> {
        let mut s = self.clone();
        s.tell_mut(c)?;
        Ok(s)
    }

    /// Add a built-in constraint. Returns whether the bindings changed.
    /// A false constraint makes the store inconsistent; that is not an error.
    pub fn tell_mut(&mut self, c: &Term) -> Result<bool, BuiltinError> {
        if !self.consistent {
            return Ok(false);
        }
        let Some((op, arity)) = c.functor().filter(|(n, a)| is_builtin(n, *a)) else {
            return Err(BuiltinError::NotBuiltin(c.to_string()));
        };
        if arity == 0 {
            return Ok(false);
        }
        let lhs = self.normalize_strict(&c.args()[0])?;
        let rhs = self.normalize_strict(&c.args()[1])?;
        match op {
            "=" => {
                let changed = self.equate(lhs, rhs);
                if changed {
                    self.settle();
                }
                Ok(changed)
            }
            "==" => {
                if lhs != rhs {
                    self.fail();
                }
                Ok(!self.consistent)
            }
            "=/=" => {
                if !(lhs.is_ground() && rhs.is_ground()) {
                    return Err(BuiltinError::NonGroundComparison(c.to_string()));
                }
                if lhs == rhs {
                    self.fail();
                }
                Ok(!self.consistent)
            }
            _ => {
                let (a, b) = match (eval_arith(&lhs), eval_arith(&rhs)) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(ArithError::DivisionByZero(e)), _) | (_, Err(ArithError::DivisionByZero(e))) => {
                        return Err(ArithError::DivisionByZero(e).into())
                    }
                    _ => return Err(BuiltinError::NonGroundComparison(c.to_string())),
                };
                if !compare(op, a.cmp(&b)) {
                    self.fail();
                }
                Ok(!self.consistent)
            }
        }
    }

    /// Solve `lhs = rhs` (both normalized). Returns whether the store changed.
    fn equate(&mut self, lhs: Term, rhs: Term) -> bool {
        if needs_arithmetic(&lhs, &rhs) {
            return self.solve_arith(&lhs, &rhs);
        }
        match unify(&lhs, &rhs) {
            None => {
                self.fail();
                true
            }
            Some(mgu) if mgu.is_empty() => false,
            Some(mgu) => {
                self.bind_all(&mgu);
                true
            }
        }
    }

    fn bind_all(&mut self, mgu: &Substitution) {
        for (v, t) in mgu.iter() {
            let t = self.bindings.apply(t);
            self.bindings.bind(v.clone(), t);
        }
        self.bindings.map_values(|t| eval_ground(t).unwrap_or_else(|_| t.clone()));
    }

    /// Linear equations are solved for their first variable; others wait.
    fn solve_arith(&mut self, lhs: &Term, rhs: &Term) -> bool {
        let (Some(l), Some(r)) = (linearize(lhs), linearize(rhs)) else {
            self.pending.push((lhs.clone(), rhs.clone()));
            return true;
        };
        let d = l.sub(&r);
        let Some((v, k)) = d.coeffs.iter().next().map(|(v, k)| (v.clone(), k.clone())) else {
            if !d.constant.is_zero() {
                self.fail();
                return true;
            }
            return false;
        };
        let mut rest = d.clone();
        rest.coeffs.remove(&v);
        let value = lin_term(&rest.scale(&(-num_rational::BigRational::one() / k)));
        self.bind_all(&[(v, value)].into_iter().collect());
        true
    }

    /// Re-examine waiting equations until nothing changes.
    fn settle(&mut self) {
        loop {
            if !self.consistent || self.pending.is_empty() {
                return;
            }
            let pending = std::mem::take(&mut self.pending);
            let before = pending.len();
            let mut changed = false;
            for (l, r) in pending {
                let (l, r) = (self.normalize(&l), self.normalize(&r));
                if l.is_ground() && r.is_ground() {
                    if l != r {
                        self.fail();
                        return;
                    }
                    changed = true;
                } else if linearize(&l).is_some() && linearize(&r).is_some() {
                    changed |= self.solve_arith(&l, &r);
                } else {
                    self.pending.push((l, r));
                }
            }
            if !changed && self.pending.len() == before {
                return;
            }
        }
    }

    /// Entailment test for a guard conjunct under the current bindings.
    ///
    /// Comparisons are entailed only when both sides evaluate to numbers;
    /// a non-ground comparison is simply not entailed.
    pub fn ask(&self, c: &Term) -> Result<bool, ArithError> {
        if !self.consistent {
            return Ok(true);
        }
        let Some((op, arity)) = c.functor() else {
            return Ok(false);
        };
        if (op, arity) == ("true", 0) {
            return Ok(true);
        }
        if arity != 2 || !is_builtin(op, arity) {
            return Ok(false);
        }
        let lhs = self.normalize_strict(&c.args()[0])?;
        let rhs = self.normalize_strict(&c.args()[1])?;
        Ok(match op {
            "=" | "==" => lhs == rhs,
            "=/=" => lhs.is_ground() && rhs.is_ground() && lhs != rhs,
            _ => match (eval_arith(&lhs), eval_arith(&rhs)) {
                (Ok(a), Ok(b)) => compare(op, a.cmp(&b)),
                (Err(e @ ArithError::DivisionByZero(_)), _) | (_, Err(e @ ArithError::DivisionByZero(_))) => {
                    return Err(e)
                }
                _ => false,
            },
        })
    }

    pub fn ask_all<'a>(&self, cs: impl IntoIterator<Item = &'a Term>) -> Result<bool, ArithError> {
        for c in cs {
            if !self.ask(c)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
