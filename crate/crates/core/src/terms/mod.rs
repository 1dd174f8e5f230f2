//! First-order terms over which rule heads, guards and bodies are built.
//!
//! A term is a variable, an exact number, or a functor applied to argument
//! terms. Atoms are compounds with no arguments. Variables are identified by
//! a `(name, index)` pair: parsed variables carry index 0 and renaming only
//! ever changes the index.

mod arith;
mod subst;

pub use arith::{eval_arith, eval_ground, is_arith_functor, ArithError};
pub use subst::{match_terms, rename_apart, unify, unify_all, Substitution};
pub(crate) use subst::{match_into, Matching};

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Symbol = Arc<str>;

pub fn symbol(name: &str) -> Symbol {
    Arc::from(name)
}

/// A logic variable. Identity is the `(name, index)` pair.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var {
    pub name: Symbol,
    pub index: u32,
}

impl Var {
    pub fn new(name: &str) -> Self {
        Var { name: symbol(name), index: 0 }
    }

    pub fn with_index(name: Symbol, index: u32) -> Self {
        Var { name, index }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}_{}", self.name, self.index)
        }
    }
}

/// An exact number. Integers are rationals with denominator one.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Number(pub BigRational);

impl Number {
    pub fn int(value: i64) -> Self {
        Number(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn from_bigint(value: BigInt) -> Self {
        Number(BigRational::from_integer(value))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Number(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// The value as an `i64`, if it is an integer in range.
    pub fn to_i64(&self) -> Option<i64> {
        use num_traits::ToPrimitive;
        if self.is_integer() {
            self.0.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn one() -> Self {
        Number(BigRational::one())
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    Var(Var),
    Num(Number),
    Compound(Symbol, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::new(name))
    }

    pub fn int(value: i64) -> Term {
        Term::Num(Number::int(value))
    }

    pub fn atom(name: &str) -> Term {
        Term::Compound(symbol(name), Vec::new())
    }

    pub fn compound(name: &str, args: Vec<Term>) -> Term {
        Term::Compound(symbol(name), args)
    }

    /// Functor name and arity of a compound; `None` for variables and numbers.
    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Compound(name, args) => Some((name, args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<&Number> {
        match self {
            Term::Num(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Num(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Num(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Variables in order of first occurrence (left to right).
    pub fn vars_in_order(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Num(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|a| a.vars_in_order(out)),
        }
    }

    pub fn occurs(&self, var: &Var) -> bool {
        match self {
            Term::Var(v) => v == var,
            Term::Num(_) => false,
            Term::Compound(_, args) => args.iter().any(|a| a.occurs(var)),
        }
    }

    pub fn max_var_index(&self) -> u32 {
        match self {
            Term::Var(v) => v.index,
            Term::Num(_) => 0,
            Term::Compound(_, args) => args.iter().map(Term::max_var_index).max().unwrap_or(0),
        }
    }

    /// Replace variables through `f`, leaving the rest of the term intact.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Num(_) => self.clone(),
            Term::Compound(name, args) => {
                Term::Compound(name.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
        }
    }
}

impl From<Var> for Term {
    fn from(v: Var) -> Self {
        Term::Var(v)
    }
}

impl From<Number> for Term {
    fn from(n: Number) -> Self {
        Term::Num(n)
    }
}

/// Operator table shared by the printer and the parser.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Assoc {
    Left,
    None,
}

pub(crate) fn binary_op(name: &str) -> Option<(u8, Assoc)> {
    match name {
        "->" => Some((10, Assoc::None)),
        "=" | "==" | "=/=" | "<" | "=<" | ">" | ">=" => Some((20, Assoc::None)),
        "+" | "-" => Some((30, Assoc::Left)),
        "*" | "/" | "mod" => Some((40, Assoc::Left)),
        _ => None,
    }
}

const UNARY_MINUS_PREC: u8 = 50;

impl Term {
    fn precedence(&self) -> u8 {
        match self {
            Term::Compound(name, args) if args.len() == 2 => {
                binary_op(name).map(|(p, _)| p).unwrap_or(u8::MAX)
            }
            Term::Compound(name, args) if args.len() == 1 && &**name == "-" => UNARY_MINUS_PREC,
            Term::Num(n) if !n.is_integer() => 40,
            Term::Num(n) if n.is_negative() => UNARY_MINUS_PREC,
            _ => u8::MAX,
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Num(n) => write!(f, "{n}"),
            Term::Compound(name, args) => {
                if args.len() == 2 {
                    if let Some((prec, assoc)) = binary_op(name) {
                        let (lp, rp) = match assoc {
                            Assoc::Left => (prec, prec + 1),
                            Assoc::None => (prec + 1, prec + 1),
                        };
                        args[0].fmt_operand(f, lp)?;
                        if &**name == "->" {
                            write!(f, "->")?;
                        } else {
                            write!(f, " {name} ")?;
                        }
                        return args[1].fmt_operand(f, rp);
                    }
                }
                if args.len() == 1 && &**name == "-" {
                    write!(f, "-")?;
                    return args[0].fmt_operand(f, UNARY_MINUS_PREC + 1);
                }
                write!(f, "{name}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing_respects_precedence() {
        let t = Term::compound(
            "/",
            vec![
                Term::compound("+", vec![Term::var("R"), Term::compound("/", vec![Term::var("X"), Term::var("R")])]),
                Term::int(2),
            ],
        );
        assert_eq!(t.to_string(), "(R + X / R) / 2");
        let m = Term::compound("gcd", vec![Term::compound("mod", vec![Term::var("J"), Term::var("I")])]);
        assert_eq!(m.to_string(), "gcd(J mod I)");
        let g = Term::compound("->", vec![Term::var("A"), Term::compound("*", vec![Term::var("B"), Term::var("C")])]);
        assert_eq!(g.to_string(), "A->B * C");
    }

    #[test]
    fn renamed_variables_print_with_index() {
        let v = Var::with_index(symbol("M"), 3);
        assert_eq!(Term::Var(v).to_string(), "M_3");
        assert_eq!(Term::Num(Number::ratio(13, 2)).to_string(), "13/2");
    }
}
