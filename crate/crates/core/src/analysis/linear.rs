//! Affine expressions over integer variables and a Fourier–Motzkin
//! feasibility test with integer tightening.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::terms::{Term, Var};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Lin {
    pub coeffs: BTreeMap<Var, BigRational>,
    pub constant: BigRational,
}

impl Lin {
    pub fn constant(c: BigRational) -> Self {
        Lin { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn zero() -> Self {
        Lin::constant(BigRational::zero())
    }

    pub fn var(v: Var) -> Self {
        Lin { coeffs: BTreeMap::from([(v, BigRational::one())]), constant: BigRational::zero() }
    }

    pub fn add(&self, other: &Lin) -> Lin {
        let mut out = self.clone();
        for (v, c) in &other.coeffs {
            let e = out.coeffs.entry(v.clone()).or_insert_with(BigRational::zero);
            *e += c;
            if e.is_zero() {
                out.coeffs.remove(v);
            }
        }
        out.constant += &other.constant;
        out
    }

    pub fn scale(&self, k: &BigRational) -> Lin {
        if k.is_zero() {
            return Lin::zero();
        }
        Lin {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn sub(&self, other: &Lin) -> Lin {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn as_constant(&self) -> Option<&BigRational> {
        self.coeffs.is_empty().then_some(&self.constant)
    }

    fn coeff(&self, v: &Var) -> BigRational {
        self.coeffs.get(v).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Scale to integer coefficients and constant with a positive factor.
    fn integral(&self) -> Lin {
        let lcm = self
            .coeffs
            .values()
            .chain(std::iter::once(&self.constant))
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        self.scale(&BigRational::from_integer(lcm))
    }

    /// For `self >= 0` over integers: divide by the gcd of the variable
    /// coefficients and round the constant down.
    fn tighten(&self) -> Lin {
        let l = self.integral();
        let g = l.coeffs.values().fold(BigInt::zero(), |acc, c| acc.gcd(c.numer()));
        if g.is_zero() || g.is_one() {
            return l;
        }
        let g = BigRational::from_integer(g);
        let mut out = l.scale(&(BigRational::one() / &g));
        out.constant = out.constant.floor();
        out
    }
}

/// Affine reading of an arithmetic term, if it has one.
pub(crate) fn linearize(t: &Term) -> Option<Lin> {
    match t {
        Term::Num(n) => Some(Lin::constant(n.0.clone())),
        Term::Var(v) => Some(Lin::var(v.clone())),
        Term::Compound(f, args) => match (&**f, args.as_slice()) {
            ("+", [a, b]) => Some(linearize(a)?.add(&linearize(b)?)),
            ("-", [a, b]) => Some(linearize(a)?.sub(&linearize(b)?)),
            ("-", [a]) => Some(linearize(a)?.scale(&-BigRational::one())),
            ("*", [a, b]) => {
                let (x, y) = (linearize(a)?, linearize(b)?);
                match (x.as_constant(), y.as_constant()) {
                    (Some(k), _) => Some(y.scale(k)),
                    (_, Some(k)) => Some(x.scale(k)),
                    _ => None,
                }
            }
            ("/", [a, b]) => {
                let k = linearize(b)?.as_constant()?.clone();
                if k.is_zero() {
                    return None;
                }
                Some(linearize(a)?.scale(&(BigRational::one() / k)))
            }
            _ => None,
        },
    }
}

/// A constraint `expr >= 0`, or `expr > 0` when strict.
#[derive(Clone, Debug)]
pub(crate) struct Ineq {
    pub expr: Lin,
    pub strict: bool,
}

impl Ineq {
    pub fn ge(expr: Lin) -> Self {
        Ineq { expr, strict: false }
    }

    pub fn gt(expr: Lin) -> Self {
        Ineq { expr, strict: true }
    }

    /// Over integers, `e > 0` is `e - 1 >= 0` once `e` has integer
    /// coefficients.
    fn non_strict(&self) -> Lin {
        let e = self.expr.integral();
        if self.strict {
            e.sub(&Lin::constant(BigRational::one())).tighten()
        } else {
            e.tighten()
        }
    }
}

/// Linear constraints for a comparison guard. `None` if it is not affine;
/// disequalities contribute nothing.
pub(crate) fn guard_constraints(g: &Term) -> Option<Vec<Ineq>> {
    let (op, [a, b]) = (g.functor()?.0, g.args()) else { return None };
    if op == "=/=" || op == "true" {
        return Some(Vec::new());
    }
    let (a, b) = (linearize(a)?, linearize(b)?);
    Some(match op {
        "<" => vec![Ineq::gt(b.sub(&a))],
        "=<" => vec![Ineq::ge(b.sub(&a))],
        ">" => vec![Ineq::gt(a.sub(&b))],
        ">=" => vec![Ineq::ge(a.sub(&b))],
        "=" | "==" => vec![Ineq::ge(a.sub(&b)), Ineq::ge(b.sub(&a))],
        _ => return None,
    })
}

const MAX_CONSTRAINTS: usize = 20_000;

/// Whether the system has a rational solution after integer tightening.
/// `Some(false)` proves there is no integer solution. `None` if the
/// elimination grew too large.
pub(crate) fn feasible(system: &[Ineq]) -> Option<bool> {
    let mut cs: BTreeSet<Lin> = system.iter().map(Ineq::non_strict).collect();
    loop {
        if cs.iter().any(|c| c.as_constant().is_some_and(|k| k.is_negative())) {
            return Some(false);
        }
        cs.retain(|c| c.as_constant().is_none());
        // Eliminate the variable that produces the fewest new constraints.
        let vars: BTreeSet<Var> = cs.iter().flat_map(|c| c.coeffs.keys().cloned()).collect();
        let Some(x) = vars.into_iter().min_by_key(|v| {
            let pos = cs.iter().filter(|c| c.coeff(v).is_positive()).count();
            let neg = cs.iter().filter(|c| c.coeff(v).is_negative()).count();
            pos * neg
        }) else {
            return Some(true);
        };
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), BTreeSet::new());
        for c in cs {
            let k = c.coeff(&x);
            if k.is_positive() {
                pos.push(c);
            } else if k.is_negative() {
                neg.push(c);
            } else {
                rest.insert(c);
            }
        }
        for p in &pos {
            for n in &neg {
                let combined = p.scale(&-n.coeff(&x)).add(&n.scale(&p.coeff(&x)));
                rest.insert(combined.tighten());
            }
        }
        if rest.len() > MAX_CONSTRAINTS {
            return None;
        }
        cs = rest;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn sys(guards: &[&str]) -> Vec<Ineq> {
        guards.iter().flat_map(|g| guard_constraints(&parse_term(g).unwrap()).unwrap()).collect()
    }

    #[test]
    fn linearize_examples() {
        let l = linearize(&parse_term("2*X - (Y + 3)/2").unwrap()).unwrap();
        assert_eq!(l.coeffs.len(), 2);
        assert_eq!(l.constant, BigRational::new((-3).into(), 2.into()));
        assert!(linearize(&parse_term("X*Y").unwrap()).is_none());
        assert!(linearize(&parse_term("X mod 2").unwrap()).is_none());
    }

    #[test]
    fn contradictions_are_detected() {
        assert_eq!(feasible(&sys(&["X > 3", "X < 2"])), Some(false));
        assert_eq!(feasible(&sys(&["X >= I", "I > 0", "X =< 0"])), Some(false));
        assert_eq!(feasible(&sys(&["X >= 0", "X =< 5", "Y = X + 1"])), Some(true));
    }

    #[test]
    fn integer_tightening() {
        // 0 < X < 1 has rational but no integer solutions.
        assert_eq!(feasible(&sys(&["X > 0", "X < 1"])), Some(false));
        // 2X = 1 likewise.
        assert_eq!(feasible(&sys(&["2*X = 1"])), Some(false));
        assert_eq!(feasible(&sys(&["2*X = 4"])), Some(true));
    }
}
