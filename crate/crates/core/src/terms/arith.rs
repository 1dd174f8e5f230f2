use num_integer::Integer;
use num_traits::Zero;
use thiserror::Error;

use super::{Number, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("division by zero in {0}")]
    DivisionByZero(String),
    #[error("arithmetic on non-ground term {0}")]
    NonGround(String),
    #[error("unknown arithmetic function {0}")]
    UnknownFunction(String),
    #[error("mod requires integer operands in {0}")]
    NotInteger(String),
    #[error("result of `{0}` exceeds {MAX_BITS} bits")]
    TooLarge(String),
}

/// Bound on the numerator and denominator of any computed number.
pub const MAX_BITS: u64 = 1 << 16;

pub fn is_arith_functor(name: &str, arity: usize) -> bool {
    matches!((name, arity), ("+" | "-" | "*" | "/" | "mod", 2) | ("-", 1))
}

/// Evaluate a ground arithmetic expression exactly.
pub fn eval_arith(t: &Term) -> Result<Number, ArithError> {
    match t {
        Term::Num(n) => Ok(n.clone()),
        Term::Var(_) => Err(ArithError::NonGround(t.to_string())),
        Term::Compound(name, args) => {
            if !is_arith_functor(name, args.len()) {
                if !t.is_ground() {
                    return Err(ArithError::NonGround(t.to_string()));
                }
                return Err(ArithError::UnknownFunction(format!("{}/{}", name, args.len())));
            }
            let vals = args.iter().map(eval_arith).collect::<Result<Vec<_>, _>>()?;
            apply_op(name, &vals, t)
        }
    }
}

fn apply_op(name: &str, vals: &[Number], whole: &Term) -> Result<Number, ArithError> {
    let v = match (name, vals) {
        ("-", [a]) => -a.0.clone(),
        ("+", [a, b]) => &a.0 + &b.0,
        ("-", [a, b]) => &a.0 - &b.0,
        ("*", [a, b]) => &a.0 * &b.0,
        ("/", [a, b]) => {
            if b.0.is_zero() {
                return Err(ArithError::DivisionByZero(whole.to_string()));
            }
            &a.0 / &b.0
        }
        ("mod", [a, b]) => {
            if !a.is_integer() || !b.is_integer() {
                return Err(ArithError::NotInteger(whole.to_string()));
            }
            if b.0.is_zero() {
                return Err(ArithError::DivisionByZero(whole.to_string()));
            }
            let r = a.0.to_integer().mod_floor(&b.0.to_integer());
            return Ok(Number::from_bigint(r));
        }
        _ => return Err(ArithError::UnknownFunction(format!("{}/{}", name, vals.len()))),
    };
    if v.numer().bits() > MAX_BITS || v.denom().bits() > MAX_BITS {
        return Err(ArithError::TooLarge(name.to_string()));
    }
    Ok(Number(v))
}

/// Fold every arithmetic subterm whose operands are all numbers.
///
/// Arithmetic over non-numbers (variables, atoms) is left symbolic. Errors
/// such as division by zero are only raised for fully numeric operands.
pub fn eval_ground(t: &Term) -> Result<Term, ArithError> {
    match t {
        Term::Var(_) | Term::Num(_) => Ok(t.clone()),
        Term::Compound(name, args) => {
            if args.is_empty() {
                return Ok(t.clone());
            }
            let args = args.iter().map(eval_ground).collect::<Result<Vec<_>, _>>()?;
            if is_arith_functor(name, args.len()) {
                let nums: Option<Vec<Number>> = args.iter().map(|a| a.as_number().cloned()).collect();
                if let Some(nums) = nums {
                    let whole = Term::Compound(name.clone(), args);
                    return apply_op(name, &nums, &whole).map(Term::Num);
                }
            }
            Ok(Term::Compound(name.clone(), args))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn mod_and_division() {
        assert_eq!(eval_arith(&t("12 mod 8")), Ok(Number::int(4)));
        assert!(matches!(eval_arith(&t("8 mod 0")), Err(ArithError::DivisionByZero(_))));
        assert!(matches!(eval_arith(&t("1 / 0")), Err(ArithError::DivisionByZero(_))));
        assert!(matches!(eval_arith(&t("X + 1")), Err(ArithError::NonGround(_))));
        assert!(matches!(eval_arith(&t("f(1)")), Err(ArithError::UnknownFunction(_))));
    }

    #[test]
    fn huge_results_are_refused() {
        let mut x = Term::int(3);
        let mut err = None;
        for _ in 0..20 {
            match eval_arith(&Term::compound("*", vec![x.clone(), x.clone()])) {
                Ok(n) => x = Term::Num(n),
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        assert_eq!(err, Some(ArithError::TooLarge("*".into())));
    }

    #[test]
    fn one_newton_step_is_exact() {
        // Hand arithmetic: (1 + 12/1)/2 = 13/2.
        assert_eq!(eval_arith(&t("(1 + 12/1)/2")), Ok(Number::ratio(13, 2)));
    }

    #[test]
    fn mod_follows_divisor_sign() {
        assert_eq!(eval_arith(&t("-7 mod 3")), Ok(Number::int(2)));
        assert_eq!(eval_arith(&t("7 mod -3")), Ok(Number::int(-2)));
    }

    #[test]
    fn partial_folding_keeps_symbols() {
        assert_eq!(eval_ground(&t("f(1 + 2, X + 1, s * s)")), Ok(t("f(3, X + 1, s * s)")));
        assert_eq!(eval_ground(&t("fib(10 - 1, M)")), Ok(t("fib(9, M)")));
    }
}
