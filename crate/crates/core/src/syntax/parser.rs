use crate::terms::{binary_op, symbol, Assoc, Number, Term, Var};

use super::lexer::{tokenize, Spanned, Tok};
use super::ParseError;

/// A rule as read from source, before validation.
pub(crate) struct RawRule {
    pub name: Option<String>,
    pub kept: Vec<Term>,
    pub removed: Vec<Term>,
    pub propagation: bool,
    pub guard: Option<Vec<Term>>,
    pub body: Vec<Term>,
    pub line: usize,
}

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    anon: u32,
}

impl Parser {
    pub fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, anon: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::Syntax { line, col, message: message.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn expect_end_with_optional_stop(&mut self) -> Result<(), ParseError> {
        if self.is_sym(".") {
            self.bump();
        }
        if self.at_eof() {
            Ok(())
        } else {
            self.error(format!("unexpected {} after the end of the input", describe(self.peek())))
        }
    }

    pub fn parse_rule(&mut self) -> Result<RawRule, ParseError> {
        let line = self.here().0;
        let mut first = self.parse_conj()?;
        let mut name = None;
        if self.is_sym("@") {
            if first.len() != 1 {
                return self.error("rule name must be a single identifier");
            }
            name = Some(match rule_name(&first[0]) {
                Some(n) => n,
                None => return self.error(format!("invalid rule name `{}`", first[0])),
            });
            self.bump();
            first = self.parse_conj()?;
        }
        let (kept, removed, propagation);
        if self.is_sym("\\") {
            self.bump();
            let second = self.parse_conj()?;
            if !self.is_sym("<=>") {
                return self.error("a simpagation rule must use `<=>`");
            }
            self.bump();
            kept = first;
            removed = second;
            propagation = false;
        } else if self.is_sym("<=>") {
            self.bump();
            kept = Vec::new();
            removed = first;
            propagation = false;
        } else if self.is_sym("==>") {
            self.bump();
            kept = first;
            removed = Vec::new();
            propagation = true;
        } else {
            return self.error(format!("expected `<=>`, `==>` or `\\`, found {}", describe(self.peek())));
        }
        let mut body = self.parse_conj()?;
        let mut guard = None;
        if self.is_sym("|") {
            self.bump();
            guard = Some(body);
            body = self.parse_conj()?;
        }
        self.expect_sym(".")?;
        Ok(RawRule { name, kept, removed, propagation, guard, body, line })
    }

    /// Comma-separated conjunction; at least one conjunct.
    pub fn parse_conj(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut out = vec![self.parse_expr(0)?];
        while self.is_sym(",") {
            self.bump();
            out.push(self.parse_expr(0)?);
        }
        Ok(out)
    }

    fn peek_binop(&self) -> Option<(&'static str, u8, Assoc)> {
        let name: &'static str = match self.peek() {
            Tok::Sym(s) => s,
            Tok::Name(n) if n == "mod" => "mod",
            _ => return None,
        };
        binary_op(name).map(|(p, a)| (name, p, a))
    }

    pub fn parse_expr(&mut self, min_prec: u8) -> Result<Term, ParseError> {
        let mut lhs = self.parse_unary()?;
        let mut last_nonassoc: Option<u8> = None;
        while let Some((op, prec, assoc)) = self.peek_binop() {
            if prec < min_prec {
                break;
            }
            if last_nonassoc == Some(prec) {
                return self.error(format!("operator `{op}` is not associative; add parentheses"));
            }
            self.bump();
            let rhs = self.parse_expr(prec + 1)?;
            lhs = Term::Compound(symbol(op), vec![lhs, rhs]);
            last_nonassoc = (assoc == Assoc::None).then_some(prec);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Term, ParseError> {
        if self.is_sym("-") {
            self.bump();
            if let Tok::Int(n) = self.peek().clone() {
                self.bump();
                return Ok(Term::Num(Number::from_bigint(-n)));
            }
            let inner = self.parse_unary()?;
            return Ok(Term::Compound(symbol("-"), vec![inner]));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Term, ParseError> {
        match self.bump() {
            Tok::Int(n) => Ok(Term::Num(Number::from_bigint(n))),
            Tok::Var(name) => {
                if name == "_" {
                    self.anon += 1;
                    Ok(Term::Var(Var::with_index(symbol("_"), self.anon)))
                } else {
                    Ok(Term::Var(Var::new(&name)))
                }
            }
            Tok::Name(name) => {
                if name == "mod" {
                    self.pos -= 1;
                    return self.error("`mod` is an infix operator");
                }
                let mut args = Vec::new();
                if self.is_sym("(") {
                    self.bump();
                    args = self.parse_conj()?;
                    self.expect_sym(")")?;
                }
                Ok(Term::Compound(symbol(&name), args))
            }
            Tok::Sym("(") => {
                let t = self.parse_expr(0)?;
                self.expect_sym(")")?;
                Ok(t)
            }
            other => {
                self.pos -= 1;
                self.error(format!("expected a term, found {}", describe(&other)))
            }
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Name(n) => format!("`{n}`"),
        Tok::Var(v) => format!("`{v}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

/// Rule names are atoms, possibly hyphenated (`non-term`).
fn rule_name(t: &Term) -> Option<String> {
    match t {
        Term::Compound(name, args) if args.is_empty() => Some(name.to_string()),
        Term::Compound(name, args) if &**name == "-" && args.len() == 2 => {
            Some(format!("{}-{}", rule_name(&args[0])?, rule_name(&args[1])?))
        }
        _ => None,
    }
}
