use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Term, Var};

/// Raw pattern-variable bindings built up during one-way matching. May map a
/// variable to itself when a pattern variable and a subject variable share an
/// identity; [`Substitution::from_matching`] drops those.
pub(crate) type Matching = BTreeMap<Var, Term>;

/// A finite mapping from variables to terms.
///
/// Substitutions produced by [`unify`] and by [`Substitution::bind`] are kept
/// idempotent: no variable in the range is also in the domain. Matching
/// substitutions map pattern variables into the subject's variables and are
/// applied in a single simultaneous pass, which is also what `apply` does.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug)]
pub struct Substitution {
    bindings: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn from_matching(m: Matching) -> Self {
        let bindings = m
            .into_iter()
            .filter(|(v, t)| t.as_var() != Some(v))
            .collect();
        Substitution { bindings }
    }

    /// Build an idempotent substitution from arbitrary bindings by resolving
    /// chains to a fixpoint. Returns `None` if the bindings are cyclic.
    pub fn normalized(pairs: impl IntoIterator<Item = (Var, Term)>) -> Option<Self> {
        let mut out = Substitution::new();
        for (v, t) in pairs {
            let t = out.apply(&t);
            let v_now = out.apply(&Term::Var(v));
            match v_now {
                Term::Var(v) => {
                    if t.as_var() == Some(&v) {
                        continue;
                    }
                    if t.occurs(&v) {
                        return None;
                    }
                    out.bind(v, t);
                }
                bound => {
                    // The variable already has a value: both must agree.
                    let mgu = unify(&bound, &t)?;
                    for (w, s) in mgu.bindings {
                        let s = out.apply(&s);
                        if s.occurs(&w) {
                            return None;
                        }
                        out.bind(w, s);
                    }
                }
            }
        }
        Some(out)
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.bindings.get(v)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.bindings.keys()
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |v| self.bindings.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone())))
    }

    pub fn apply_all(&self, ts: &[Term]) -> Vec<Term> {
        ts.iter().map(|t| self.apply(t)).collect()
    }

    /// Add `v ↦ t`, composing into the existing bindings.
    ///
    /// `t` must already be normalized by `self`, and `v` must be unbound and
    /// not occur in `t`.
    pub fn bind(&mut self, v: Var, t: Term) {
        debug_assert!(!self.bindings.contains_key(&v));
        debug_assert!(!t.occurs(&v));
        let single = Substitution { bindings: BTreeMap::from([(v.clone(), t.clone())]) };
        for value in self.bindings.values_mut() {
            if value.occurs(&v) {
                *value = single.apply(value);
            }
        }
        self.bindings.insert(v, t);
    }

    /// Rewrite every bound value with `f`. Used to fold ground arithmetic.
    pub(crate) fn map_values(&mut self, mut f: impl FnMut(&Term) -> Term) {
        for value in self.bindings.values_mut() {
            *value = f(value);
        }
    }

    /// Restrict the substitution to the given variables.
    pub fn restrict(&self, keep: &BTreeSet<Var>) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(v, _)| keep.contains(*v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}↦{t}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<(Var, Term)> for Substitution {
    /// Collect raw bindings without normalization.
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        Substitution { bindings: iter.into_iter().filter(|(v, t)| t.as_var() != Some(v)).collect() }
    }
}

/// Extend `m` so that the pattern matches the subject. Subject variables are
/// never bound. On failure `m` may hold partial bindings.
pub(crate) fn match_into(pattern: &Term, subject: &Term, m: &mut Matching) -> bool {
    match (pattern, subject) {
        (Term::Var(v), _) => match m.get(v) {
            Some(bound) => bound == subject,
            None => {
                m.insert(v.clone(), subject.clone());
                true
            }
        },
        (Term::Num(a), Term::Num(b)) => a == b,
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_into(x, y, m))
        }
        _ => false,
    }
}

/// One-way matching of a conjunction of patterns against a conjunction of
/// subjects of the same length.
pub fn match_terms(patterns: &[Term], subjects: &[Term]) -> Option<Substitution> {
    if patterns.len() != subjects.len() {
        return None;
    }
    let mut m = Matching::new();
    for (p, s) in patterns.iter().zip(subjects) {
        if !match_into(p, s, &mut m) {
            return None;
        }
    }
    Some(Substitution::from_matching(m))
}

/// Most general unifier with occurs check.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    unify_all(&[(a.clone(), b.clone())])
}

/// Simultaneous most general unifier of a list of equations.
pub fn unify_all(pairs: &[(Term, Term)]) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    let mut stack: Vec<(Term, Term)> = pairs.iter().rev().cloned().collect();
    while let Some((l, r)) = stack.pop() {
        let l = sigma.apply(&l);
        let r = sigma.apply(&r);
        match (l, r) {
            (Term::Var(x), Term::Var(y)) if x == y => {}
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if t.occurs(&x) {
                    return None;
                }
                sigma.bind(x, t);
            }
            (Term::Num(a), Term::Num(b)) => {
                if a != b {
                    return None;
                }
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                stack.extend(xs.into_iter().zip(ys).rev());
            }
            _ => return None,
        }
    }
    Some(sigma)
}

/// Rename the variables of `ts` so that none of them is in `taboo`.
///
/// Every variable keeps its name and receives a fresh index above anything in
/// `taboo` or `ts`, so the renaming is a bijection. Returns the renamed terms
/// together with the renaming.
pub fn rename_apart(ts: &[Term], taboo: &BTreeSet<Var>) -> (Vec<Term>, Substitution) {
    let mut order = Vec::new();
    for t in ts {
        t.vars_in_order(&mut order);
    }
    let base = taboo
        .iter()
        .map(|v| v.index)
        .chain(order.iter().map(|v| v.index))
        .max()
        .unwrap_or(0)
        + 1;
    let renaming: Substitution = order
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            let fresh = Var::with_index(v.name.clone(), base + k as u32);
            (v, Term::Var(fresh))
        })
        .collect();
    (renaming.apply_all(ts), renaming)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn subst(pairs: &[(&str, &str)]) -> Substitution {
        pairs.iter().map(|(v, x)| (Var::new(v), t(x))).collect()
    }

    #[test]
    fn match_binds_single_variable() {
        assert_eq!(match_terms(&[t("gcd(I)")], &[t("gcd(8)")]), Some(subst(&[("I", "8")])));
    }

    #[test]
    fn nonlinear_pattern_clash() {
        assert_eq!(match_terms(&[t("f(X,X)")], &[t("f(1,2)")]), None);
    }

    #[test]
    fn match_variable_to_variable() {
        assert_eq!(
            match_terms(&[t("and(X,Y,Z)")], &[t("and(A,B,1)")]),
            Some(subst(&[("X", "A"), ("Y", "B"), ("Z", "1")]))
        );
    }

    #[test]
    fn matching_never_binds_subject_variables() {
        assert_eq!(match_terms(&[t("p(1)")], &[t("p(X)")]), None);
    }

    #[test]
    fn unify_simple_and_occurs_check() {
        let s = unify(&t("min(I)"), &t("min(J)")).unwrap();
        assert_eq!(s.apply(&t("I")), s.apply(&t("J")));
        assert_eq!(unify(&t("X"), &t("f(X)")), None);
    }

    /// Naive recursive-descent unifier: solve the first equation, substitute
    /// into the rest, recurse. Kept independent of `unify_all`.
    fn oracle_unify(eqs: Vec<(Term, Term)>) -> Option<Vec<(Var, Term)>> {
        let Some(((l, r), rest)) = eqs.split_first().map(|(h, r)| (h.clone(), r.to_vec())) else {
            return Some(Vec::new());
        };
        match (&l, &r) {
            _ if l == r => oracle_unify(rest),
            (Term::Var(x), other) | (other, Term::Var(x)) => {
                if other.occurs(x) {
                    return None;
                }
                let one: Substitution = [(x.clone(), other.clone())].into_iter().collect();
                let rest = rest.into_iter().map(|(a, b)| (one.apply(&a), one.apply(&b))).collect();
                let mut solved = oracle_unify(rest)?;
                let tail: Substitution = solved.iter().cloned().collect();
                solved.push((x.clone(), tail.apply(other)));
                Some(solved)
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) if f == g && xs.len() == ys.len() => {
                let mut all: Vec<_> = xs.iter().cloned().zip(ys.iter().cloned()).collect();
                all.extend(rest);
                oracle_unify(all)
            }
            _ => None,
        }
    }

    #[test]
    fn unify_path_agrees_with_oracle() {
        let a = t("path(X,Y,D1)");
        let b = t("path(A,A,3)");
        let oracle = oracle_unify(vec![(a.clone(), b.clone())]).unwrap();
        // Frozen from the oracle: X and Y collapse onto A, D1 becomes 3.
        assert_eq!(oracle.len(), 3);
        let s = unify(&a, &b).unwrap();
        assert_eq!(s, subst(&[("X", "A"), ("Y", "A"), ("D1", "3")]));
        assert_eq!(s.apply(&a), s.apply(&b));
        assert_eq!(s.apply(&a), t("path(A,A,3)"));
    }

    #[test]
    fn apply_examples() {
        let s = subst(&[("I", "8")]);
        assert_eq!(s.apply(&t("gcd(J mod I)")), t("gcd(J mod 8)"));
        assert_eq!(Substitution::new().apply(&t("f(X,g(Y))")), t("f(X,g(Y))"));
        let norm = Substitution::normalized([(Var::new("X"), t("Y")), (Var::new("Y"), t("3"))]).unwrap();
        // Oracle: repeated application to a fixpoint.
        let raw = subst(&[("X", "Y"), ("Y", "3")]);
        let mut fix = t("f(X)");
        loop {
            let next = raw.apply(&fix);
            if next == fix {
                break;
            }
            fix = next;
        }
        assert_eq!(norm.apply(&t("f(X)")), fix);
        assert_eq!(fix, t("f(3)"));
    }

    #[test]
    fn normalized_rejects_cycles() {
        assert!(Substitution::normalized([(Var::new("X"), t("f(Y)")), (Var::new("Y"), t("g(X)"))]).is_none());
    }

    #[test]
    fn rename_apart_examples() {
        let taboo = BTreeSet::from([Var::new("I")]);
        let (renamed, _) = rename_apart(&[t("min(I)")], &taboo);
        let v = renamed[0].args()[0].as_var().unwrap().clone();
        assert!(!taboo.contains(&v));
        assert_eq!(&*v.name, "I");
        // Variance: matching succeeds both ways.
        assert!(match_terms(&renamed, &[t("min(I)")]).is_some());
        assert!(match_terms(&[t("min(I)")], &renamed).is_some());

        let mut acc = BTreeSet::new();
        let (first, _) = rename_apart(&[t("p(X,Y)")], &acc);
        first.iter().for_each(|t| t.collect_vars(&mut acc));
        let (second, _) = rename_apart(&[t("p(X,Y)")], &acc);
        let mut second_vars = BTreeSet::new();
        second.iter().for_each(|t| t.collect_vars(&mut second_vars));
        assert!(acc.is_disjoint(&second_vars));
    }
}
